use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use surgact::nn::{conv1d_backward, conv1d_forward, softmax_cross_entropy, ConvParams, Tensor2};
use surgact::tcn::{CvDefaults, ModelConfig, TcnModel};
use surgact::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn random_tensor(rng: &mut ChaCha8Rng, channels: usize, length: usize) -> Tensor2 {
    Tensor2::from_vec(
        channels,
        length,
        (0..channels * length).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn conv(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = ConvParams::init_uniform(64, 96, 9, &mut rng).unwrap();
    let x = random_tensor(&mut rng, 64, 2000);
    let g = random_tensor(&mut rng, 96, 2000);
    let mut group = c.benchmark_group("conv1d");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("forward", name), &exec, |b, &exec| {
            b.iter(|| conv1d_forward(&x, &p, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("backward", name), &exec, |b, &exec| {
            b.iter(|| conv1d_backward(&x, &p, &g, exec).unwrap())
        });
    }
    group.finish();
}

fn train_step(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = TcnModel::build(&ModelConfig::new(15, 7, CvDefaults::LOUO, 0), 14).unwrap();
    let length = 1500;
    let x = random_tensor(&mut rng, 14, length);
    let y: Vec<usize> = (0..length).map(|_| rng.gen_range(0..7)).collect();
    let mut group = c.benchmark_group("train_step");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("forward_backward", name), &exec, |b, &exec| {
            b.iter(|| {
                let (logits, trace) = model.forward(&x, exec).unwrap();
                let (_, g) = softmax_cross_entropy(&logits, &y, None).unwrap();
                model.backward(&trace, &g, exec).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, conv, train_step);
criterion_main!(benches);
