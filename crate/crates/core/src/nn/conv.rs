use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NnError, Result, Tensor2};
use crate::par::{self, Execution};

/// Weights and bias of a "same"-padded 1-D convolution.
///
/// `weights` is laid out `[out][in][tap]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvParams {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvParams {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel_size: usize) -> Result<Self> {
        if kernel_size == 0 || kernel_size.is_multiple_of(2) {
            return Err(NnError::InvalidParams(format!(
                "kernel size must be odd and positive, got {kernel_size}"
            )));
        }
        if in_channels == 0 || out_channels == 0 {
            return Err(NnError::InvalidParams("zero channels".into()));
        }
        Ok(ConvParams {
            in_channels,
            out_channels,
            kernel_size,
            weights: vec![0.0; out_channels * in_channels * kernel_size],
            bias: vec![0.0; out_channels],
        })
    }

    /// Uniform initialisation in `±sqrt(1 / (in_channels · kernel_size))`
    /// for both weights and bias.
    pub fn init_uniform<R: Rng>(
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut p = ConvParams::zeros(in_channels, out_channels, kernel_size)?;
        let bound = (1.0 / (in_channels * kernel_size) as f64).sqrt();
        for w in p.weights.iter_mut().chain(p.bias.iter_mut()) {
            *w = rng.gen_range(-bound..=bound);
        }
        Ok(p)
    }

    /// Builds parameters from a single-input single-output kernel.
    pub fn single(kernel: &[f64], bias: f64) -> Result<Self> {
        let mut p = ConvParams::zeros(1, 1, kernel.len())?;
        p.weights.copy_from_slice(kernel);
        p.bias[0] = bias;
        Ok(p)
    }

    #[inline]
    pub fn weight(&self, o: usize, i: usize, j: usize) -> f64 {
        self.weights[(o * self.in_channels + i) * self.kernel_size + j]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Gradients produced by [`conv1d_backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub input: Tensor2,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Valid range of output frames `t` for tap offset `s` such that `t + s`
/// indexes the input.
#[inline]
fn tap_range(len: usize, s: isize) -> (usize, usize) {
    let lo = (-s).max(0) as usize;
    let hi = (len as isize - s).clamp(0, len as isize) as usize;
    (lo, hi.max(lo))
}

/// `y[o][t] = b[o] + Σ_{i,j} w[o][i][j] · x[i][t + j − k/2]`, zero padded.
pub fn conv1d_forward(x: &Tensor2, p: &ConvParams, exec: Execution) -> Result<Tensor2> {
    if x.channels() != p.in_channels {
        return Err(NnError::ChannelMismatch {
            expected: p.in_channels,
            actual: x.channels(),
        });
    }
    let len = x.length();
    let half = (p.kernel_size / 2) as isize;
    let mut out = Tensor2::zeros(p.out_channels, len);
    par::for_each_row(exec, out.as_mut_slice(), len, |o, y| {
        y.fill(p.bias[o]);
        for i in 0..p.in_channels {
            let xi = x.row(i);
            for j in 0..p.kernel_size {
                let w = p.weight(o, i, j);
                if w == 0.0 {
                    continue;
                }
                let s = j as isize - half;
                let (lo, hi) = tap_range(len, s);
                let src = &xi[(lo as isize + s) as usize..(hi as isize + s) as usize];
                for (yv, xv) in y[lo..hi].iter_mut().zip(src) {
                    *yv += w * xv;
                }
            }
        }
    });
    Ok(out)
}

/// Exact gradients of [`conv1d_forward`] given the upstream gradient `grad_y`.
pub fn conv1d_backward(x: &Tensor2, p: &ConvParams, grad_y: &Tensor2, exec: Execution) -> Result<ConvGrads> {
    if x.channels() != p.in_channels {
        return Err(NnError::ChannelMismatch {
            expected: p.in_channels,
            actual: x.channels(),
        });
    }
    if grad_y.channels() != p.out_channels || grad_y.length() != x.length() {
        return Err(NnError::ShapeMismatch(format!(
            "upstream gradient {}x{} for output {}x{}",
            grad_y.channels(),
            grad_y.length(),
            p.out_channels,
            x.length()
        )));
    }
    let len = x.length();
    let k = p.kernel_size;
    let half = (k / 2) as isize;

    // dL/dx[i][u] = Σ_{o,j} w[o][i][j] · g[o][u − s_j]
    let mut input = Tensor2::zeros(p.in_channels, len);
    par::for_each_row(exec, input.as_mut_slice(), len, |i, gx| {
        for o in 0..p.out_channels {
            let go = grad_y.row(o);
            for j in 0..k {
                let w = p.weight(o, i, j);
                if w == 0.0 {
                    continue;
                }
                let s = j as isize - half;
                // output frame t reads input frame u = t + s
                let (lo, hi) = tap_range(len, s);
                let dst = &mut gx[(lo as isize + s) as usize..(hi as isize + s) as usize];
                for (gv, g) in dst.iter_mut().zip(&go[lo..hi]) {
                    *gv += w * g;
                }
            }
        }
    });

    // dL/dw[o][i][j] = Σ_t g[o][t] · x[i][t + s_j]
    let mut weights = vec![0.0; p.weights.len()];
    par::for_each_row(exec, &mut weights, p.in_channels * k, |o, gw| {
        let go = grad_y.row(o);
        for i in 0..p.in_channels {
            let xi = x.row(i);
            for j in 0..k {
                let s = j as isize - half;
                let (lo, hi) = tap_range(len, s);
                let src = &xi[(lo as isize + s) as usize..(hi as isize + s) as usize];
                gw[i * k + j] = go[lo..hi].iter().zip(src).map(|(g, xv)| g * xv).sum();
            }
        }
    });

    let bias = (0..p.out_channels).map(|o| grad_y.row(o).iter().sum()).collect();

    Ok(ConvGrads { input, weights, bias })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct evaluation of the defining sum with explicit bounds checks.
    fn oracle(x: &Tensor2, p: &ConvParams) -> Tensor2 {
        let half = (p.kernel_size / 2) as isize;
        let mut y = Tensor2::zeros(p.out_channels, x.length());
        for o in 0..p.out_channels {
            for t in 0..x.length() {
                let mut acc = p.bias[o];
                for i in 0..p.in_channels {
                    for j in 0..p.kernel_size {
                        let u = t as isize + j as isize - half;
                        if u >= 0 && (u as usize) < x.length() {
                            acc += p.weight(o, i, j) * x.get(i, u as usize);
                        }
                    }
                }
                y.set(o, t, acc);
            }
        }
        y
    }

    #[test]
    fn difference_kernel() {
        let x = Tensor2::from_rows(&[vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        let p = ConvParams::single(&[1.0, 0.0, -1.0], 0.0).unwrap();
        let y = conv1d_forward(&x, &p, Execution::Sequential).unwrap();
        assert_eq!(y.row(0), &[-2.0, -2.0, -2.0, 3.0]);
        assert_eq!(oracle(&x, &p), y);
    }

    #[test]
    fn identity_kernel_and_zero_input() {
        let x = Tensor2::from_rows(&[vec![0.5, -1.0, 7.0]]).unwrap();
        let id = ConvParams::single(&[0.0, 1.0, 0.0], 0.0).unwrap();
        assert_eq!(conv1d_forward(&x, &id, Execution::Sequential).unwrap(), x);

        let z = Tensor2::zeros(1, 5);
        let p = ConvParams::single(&[0.3, -0.2, 0.9], 1.25).unwrap();
        let y = conv1d_forward(&z, &p, Execution::Sequential).unwrap();
        assert!(y.row(0).iter().all(|&v| v == 1.25));
    }

    #[test]
    fn matches_oracle_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(cin, cout, k, t) in &[(1, 1, 1, 1), (3, 2, 5, 4), (4, 3, 7, 13), (2, 5, 3, 2)] {
            let p = ConvParams::init_uniform(cin, cout, k, &mut rng).unwrap();
            let x = Tensor2::from_vec(cin, t, (0..cin * t).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let y = conv1d_forward(&x, &p, Execution::Parallel).unwrap();
            let o = oracle(&x, &p);
            for (a, b) in y.as_slice().iter().zip(o.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn channel_mismatch_and_even_kernel() {
        let x = Tensor2::zeros(2, 4);
        let p = ConvParams::single(&[1.0], 0.0).unwrap();
        assert!(matches!(
            conv1d_forward(&x, &p, Execution::Sequential),
            Err(NnError::ChannelMismatch { expected: 1, actual: 2 })
        ));
        assert!(ConvParams::zeros(1, 1, 4).is_err());
    }

    #[test]
    fn backward_is_adjoint_of_forward() {
        // <g, conv(x)> without bias is bilinear; its gradient w.r.t. x and w
        // must reproduce the inner product.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = ConvParams::init_uniform(3, 2, 5, &mut rng).unwrap();
        p.bias.fill(0.0);
        let x = Tensor2::from_vec(3, 9, (0..27).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let g = Tensor2::from_vec(2, 9, (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let y = conv1d_forward(&x, &p, Execution::Sequential).unwrap();
        let lhs: f64 = y.as_slice().iter().zip(g.as_slice()).map(|(a, b)| a * b).sum();
        let grads = conv1d_backward(&x, &p, &g, Execution::Sequential).unwrap();
        let via_x: f64 = grads
            .input
            .as_slice()
            .iter()
            .zip(x.as_slice())
            .map(|(a, b)| a * b)
            .sum();
        let via_w: f64 = grads.weights.iter().zip(&p.weights).map(|(a, b)| a * b).sum();
        assert!((lhs - via_x).abs() < 1e-12);
        assert!((lhs - via_w).abs() < 1e-12);
    }
}
