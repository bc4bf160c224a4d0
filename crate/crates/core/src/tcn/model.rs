use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelConfig, Result, TcnError};
use crate::nn::{
    channel_norm, channel_norm_backward, conv1d_backward, conv1d_forward, maxpool1d, maxpool1d_backward, relu,
    relu_backward, restore_length, restore_length_backward, upsample_repeat, upsample_repeat_backward, ConvParams,
    NnError, PoolIndices, Tensor2, CHANNEL_NORM_EPS,
};
use crate::par::Execution;

const POOL: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcnModel {
    pub input_channels: usize,
    pub kernel_size: usize,
    pub filters: Vec<usize>,
    pub num_classes: usize,
    pub encoder: Vec<ConvParams>,
    pub decoder: Vec<ConvParams>,
    pub classifier: ConvParams,
}

struct EncoderStep {
    input: Tensor2,
    pre: Tensor2,
    act: Tensor2,
    pool: PoolIndices,
}

struct DecoderStep {
    input: Tensor2,
    pre: Tensor2,
    act: Tensor2,
}

/// Intermediate activations kept for the backward pass.
pub struct ForwardTrace {
    encoder: Vec<EncoderStep>,
    decoder: Vec<DecoderStep>,
    head_input: Tensor2,
    head_length: usize,
}

/// Parameter gradients in [`TcnModel::parameters_mut`] order, plus the
/// gradient w.r.t. the input features.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub tensors: Vec<Vec<f64>>,
    pub input: Tensor2,
}

impl TcnModel {
    /// Deterministic initialisation from `cfg.seed`.
    pub fn build(cfg: &ModelConfig, input_channels: usize) -> Result<Self> {
        cfg.validate()?;
        if input_channels == 0 {
            return Err(TcnError::InvalidConfig("input must have at least one channel".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let k = cfg.kernel_size;
        let f = &cfg.filters;
        let mut encoder = Vec::with_capacity(f.len());
        let mut prev = input_channels;
        for &width in f {
            encoder.push(ConvParams::init_uniform(prev, width, k, &mut rng)?);
            prev = width;
        }
        // mirror of the encoder widths, ending at the first encoder width
        let mut outs: Vec<usize> = f[..f.len() - 1].iter().rev().copied().collect();
        outs.push(f[0]);
        let mut decoder = Vec::with_capacity(outs.len());
        for width in outs {
            decoder.push(ConvParams::init_uniform(prev, width, k, &mut rng)?);
            prev = width;
        }
        let classifier = ConvParams::init_uniform(prev, cfg.num_classes, 1, &mut rng)?;
        Ok(TcnModel {
            input_channels,
            kernel_size: k,
            filters: f.clone(),
            num_classes: cfg.num_classes,
            encoder,
            decoder,
            classifier,
        })
    }

    pub fn min_length(&self) -> usize {
        POOL.pow(self.encoder.len() as u32)
    }

    fn layers(&self) -> impl Iterator<Item = &ConvParams> {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .chain(std::iter::once(&self.classifier))
    }

    /// Weight and bias tensors, encoder first, classifier last.
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.encoder
            .iter_mut()
            .chain(self.decoder.iter_mut())
            .chain(std::iter::once(&mut self.classifier))
            .flat_map(|p| [p.weights.as_mut_slice(), p.bias.as_mut_slice()])
            .collect()
    }

    pub fn parameter_shapes(&self) -> Vec<usize> {
        self.layers().flat_map(|p| [p.weights.len(), p.bias.len()]).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers().map(ConvParams::param_count).sum()
    }

    pub fn flat_parameters(&self) -> Vec<f64> {
        self.layers()
            .flat_map(|p| p.weights.iter().chain(&p.bias).copied())
            .collect()
    }

    pub fn set_flat_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(NnError::ShapeMismatch(format!(
                "{} values for {} parameters",
                values.len(),
                self.parameter_count()
            ))
            .into());
        }
        let mut rest = values;
        for t in self.parameters_mut() {
            let (head, tail) = rest.split_at(t.len());
            t.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers().all(ConvParams::is_finite)
    }

    /// Logits (`classes × T`) for a `features × T` input.
    pub fn forward(&self, x: &Tensor2, exec: Execution) -> Result<(Tensor2, ForwardTrace)> {
        if x.channels() != self.input_channels {
            return Err(NnError::ChannelMismatch {
                expected: self.input_channels,
                actual: x.channels(),
            }
            .into());
        }
        if x.length() < self.min_length() {
            return Err(TcnError::SequenceTooShort {
                length: x.length(),
                minimum: self.min_length(),
            });
        }
        let mut h = x.clone();
        let mut encoder = Vec::with_capacity(self.encoder.len());
        for p in &self.encoder {
            let pre = conv1d_forward(&h, p, exec)?;
            let act = relu(&pre);
            let normed = channel_norm(&act, CHANNEL_NORM_EPS);
            let (pooled, pool) = maxpool1d(&normed, POOL)?;
            encoder.push(EncoderStep {
                input: std::mem::replace(&mut h, pooled),
                pre,
                act,
                pool,
            });
        }
        let mut decoder = Vec::with_capacity(self.decoder.len());
        for p in &self.decoder {
            let input = upsample_repeat(&h, POOL);
            let pre = conv1d_forward(&input, p, exec)?;
            let act = relu(&pre);
            h = channel_norm(&act, CHANNEL_NORM_EPS);
            decoder.push(DecoderStep { input, pre, act });
        }
        let z = conv1d_forward(&h, &self.classifier, exec)?;
        let head_length = z.length();
        let logits = restore_length(&z, x.length());
        Ok((
            logits,
            ForwardTrace {
                encoder,
                decoder,
                head_input: h,
                head_length,
            },
        ))
    }

    pub fn logits(&self, x: &Tensor2, exec: Execution) -> Result<Tensor2> {
        Ok(self.forward(x, exec)?.0)
    }

    /// Backpropagates `grad_logits` through the trace of one forward pass.
    pub fn backward(&self, trace: &ForwardTrace, grad_logits: &Tensor2, exec: Execution) -> Result<ModelGrads> {
        let n_enc = self.encoder.len();
        let n_dec = self.decoder.len();
        let mut enc_grads = vec![(Vec::new(), Vec::new()); n_enc];
        let mut dec_grads = vec![(Vec::new(), Vec::new()); n_dec];

        let gz = restore_length_backward(grad_logits, trace.head_length);
        let head = conv1d_backward(&trace.head_input, &self.classifier, &gz, exec)?;
        let mut g = head.input;

        for (i, (p, step)) in self.decoder.iter().zip(&trace.decoder).enumerate().rev() {
            let g_act = channel_norm_backward(&step.act, CHANNEL_NORM_EPS, &g);
            let g_pre = relu_backward(&step.pre, &g_act);
            let cg = conv1d_backward(&step.input, p, &g_pre, exec)?;
            dec_grads[i] = (cg.weights, cg.bias);
            g = upsample_repeat_backward(&cg.input, POOL);
        }
        for (i, (p, step)) in self.encoder.iter().zip(&trace.encoder).enumerate().rev() {
            let g_norm = maxpool1d_backward(&step.pool, &g)?;
            let g_act = channel_norm_backward(&step.act, CHANNEL_NORM_EPS, &g_norm);
            let g_pre = relu_backward(&step.pre, &g_act);
            let cg = conv1d_backward(&step.input, p, &g_pre, exec)?;
            enc_grads[i] = (cg.weights, cg.bias);
            g = cg.input;
        }

        let mut tensors = Vec::with_capacity(2 * (n_enc + n_dec + 1));
        for (w, b) in enc_grads.into_iter().chain(dec_grads) {
            tensors.push(w);
            tensors.push(b);
        }
        tensors.push(head.weights);
        tensors.push(head.bias);
        Ok(ModelGrads { tensors, input: g })
    }
}

impl ModelGrads {
    pub fn as_slices(&self) -> Vec<&[f64]> {
        self.tensors.iter().map(Vec::as_slice).collect()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.tensors.concat()
    }
}
