use super::{NnError, Result, Tensor2};

/// Argmax positions recorded by [`maxpool1d`], one per output cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolIndices {
    input_length: usize,
    argmax: Vec<usize>,
}

impl PoolIndices {
    pub fn input_length(&self) -> usize {
        self.input_length
    }
}

/// Non-overlapping max pooling over time. Output length is `⌊T / width⌋`;
/// trailing frames that do not fill a window are dropped.
pub fn maxpool1d(x: &Tensor2, width: usize) -> Result<(Tensor2, PoolIndices)> {
    if width == 0 || x.length() < width {
        return Err(NnError::TooShort {
            length: x.length(),
            width,
        });
    }
    let out_len = x.length() / width;
    let mut out = Tensor2::zeros(x.channels(), out_len);
    let mut argmax = Vec::with_capacity(x.channels() * out_len);
    for c in 0..x.channels() {
        let row = x.row(c);
        let dst = out.row_mut(c);
        for (t, window) in row.chunks_exact(width).enumerate() {
            let mut best = 0;
            for (j, &v) in window.iter().enumerate().skip(1) {
                // strict comparison keeps the lower index on ties
                if v > window[best] {
                    best = j;
                }
            }
            dst[t] = window[best];
            argmax.push(t * width + best);
        }
    }
    Ok((
        out,
        PoolIndices {
            input_length: x.length(),
            argmax,
        },
    ))
}

/// Routes each pooled gradient back to the frame that won the max.
pub fn maxpool1d_backward(indices: &PoolIndices, grad_y: &Tensor2) -> Result<Tensor2> {
    let channels = grad_y.channels();
    if indices.argmax.len() != channels * grad_y.length() {
        return Err(NnError::ShapeMismatch("pool gradient does not match indices".into()));
    }
    let mut gx = Tensor2::zeros(channels, indices.input_length);
    for c in 0..channels {
        let g = grad_y.row(c);
        let idx = &indices.argmax[c * grad_y.length()..(c + 1) * grad_y.length()];
        let dst = gx.row_mut(c);
        for (&i, &gv) in idx.iter().zip(g) {
            dst[i] += gv;
        }
    }
    Ok(gx)
}
