use super::Tensor2;

/// Repeats every frame `factor` times.
pub fn upsample_repeat(x: &Tensor2, factor: usize) -> Tensor2 {
    let len = x.length() * factor;
    let mut y = Tensor2::zeros(x.channels(), len);
    for c in 0..x.channels() {
        let src = x.row(c);
        for (chunk, &v) in y.row_mut(c).chunks_exact_mut(factor).zip(src) {
            chunk.fill(v);
        }
    }
    y
}

/// Sums the gradients of each group of duplicated frames.
pub fn upsample_repeat_backward(grad_y: &Tensor2, factor: usize) -> Tensor2 {
    let len = grad_y.length() / factor;
    let mut gx = Tensor2::zeros(grad_y.channels(), len);
    for c in 0..grad_y.channels() {
        let src = grad_y.row(c);
        for (dst, chunk) in gx.row_mut(c).iter_mut().zip(src.chunks_exact(factor)) {
            *dst = chunk.iter().sum();
        }
    }
    gx
}

/// Crops to `target` frames, or pads by repeating the last frame.
pub fn restore_length(x: &Tensor2, target: usize) -> Tensor2 {
    let mut y = Tensor2::zeros(x.channels(), target);
    let len = x.length();
    for c in 0..x.channels() {
        let src = x.row(c);
        let dst = y.row_mut(c);
        let n = len.min(target);
        dst[..n].copy_from_slice(&src[..n]);
        if target > len && len > 0 {
            dst[len..].fill(src[len - 1]);
        }
    }
    y
}

/// Gradient of [`restore_length`] back onto a `source_len`-frame input.
pub fn restore_length_backward(grad_y: &Tensor2, source_len: usize) -> Tensor2 {
    let mut gx = Tensor2::zeros(grad_y.channels(), source_len);
    let target = grad_y.length();
    for c in 0..grad_y.channels() {
        let g = grad_y.row(c);
        let dst = gx.row_mut(c);
        let n = source_len.min(target);
        dst[..n].copy_from_slice(&g[..n]);
        if target > source_len && source_len > 0 {
            dst[source_len - 1] += g[source_len..].iter().sum::<f64>();
        }
    }
    gx
}
