use super::Tensor2;

/// Default epsilon of the channel normalisation.
pub const CHANNEL_NORM_EPS: f64 = 1e-5;

pub fn relu(x: &Tensor2) -> Tensor2 {
    let mut y = x.clone();
    for v in y.as_mut_slice() {
        *v = v.max(0.0);
    }
    y
}

/// Gradient of [`relu`] given its pre-activation input.
pub fn relu_backward(pre: &Tensor2, grad_y: &Tensor2) -> Tensor2 {
    let mut g = grad_y.clone();
    for (gv, &x) in g.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        if x <= 0.0 {
            *gv = 0.0;
        }
    }
    g
}

/// Index and absolute value of the channel with the largest magnitude at
/// frame `t`. Ties resolve to the lowest channel.
fn frame_peak(x: &Tensor2, t: usize) -> (usize, f64) {
    let mut best = (0, x.get(0, t).abs());
    for c in 1..x.channels() {
        let a = x.get(c, t).abs();
        if a > best.1 {
            best = (c, a);
        }
    }
    best
}

/// Per-frame normalisation `y[c][t] = x[c][t] / (max_c' |x[c'][t]| + eps)`.
pub fn channel_norm(x: &Tensor2, eps: f64) -> Tensor2 {
    let mut y = x.clone();
    for t in 0..x.length() {
        let (_, peak) = frame_peak(x, t);
        let d = peak + eps;
        for c in 0..x.channels() {
            y.set(c, t, x.get(c, t) / d);
        }
    }
    y
}

/// Gradient of [`channel_norm`] w.r.t. its input.
///
/// With `d = |x[p]| + eps` for the peak channel `p`:
/// `∂L/∂x[c] = g[c]/d − [c = p] · sign(x[p]) · Σ_k g[k]·x[k] / d²`.
pub fn channel_norm_backward(x: &Tensor2, eps: f64, grad_y: &Tensor2) -> Tensor2 {
    let mut gx = Tensor2::zeros(x.channels(), x.length());
    for t in 0..x.length() {
        let (p, peak) = frame_peak(x, t);
        let d = peak + eps;
        let mut dot = 0.0;
        for c in 0..x.channels() {
            let g = grad_y.get(c, t);
            dot += g * x.get(c, t);
            gx.set(c, t, g / d);
        }
        let xp = x.get(p, t);
        let sign = if xp > 0.0 {
            1.0
        } else if xp < 0.0 {
            -1.0
        } else {
            0.0
        };
        let cur = gx.get(p, t);
        gx.set(p, t, cur - sign * dot / (d * d));
    }
    gx
}
