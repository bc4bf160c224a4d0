use super::{NnError, Result, Tensor2};

/// Per-frame softmax over channels.
pub fn softmax(logits: &Tensor2) -> Tensor2 {
    let mut p = Tensor2::zeros(logits.channels(), logits.length());
    for t in 0..logits.length() {
        let max = (0..logits.channels())
            .map(|c| logits.get(c, t))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for c in 0..logits.channels() {
            let e = (logits.get(c, t) - max).exp();
            p.set(c, t, e);
            z += e;
        }
        for c in 0..logits.channels() {
            p.set(c, t, p.get(c, t) / z);
        }
    }
    p
}

/// Mean cross-entropy over unmasked frames and its gradient w.r.t. the logits.
///
/// `mask[t] == false` excludes frame `t` from both loss and gradient.
pub fn softmax_cross_entropy(logits: &Tensor2, targets: &[usize], mask: Option<&[bool]>) -> Result<(f64, Tensor2)> {
    let classes = logits.channels();
    let len = logits.length();
    if targets.len() != len {
        return Err(NnError::ShapeMismatch(format!(
            "{} targets for {len} frames",
            targets.len()
        )));
    }
    if let Some(m) = mask {
        if m.len() != len {
            return Err(NnError::ShapeMismatch(format!(
                "{} mask entries for {len} frames",
                m.len()
            )));
        }
    }
    if let Some(&bad) = targets.iter().find(|&&y| y >= classes) {
        return Err(NnError::TargetOutOfRange { target: bad, classes });
    }
    let active = |t: usize| mask.is_none_or(|m| m[t]);
    let n = (0..len).filter(|&t| active(t)).count();
    if n == 0 {
        return Err(NnError::AllFramesMasked);
    }
    let scale = 1.0 / n as f64;
    let mut grad = Tensor2::zeros(classes, len);
    let mut loss = 0.0;
    for (t, &target) in targets.iter().enumerate() {
        if !active(t) {
            continue;
        }
        let max = (0..classes).map(|c| logits.get(c, t)).fold(f64::NEG_INFINITY, f64::max);
        let log_z = (0..classes).map(|c| (logits.get(c, t) - max).exp()).sum::<f64>().ln();
        loss -= logits.get(target, t) - max - log_z;
        for c in 0..classes {
            let p = (logits.get(c, t) - max - log_z).exp();
            let onehot = if c == target { 1.0 } else { 0.0 };
            grad.set(c, t, (p - onehot) * scale);
        }
    }
    Ok((loss * scale, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(cols: &[&[f64]]) -> Tensor2 {
        Tensor2::from_frames(&cols.iter().map(|c| c.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn uniform_logits_give_ln2() {
        let (loss, grad) = softmax_cross_entropy(&frames(&[&[0.0, 0.0]]), &[0], None).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((grad.get(0, 0) + 0.5).abs() < 1e-12);
        assert!((grad.get(1, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let (loss, grad) = softmax_cross_entropy(&frames(&[&[1000.0, 0.0]]), &[0], None).unwrap();
        assert!(loss.is_finite() && loss.abs() < 1e-12);
        assert!(grad.is_finite());
    }

    #[test]
    fn mask_selects_frames() {
        let logits = frames(&[&[0.3, -1.2, 2.0], &[5.0, 1.0, -3.0]]);
        let (masked, _) = softmax_cross_entropy(&logits, &[2, 0], Some(&[true, false])).unwrap();
        let (single, _) = softmax_cross_entropy(&frames(&[&[0.3, -1.2, 2.0]]), &[2], None).unwrap();
        assert!((masked - single).abs() < 1e-15);
        assert_eq!(
            softmax_cross_entropy(&logits, &[2, 0], Some(&[false, false])).unwrap_err(),
            NnError::AllFramesMasked
        );
    }

    #[test]
    fn target_out_of_range() {
        assert_eq!(
            softmax_cross_entropy(&frames(&[&[0.0, 0.0]]), &[2], None).unwrap_err(),
            NnError::TargetOutOfRange { target: 2, classes: 2 }
        );
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = softmax(&frames(&[&[1.0, 2.0, 3.0], &[-700.0, 700.0, 0.0]]));
        for t in 0..2 {
            let s: f64 = p.column(t).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
