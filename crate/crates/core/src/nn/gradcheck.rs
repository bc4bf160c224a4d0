/// Central-difference step used by the gradient checks.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Compares the analytic gradient of `f` at `point` with central differences.
///
/// `f` returns the scalar value together with its analytic gradient. The
/// result is `max_i |g_i − fd_i| / max(1, |fd_i|)`.
pub fn finite_diff_check<F>(f: F, point: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = f(point);
    assert_eq!(analytic.len(), point.len(), "gradient length must match point");
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let (up, _) = f(&x);
        x[i] = orig - h;
        let (down, _) = f(&x);
        x[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let err = (analytic[i] - fd).abs() / fd.abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}
