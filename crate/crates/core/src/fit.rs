//! Least-squares helpers for decay rates.

/// Ordinary least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Exponent `e` in `v_k ~ C 2^{-e k}` fitted on `log2 v_k` against `k`.
/// Non-positive values are skipped.
pub fn dyadic_decay_exponent(points: &[(i32, f64)]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|&(k, v)| (k as f64, v.log2()))
        .unzip();
    linear_fit(&xs, &ys).map(|(s, _)| -s)
}
