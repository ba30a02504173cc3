//! Matérn 5/2 covariance with per-dimension lengthscales.

const SQRT5: f64 = 2.236_067_977_499_79;

/// Kernel value at scaled distance `r`.
#[inline]
pub fn matern52_r(r: f64, signal_variance: f64) -> f64 {
    let s = SQRT5 * r;
    signal_variance * (1.0 + s + 5.0 / 3.0 * r * r) * (-s).exp()
}

/// Scaled Euclidean distance `sqrt(sum_d ((x_d - y_d) / l_d)^2)`.
#[inline]
pub fn scaled_distance(x: &[f64], y: &[f64], lengthscales: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(lengthscales)
        .map(|((a, b), l)| {
            let d = (a - b) / l;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// `k(x, y) = s2 (1 + sqrt5 r + 5/3 r^2) exp(-sqrt5 r)`.
pub fn matern52(x: &[f64], y: &[f64], lengthscales: &[f64], signal_variance: f64) -> f64 {
    matern52_r(scaled_distance(x, y, lengthscales), signal_variance)
}
