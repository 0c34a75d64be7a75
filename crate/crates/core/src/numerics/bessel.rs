//! Exponentially scaled modified Bessel function of order zero.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 40.0;

/// `e^{−x} I₀(x)` for `x ≥ 0`.
///
/// Power series `Σ (x/2)^{2k} / (k!)²` (positive terms) below 40, the
/// Hankel asymptotic expansion `(2πx)^{−1/2} Σ ((2k−1)!!)² / (k! (8x)^k)`
/// above it.
pub fn i0e(x: f64) -> f64 {
    debug_assert!(x >= 0.0 || x.is_nan());
    let x = x.abs();
    if x < SERIES_LIMIT {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= q / (k * k);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let odd = (2 * k - 1) as f64;
            term *= odd * odd / (k as f64 * 8.0 * x);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum / (2.0 * PI * x).sqrt()
    }
}
