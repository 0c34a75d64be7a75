//! Error function to double precision.
//!
//! `|x| < 2.5`: the everywhere-positive series
//! `erf x = (2/√π) e^{−x²} Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))`,
//! which has no cancellation. Larger `|x|`: `erfc` from its continued
//! fraction evaluated with the modified Lentz algorithm, then `1 − erfc`.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 2.5;

/// The error function `erf(x) = (2/√π) ∫₀ˣ e^{−s²} ds`.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let value = if ax < SERIES_LIMIT {
        erf_series(ax)
    } else {
        1.0 - erfc_continued_fraction(ax)
    };
    value.copysign(x)
}

/// Complementary error function `1 − erf(x)`, accurate in the far tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= SERIES_LIMIT {
        erfc_continued_fraction(x)
    } else if x <= -SERIES_LIMIT {
        2.0 - erfc_continued_fraction(-x)
    } else {
        1.0 - erf(x)
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// `erfc(x) = e^{−x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))`, x > 0.
fn erfc_continued_fraction(x: f64) -> f64 {
    if x > 27.3 {
        // e^{−x²} underflows.
        return 0.0;
    }
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: composite Simpson on (2/√π) e^{−s²} over [0, x].
    fn erf_simpson(x: f64) -> f64 {
        let panels = 20_000;
        let h = x / panels as f64;
        let g = |s: f64| (-s * s).exp();
        let mut sum = g(0.0) + g(x);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * g(i as f64 * h);
        }
        2.0 / PI.sqrt() * sum * h / 3.0
    }

    #[test]
    fn fixed_values() {
        assert_eq!(erf(0.0), 0.0);
        // mpmath, 30 digits
        assert!((erf(1.0) - 0.842_700_792_949_714_869_3).abs() < 1e-15);
        assert!((erf(0.5) - 0.520_499_877_813_046_537_7).abs() < 1e-15);
        assert!((erf(2.0) - 0.995_322_265_018_952_734_2).abs() < 1e-15);
        assert!((erf(3.0) - 0.999_977_909_503_001_414_6).abs() < 1e-15);
        assert!((erfc(5.0) - 1.537_459_794_428_034_850_2e-12).abs() < 1e-25);
        assert_eq!(erf(f64::INFINITY), 1.0);
        assert_eq!(erf(f64::NEG_INFINITY), -1.0);
    }

    #[test]
    fn odd_symmetry() {
        assert_eq!(erf(-2.0), -erf(2.0));
        assert_eq!(erf(-0.3), -erf(0.3));
    }

    #[test]
    fn matches_quadrature_oracle_on_grid() {
        let mut worst: f64 = 0.0;
        for i in 0..=1000 {
            let x = -6.0 + 12.0 * i as f64 / 1000.0;
            worst = worst.max((erf(x) - erf_simpson(x)).abs());
        }
        assert!(worst < 1e-10, "max deviation {worst:e}");
    }

    #[test]
    fn continuous_across_branch_switch() {
        let below = erf(SERIES_LIMIT - 1e-12);
        let above = erf(SERIES_LIMIT + 1e-12);
        assert!((below - above).abs() < 1e-14);
    }
}
