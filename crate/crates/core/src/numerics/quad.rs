//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate falls below `max(abs_tol, rel_tol·|I|)`. The per-interval error
//! estimate is the raw Kronrod–Gauss difference, which is pessimistic for
//! smooth integrands but reliably bounds the true error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (non-negative half).
/// Odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Weights of the embedded 7-point Gauss rule at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and budget for [`quad_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 10_000,
        }
    }
}

impl QuadratureSpec {
    /// Defaults for nested (two-dimensional) integration.
    pub fn two_dimensional() -> Self {
        Self {
            rel_tol: 1e-6,
            ..Self::default()
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_subdivisions < 1 {
            return Err(Error::config(format!(
                "quadrature tolerances must be positive and max_subdivisions >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`.
///
/// `b` may be `f64::INFINITY`, in which case the integrand must decay
/// exponentially and the range is truncated at an automatically detected
/// cutoff (see [`tail_cutoff`]).
pub fn quad_adaptive<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    if b == f64::INFINITY {
        let upper = tail_cutoff(&f, a, 1e-17)?;
        return quad_breakpoints(&f, &[a, upper], spec);
    }
    quad_breakpoints(&f, &[a, b], spec)
}

/// Integrates over `[points[0], points[last]]`, seeding the adaptive
/// subdivision with the given interior breakpoints. Useful when the caller
/// knows where the integrand peaks or kinks.
pub fn quad_breakpoints<F>(f: &F, points: &[f64], spec: &QuadratureSpec) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if points.len() < 2 {
        return Err(Error::domain("need at least two integration limits"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::domain(format!("integration limits must be finite: {points:?}")));
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain(format!("integration limits must be ordered: {points:?}")));
    }

    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod15(f, w[0], w[1]));
        }
    }
    if heap.is_empty() {
        return Ok(Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions: 0,
        });
    }

    let mut subdivisions = heap.len();
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !value.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite integral on [{}, {}]",
                points[0],
                points[points.len() - 1]
            )));
        }
        let target = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= target {
            return Ok(Quadrature {
                value,
                error_estimate: error,
                subdivisions,
            });
        }

        let worst = *heap.peek().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        // Interval can no longer be split in floating point.
        let exhausted = subdivisions >= spec.max_subdivisions || !(worst.a < mid && mid < worst.b);
        if exhausted {
            // Accept results dominated by rounding noise rather than failing.
            if error <= 50.0 * f64::EPSILON * value.abs().max(spec.abs_tol) {
                return Ok(Quadrature {
                    value,
                    error_estimate: error,
                    subdivisions,
                });
            }
            return Err(Error::Quadrature {
                lower: points[0],
                upper: points[points.len() - 1],
                estimate: value,
                error_estimate: error,
                subdivisions,
            });
        }
        heap.pop();
        heap.push(kronrod15(f, worst.a, mid));
        heap.push(kronrod15(f, mid, worst.b));
        subdivisions += 1;
    }
}

/// Finds an upper limit `b > a` past which an exponentially decaying
/// integrand is negligible: `|f(y)|·(y − a) < rel·peak` for two successive
/// doublings, where `peak` is the largest `|f|` seen while scanning.
pub fn tail_cutoff<F>(f: &F, a: f64, rel: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut peak = f(a).abs();
    let mut width: f64 = 1.0;
    let mut quiet = 0;
    for _ in 0..1100 {
        let y = a + width;
        let v = f(y).abs();
        if !v.is_finite() {
            return Err(Error::Numerical(format!("integrand not finite at {y}")));
        }
        peak = peak.max(v);
        if v * width <= rel * peak {
            quiet += 1;
            if quiet == 2 {
                return Ok(y);
            }
        } else {
            quiet = 0;
        }
        width *= 2.0;
        if !width.is_finite() {
            break;
        }
    }
    Err(Error::Numerical(format!(
        "integrand does not decay on [{a}, ∞); cannot truncate the range"
    )))
}
