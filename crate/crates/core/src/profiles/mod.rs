//! Decoherence profiles `(σ(t), λ(t) = ∫₀ᵗ σ²(s) ds)` and their asymptotic
//! regime.
//!
//! Four built-in archetypes cover the taxonomy by the large-t behaviour of
//! λ: bounded (sub-Markovian), linear (Markovian), unbounded but sublinear
//! (super-Markovian type I) and superlinear (super-Markovian type II).
//! User profiles are arithmetic expressions in `t`; their λ is computed by
//! adaptive quadrature.

pub mod expr;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{quad_adaptive, tail_slope, QuadratureSpec};

pub use expr::Expr;

/// The functional form of σ(t).
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseShape {
    /// σ ≡ σ₀, λ = σ₀² t.
    Constant { sigma0: f64 },
    /// σ = σ₀ e^{−γt}, λ = σ₀² (1 − e^{−2γt}) / 2γ.
    ExponentialDecay { sigma0: f64, gamma: f64 },
    /// σ = σ₀ (1 + t)^{−1/4}, λ = 2σ₀² (√(1+t) − 1).
    PowerLawDecay { sigma0: f64 },
    /// σ = σ₀ √t, λ = σ₀² t² / 2.
    SquareRootGrowth { sigma0: f64 },
    /// User expression for σ(t); λ by quadrature.
    Expression(Expr),
}

/// An environment, fully described by its noise amplitude σ(t).
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceProfile {
    shape: NoiseShape,
    label: String,
}

fn check_amplitude(sigma0: f64) -> Result<()> {
    if !(sigma0 >= 0.0) || !sigma0.is_finite() {
        return Err(Error::domain(format!(
            "noise amplitude σ₀ must be finite and >= 0, got {sigma0}"
        )));
    }
    Ok(())
}

impl DecoherenceProfile {
    pub fn markovian(sigma0: f64) -> Result<Self> {
        check_amplitude(sigma0)?;
        Ok(Self {
            shape: NoiseShape::Constant { sigma0 },
            label: "markovian".into(),
        })
    }

    pub fn sub_markovian(sigma0: f64, gamma: f64) -> Result<Self> {
        check_amplitude(sigma0)?;
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::domain(format!(
                "decay rate γ must be finite and > 0, got {gamma}"
            )));
        }
        Ok(Self {
            shape: NoiseShape::ExponentialDecay { sigma0, gamma },
            label: "sub-markovian".into(),
        })
    }

    pub fn super_markovian_i(sigma0: f64) -> Result<Self> {
        check_amplitude(sigma0)?;
        Ok(Self {
            shape: NoiseShape::PowerLawDecay { sigma0 },
            label: "super-markovian-i".into(),
        })
    }

    pub fn super_markovian_ii(sigma0: f64) -> Result<Self> {
        check_amplitude(sigma0)?;
        Ok(Self {
            shape: NoiseShape::SquareRootGrowth { sigma0 },
            label: "super-markovian-ii".into(),
        })
    }

    /// σ ≡ 0: closed-system (unitary) evolution.
    pub fn noiseless() -> Self {
        Self {
            shape: NoiseShape::Constant { sigma0: 0.0 },
            label: "noiseless".into(),
        }
    }

    /// σ(t) given as an expression in `t`, e.g. `"0.5*exp(-t)"`.
    pub fn from_expression(src: &str) -> Result<Self> {
        let expr = Expr::parse(src)?;
        Ok(Self {
            shape: NoiseShape::Expression(expr),
            label: src.trim().to_string(),
        })
    }

    /// The built-in archetype of `regime` scaled so that λ(1) = 1
    /// (γ = 1 for the sub-Markovian profile).
    pub fn calibrated(regime: Regime) -> Self {
        let profile = match regime {
            Regime::Markovian => Self::markovian(1.0),
            Regime::SubMarkovian => {
                Self::sub_markovian((2.0 / -(-2.0f64).exp_m1()).sqrt(), 1.0)
            }
            Regime::SuperMarkovianI => {
                Self::super_markovian_i((0.5 / (2f64.sqrt() - 1.0)).sqrt())
            }
            Regime::SuperMarkovianII => Self::super_markovian_ii(2f64.sqrt()),
        };
        profile.expect("calibrated parameters are valid")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shape(&self) -> &NoiseShape {
        &self.shape
    }

    /// The regime a built-in archetype belongs to by construction.
    pub fn builtin_regime(&self) -> Option<Regime> {
        match self.shape {
            NoiseShape::Constant { .. } => Some(Regime::Markovian),
            NoiseShape::ExponentialDecay { .. } => Some(Regime::SubMarkovian),
            NoiseShape::PowerLawDecay { .. } => Some(Regime::SuperMarkovianI),
            NoiseShape::SquareRootGrowth { .. } => Some(Regime::SuperMarkovianII),
            NoiseShape::Expression(_) => None,
        }
    }

    pub fn sigma(&self, t: f64) -> f64 {
        match &self.shape {
            NoiseShape::Constant { sigma0 } => *sigma0,
            NoiseShape::ExponentialDecay { sigma0, gamma } => sigma0 * (-gamma * t).exp(),
            NoiseShape::PowerLawDecay { sigma0 } => sigma0 * (1.0 + t).powf(-0.25),
            NoiseShape::SquareRootGrowth { sigma0 } => sigma0 * t.sqrt(),
            NoiseShape::Expression(e) => e.eval(t),
        }
    }

    /// The decoherence rate λ̇(t) = σ²(t).
    pub fn sigma_squared(&self, t: f64) -> f64 {
        let s = self.sigma(t);
        s * s
    }

    /// λ(t) = ∫₀ᵗ σ²(s) ds: closed form for built-ins, adaptive quadrature
    /// (relative tolerance 10⁻⁸) for expressions.
    pub fn lambda(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("λ(t) needs finite t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let value = match &self.shape {
            NoiseShape::Constant { sigma0 } => sigma0 * sigma0 * t,
            NoiseShape::ExponentialDecay { sigma0, gamma } => {
                sigma0 * sigma0 * -(-2.0 * gamma * t).exp_m1() / (2.0 * gamma)
            }
            // 2σ₀²(√(1+t) − 1) without cancellation
            NoiseShape::PowerLawDecay { sigma0 } => {
                2.0 * sigma0 * sigma0 * t / ((1.0 + t).sqrt() + 1.0)
            }
            NoiseShape::SquareRootGrowth { sigma0 } => 0.5 * sigma0 * sigma0 * t * t,
            NoiseShape::Expression(_) => {
                let q = quad_adaptive(|s| self.sigma_squared(s), 0.0, t, &QuadratureSpec::default())?;
                q.value
            }
        };
        if !value.is_finite() {
            return Err(Error::Numerical(format!(
                "λ({t}) is not finite for profile '{}'",
                self.label
            )));
        }
        Ok(value)
    }

    /// `lim_{t→∞} λ(t)` when it is known to be finite.
    pub fn lambda_limit(&self) -> Option<f64> {
        match self.shape {
            NoiseShape::ExponentialDecay { sigma0, gamma } => Some(sigma0 * sigma0 / (2.0 * gamma)),
            NoiseShape::Constant { sigma0 } if sigma0 == 0.0 => Some(0.0),
            _ => None,
        }
    }
}

/// Amplitude and decay parameters for [`builtin_profiles`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinParams {
    pub sigma0: f64,
    pub gamma: f64,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        Self {
            sigma0: 1.0,
            gamma: 1.0,
        }
    }
}

/// The four regime archetypes, in the order sub-Markovian, Markovian,
/// super-Markovian I, super-Markovian II.
pub fn builtin_profiles(params: BuiltinParams) -> Result<Vec<DecoherenceProfile>> {
    Ok(vec![
        DecoherenceProfile::sub_markovian(params.sigma0, params.gamma)?,
        DecoherenceProfile::markovian(params.sigma0)?,
        DecoherenceProfile::super_markovian_i(params.sigma0)?,
        DecoherenceProfile::super_markovian_ii(params.sigma0)?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    /// λ bounded: coherence partially survives.
    SubMarkovian,
    /// λ unbounded but λ/t → 0.
    SuperMarkovianI,
    /// λ ∝ t.
    Markovian,
    /// λ/t → ∞: fastest loss of coherence.
    SuperMarkovianII,
}

impl Regime {
    pub const ALL: [Regime; 4] = [
        Regime::SubMarkovian,
        Regime::Markovian,
        Regime::SuperMarkovianI,
        Regime::SuperMarkovianII,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Markovian => "markovian",
            Regime::SubMarkovian => "sub-markovian",
            Regime::SuperMarkovianI => "super-markovian-i",
            Regime::SuperMarkovianII => "super-markovian-ii",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::config(format!("unknown regime '{s}'")))
    }
}

/// Slope cut points for the log-log tail fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    /// slope below this → sub-Markovian
    pub sub_markovian: f64,
    /// slope below this (and above `sub_markovian`) → super-Markovian I
    pub super_markovian_i: f64,
    /// slope up to and including this → Markovian; above → super-Markovian II
    pub markovian: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            sub_markovian: 0.1,
            super_markovian_i: 0.9,
            markovian: 1.1,
        }
    }
}

impl RegimeThresholds {
    pub fn classify(&self, slope: f64) -> Regime {
        if slope < self.sub_markovian {
            Regime::SubMarkovian
        } else if slope < self.super_markovian_i {
            Regime::SuperMarkovianI
        } else if slope <= self.markovian {
            Regime::Markovian
        } else {
            Regime::SuperMarkovianII
        }
    }

    fn nearest(&self, slope: f64) -> f64 {
        [self.sub_markovian, self.super_markovian_i, self.markovian]
            .into_iter()
            .min_by(|a, b| (a - slope).abs().total_cmp(&(b - slope).abs()))
            .expect("three thresholds")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeClass {
    pub regime: Regime,
    /// Tail slope of ln λ against ln t.
    pub fitted_exponent: f64,
    pub confidence_note: String,
}

/// Number of log-spaced samples in the tail window.
const TAIL_SAMPLES: usize = 33;

/// Classifies a profile by the slope of ln λ vs ln t over the tail window
/// `[horizon·(1 − window), horizon]`, with default thresholds.
pub fn classify_regime(profile: &DecoherenceProfile, horizon: f64, window: f64) -> Result<RegimeClass> {
    classify_lambda(|t| profile.lambda(t), horizon, window, &RegimeThresholds::default())
}

/// Classification of an arbitrary λ(t).
pub fn classify_lambda(
    lambda: impl Fn(f64) -> Result<f64>,
    horizon: f64,
    window: f64,
    thresholds: &RegimeThresholds,
) -> Result<RegimeClass> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::domain(format!("horizon must be finite and > 0, got {horizon}")));
    }
    if !(window > 0.0 && window < 1.0) {
        return Err(Error::domain(format!("window must lie in (0, 1), got {window}")));
    }
    let start = horizon * (1.0 - window);
    let ratio = horizon / start;
    let points = (0..TAIL_SAMPLES)
        .map(|i| {
            let t = if i + 1 == TAIL_SAMPLES {
                horizon
            } else {
                start * ratio.powf(i as f64 / (TAIL_SAMPLES - 1) as f64)
            };
            lambda(t).map(|l| (t, l))
        })
        .collect::<Result<Vec<_>>>()?;
    if points.iter().all(|&(_, l)| l == 0.0) {
        return Err(Error::NoDecoherence {
            from: start,
            to: horizon,
        });
    }
    let slope = tail_slope(&points)?;
    let regime = thresholds.classify(slope);
    let nearest = thresholds.nearest(slope);
    Ok(RegimeClass {
        regime,
        fitted_exponent: slope,
        confidence_note: format!(
            "tail slope {slope:.4} on [{start}, {horizon}]; nearest threshold {nearest} is {:.3} away",
            (slope - nearest).abs()
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_lambdas() {
        let c = 0.7;
        let p = DecoherenceProfile::markovian(c).unwrap();
        assert!((p.lambda(3.0).unwrap() - c * c * 3.0).abs() < 1e-15);
        let p = DecoherenceProfile::sub_markovian(1.0, 1.0).unwrap();
        assert!((p.lambda(0.8).unwrap() - (1.0 - (-1.6f64).exp()) / 2.0).abs() < 1e-15);
        assert!(p.lambda(4.0).unwrap() > 0.499);
        let p = DecoherenceProfile::super_markovian_ii(1.0).unwrap();
        assert_eq!(p.lambda(2.0).unwrap(), 2.0);
        assert_eq!(DecoherenceProfile::markovian(1.0).unwrap().lambda(3.0).unwrap(), 3.0);
    }

    #[test]
    fn lambda_at_zero_and_negative_time() {
        for p in builtin_profiles(BuiltinParams::default()).unwrap() {
            assert_eq!(p.lambda(0.0).unwrap(), 0.0);
            assert!(matches!(p.lambda(-1.0), Err(Error::Domain(_))));
        }
        let e = DecoherenceProfile::from_expression("exp(-t)").unwrap();
        assert_eq!(e.lambda(0.0).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_agrees_with_closed_forms() {
        let cases = [
            ("exp(-t)", DecoherenceProfile::sub_markovian(1.0, 1.0).unwrap()),
            ("1.5", DecoherenceProfile::markovian(1.5).unwrap()),
            ("2*(1+t)^(-0.25)", DecoherenceProfile::super_markovian_i(2.0).unwrap()),
            ("0.5*sqrt(t)", DecoherenceProfile::super_markovian_ii(0.5).unwrap()),
        ];
        for (src, builtin) in cases {
            let user = DecoherenceProfile::from_expression(src).unwrap();
            for t in [0.1, 1.0, 4.0, 30.0] {
                let (a, b) = (user.lambda(t).unwrap(), builtin.lambda(t).unwrap());
                assert!(((a - b) / b).abs() < 1e-8, "{src} at {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn lambda_is_monotone_and_derivative_is_sigma_squared() {
        let mut all = builtin_profiles(BuiltinParams { sigma0: 1.3, gamma: 0.4 }).unwrap();
        all.push(DecoherenceProfile::from_expression("1 + 0.5*exp(-t)*t").unwrap());
        for p in &all {
            let mut prev = 0.0;
            for k in 1..=200 {
                let t = 0.05 * k as f64;
                let l = p.lambda(t).unwrap();
                assert!(l >= prev, "{} not monotone at {t}", p.label());
                prev = l;
            }
            for &t in &[0.5, 1.7, 6.0] {
                let h = 1e-4;
                let deriv = (p.lambda(t + h).unwrap() - p.lambda(t - h).unwrap()) / (2.0 * h);
                let rate = p.sigma_squared(t);
                assert!(((deriv - rate) / rate).abs() < 1e-4, "{} at {t}", p.label());
            }
        }
    }

    #[test]
    fn calibrated_profiles_reach_one_at_unit_time() {
        for r in Regime::ALL {
            let l = DecoherenceProfile::calibrated(r).lambda(1.0).unwrap();
            assert!((l - 1.0).abs() < 1e-14, "{r}: {l}");
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(DecoherenceProfile::markovian(-1.0).is_err());
        assert!(DecoherenceProfile::sub_markovian(1.0, 0.0).is_err());
        assert!(DecoherenceProfile::super_markovian_i(f64::NAN).is_err());
        assert!(DecoherenceProfile::from_expression("exp(").is_err());
    }

    #[test]
    fn classification_examples() {
        let th = RegimeThresholds::default();
        let c = classify_lambda(|t| Ok(2.0 * t), 100.0, 0.5, &th).unwrap();
        assert_eq!(c.regime, Regime::Markovian);
        assert!((c.fitted_exponent - 1.0).abs() < 1e-12);
        let c = classify_lambda(|t: f64| Ok(-(-t).exp_m1()), 100.0, 0.5, &th).unwrap();
        assert_eq!(c.regime, Regime::SubMarkovian);
        assert!(c.fitted_exponent.abs() < 1e-12);
        let c = classify_lambda(|t| Ok(t * t), 100.0, 0.5, &th).unwrap();
        assert_eq!(c.regime, Regime::SuperMarkovianII);
        assert!((c.fitted_exponent - 2.0).abs() < 1e-12);
        // the same saturating λ, reached through a user profile σ = e^{−t/2}
        let p = DecoherenceProfile::from_expression("exp(-t/2)").unwrap();
        assert_eq!(classify_regime(&p, 100.0, 0.5).unwrap().regime, Regime::SubMarkovian);
    }

    #[test]
    fn builtins_classify_to_their_own_regime() {
        for p in builtin_profiles(BuiltinParams::default()).unwrap() {
            let c = classify_regime(&p, 1e3, 0.5).unwrap();
            assert_eq!(Some(c.regime), p.builtin_regime(), "{}: {}", p.label(), c.confidence_note);
        }
    }

    #[test]
    fn no_decoherence_is_an_error() {
        assert!(matches!(
            classify_regime(&DecoherenceProfile::noiseless(), 10.0, 0.5),
            Err(Error::NoDecoherence { .. })
        ));
        assert!(classify_regime(&DecoherenceProfile::markovian(1.0).unwrap(), 10.0, 1.0).is_err());
    }

    #[test]
    fn threshold_boundaries() {
        let th = RegimeThresholds::default();
        assert_eq!(th.classify(0.0999), Regime::SubMarkovian);
        assert_eq!(th.classify(0.1), Regime::SuperMarkovianI);
        assert_eq!(th.classify(0.9), Regime::Markovian);
        assert_eq!(th.classify(1.1), Regime::Markovian);
        assert_eq!(th.classify(1.1001), Regime::SuperMarkovianII);
        assert_eq!("super-markovian-i".parse::<Regime>().unwrap(), Regime::SuperMarkovianI);
    }
}
