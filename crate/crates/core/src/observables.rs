//! Two worked scenarios: interference of two plane waves and the linear
//! entropy of a free Gaussian wave packet under dephasing.
//!
//! # Gaussian packet purity
//!
//! The packet `ψ(x,0) ∝ exp(−x²/4σ₀²)` has momentum density
//! `|φ(p)|² = √(2σ₀²/π)·exp(−2σ₀²p²)` and free energies `E_p = p²/2m`. The
//! dephasing propagator multiplies `ρ(p,p′)` by a factor of modulus
//! `exp(−λ(E_p − E_p′)²/2)`, so
//!
//! ```text
//! P(λ) = ∬ |φ(p)|²|φ(p′)|² exp(−λ(p² − p′²)²/4m²) dp dp′.
//! ```
//!
//! In polar coordinates (`p = r cos θ`, `p′ = r sin θ`, `u = r²`) the angular
//! integral is `∫₀^π exp(−z cos²ϑ) dϑ = π e^{−z/2} I₀(z/2)`, which reduces
//! the purity to one dimension:
//!
//! ```text
//! P = κ ∫₀^∞ e^{−κy} e^{−y²} I₀(y²) dy,     κ = 4√2·mσ₀²/√λ.
//! ```
//!
//! [`purity_gaussian_oracle`] evaluates the double integral directly;
//! [`linear_entropy_closed_form`] uses the reduced form. The frequently
//! quoted variant with an `erf(y)/y` kernel ([`linear_entropy_erf_kernel`])
//! replaces the angular integral by `√(π/z) erf(√z)`, which is
//! `∫₀^π exp(−z cos²ϑ) sin ϑ dϑ` instead; it is only the large-λ asymptote
//! and is kept for comparison. See `docs/linear-entropy.md`.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{map_reduce, Accumulator, EstimateWithError, McConfig, Welford};
use crate::numerics::{erf, i0e, quad_adaptive, quad_breakpoints, QuadratureSpec};
use crate::profiles::DecoherenceProfile;

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}

/// Two equally weighted plane waves with momenta `k1`, `k2` and mass `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWavePair {
    pub k1: f64,
    pub k2: f64,
    pub m: f64,
}

impl PlaneWavePair {
    pub fn new(k1: f64, k2: f64, m: f64) -> Result<Self> {
        check_positive("mass", m)?;
        if !k1.is_finite() || !k2.is_finite() {
            return Err(Error::domain("momenta must be finite"));
        }
        let pair = Self { k1, k2, m };
        if !pair.energy_gap().is_finite() {
            return Err(Error::domain("energy gap overflows"));
        }
        Ok(pair)
    }

    /// Δ = (k1² − k2²)/2m.
    pub fn energy_gap(&self) -> f64 {
        (self.k1 * self.k1 - self.k2 * self.k2) / (2.0 * self.m)
    }

    fn phase(&self, x: f64, time: f64) -> f64 {
        (self.k1 - self.k2) * x - self.energy_gap() * time
    }
}

/// `I(x,t) = 1 + cos[(k1 − k2)x − Δt]`.
pub fn unitary_pattern(x: f64, t: f64, pair: &PlaneWavePair) -> f64 {
    1.0 + pair.phase(x, t).cos()
}

/// Fringe visibility `exp(−Δ²λ(t)/2)`.
pub fn fringe_envelope(t: f64, pair: &PlaneWavePair, profile: &DecoherenceProfile) -> Result<f64> {
    check_time(t)?;
    let gap = pair.energy_gap();
    Ok((-0.5 * gap * gap * profile.lambda(t)?).exp())
}

/// `Ī(x,t) = 1 + exp(−Δ²λ(t)/2)·cos[(k1 − k2)x − Δt]`.
pub fn damped_pattern(
    x: f64,
    t: f64,
    pair: &PlaneWavePair,
    profile: &DecoherenceProfile,
) -> Result<f64> {
    Ok(1.0 + fringe_envelope(t, pair, profile)? * pair.phase(x, t).cos())
}

/// Averages the unitary pattern over phase times, `E[I(x, X_t)]`.
pub fn mc_pattern(
    x: f64,
    t: f64,
    pair: &PlaneWavePair,
    profile: &DecoherenceProfile,
    cfg: &McConfig,
) -> Result<EstimateWithError> {
    cfg.validate()?;
    let sampler = cfg.sampler.prepare(t, profile)?;
    let acc = map_reduce(
        cfg.n_paths,
        crate::exec::DEFAULT_CHUNK,
        cfg.exec,
        Welford::default,
        |acc, path| {
            let xt = sampler.draw(&mut cfg.seed.path_rng(path));
            acc.push(unitary_pattern(x, xt, pair));
        },
    );
    Ok(acc.estimate())
}

/// Initial Gaussian packet of position width `sigma0` and mass `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub sigma0: f64,
    pub m: f64,
}

impl GaussianPacket {
    pub fn new(sigma0: f64, m: f64) -> Result<Self> {
        check_positive("packet width σ₀", sigma0)?;
        check_positive("mass", m)?;
        Ok(Self { sigma0, m })
    }

    /// Standard deviation of the momentum density, `1/(2σ₀)`.
    pub fn momentum_width(&self) -> f64 {
        0.5 / self.sigma0
    }

    /// `|φ(p)|² = √(2σ₀²/π)·exp(−2σ₀²p²)`.
    pub fn momentum_density(&self, p: f64) -> f64 {
        let a = 2.0 * self.sigma0 * self.sigma0;
        (a / PI).sqrt() * (-a * p * p).exp()
    }

    /// `κ = 4√2·mσ₀²/√λ`, the single parameter the purity depends on.
    pub fn coherence_parameter(&self, lambda: f64) -> f64 {
        4.0 * 2f64.sqrt() * self.m * self.sigma0 * self.sigma0 / lambda.sqrt()
    }
}

fn lambda_at(t: f64, profile: &DecoherenceProfile) -> Result<f64> {
    check_time(t)?;
    let lambda = profile.lambda(t)?;
    if lambda < 0.0 {
        return Err(Error::domain(format!("λ({t}) = {lambda} is negative")));
    }
    Ok(lambda)
}

/// Purity by direct two-dimensional quadrature (relative tolerance 10⁻⁶).
pub fn purity_gaussian_oracle(
    t: f64,
    packet: &GaussianPacket,
    profile: &DecoherenceProfile,
) -> Result<f64> {
    purity_gaussian_oracle_at(lambda_at(t, profile)?, packet, &QuadratureSpec::two_dimensional())
}

/// `1 − purity_gaussian_oracle`.
pub fn linear_entropy_oracle(
    t: f64,
    packet: &GaussianPacket,
    profile: &DecoherenceProfile,
) -> Result<f64> {
    Ok(1.0 - purity_gaussian_oracle(t, packet, profile)?)
}

/// The double-integral purity at a given λ.
///
/// The integrand is even in both momenta, so only the positive quadrant is
/// integrated. The inner integral is split at `p′ = p`, where the dephasing
/// factor peaks, and a few peak widths either side of it.
pub fn purity_gaussian_oracle_at(
    lambda: f64,
    packet: &GaussianPacket,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("λ must be finite and >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    // 9 standard deviations: |φ|² has dropped by e^{−40.5}
    let cutoff = 9.0 * packet.momentum_width();
    let rate = lambda / (4.0 * packet.m * packet.m);
    let inner_spec = QuadratureSpec {
        rel_tol: spec.rel_tol * 0.1,
        abs_tol: 1e-300,
        ..*spec
    };
    // below this momentum the dephasing exponent is quartic rather than quadratic in q − p
    let quartic = rate.powf(-0.25);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let outer = |p: f64| -> f64 {
        let inner = |q: f64| {
            let d = p * p - q * q;
            packet.momentum_density(q) * (-rate * d * d).exp()
        };
        // the peak at q = p has width about 1/(2p√rate)
        let w = (0.5 / (p * rate.sqrt())).min(quartic);
        let mut points = vec![0.0, cutoff];
        points.extend(
            [-8.0, -1.0, 0.0, 1.0, 8.0]
                .iter()
                .map(|k| p + k * w)
                .filter(|&q| q > 0.0 && q < cutoff),
        );
        points.sort_by(f64::total_cmp);
        match quad_breakpoints(&inner, &points, &inner_spec) {
            Ok(q) => packet.momentum_density(p) * q.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let outer_spec = QuadratureSpec {
        abs_tol: 1e-300,
        ..*spec
    };
    let mut outer_points = vec![0.0];
    if quartic < cutoff {
        outer_points.push(quartic);
    }
    outer_points.push(cutoff);
    let result = quad_breakpoints(&outer, &outer_points, &outer_spec);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(4.0 * result?.value)
}

/// Linear entropy from the reduced one-dimensional purity integral
/// `P = ∫₀^∞ e^{−u} · e^{−u²/κ²} I₀(u²/κ²) du` (substituting `u = κy`).
pub fn linear_entropy_closed_form(
    t: f64,
    packet: &GaussianPacket,
    profile: &DecoherenceProfile,
) -> Result<f64> {
    linear_entropy_closed_form_at(lambda_at(t, profile)?, packet)
}

pub fn linear_entropy_closed_form_at(lambda: f64, packet: &GaussianPacket) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("λ must be finite and >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let kappa = packet.coherence_parameter(lambda);
    let inv_k2 = 1.0 / (kappa * kappa);
    // e^{−45} ≈ 3e−20 of the unit total
    const TAIL: f64 = 45.0;
    let mut points = vec![0.0];
    if kappa < TAIL {
        points.push(kappa);
    }
    points.push(TAIL);
    let spec = QuadratureSpec {
        rel_tol: 1e-10,
        abs_tol: 1e-300,
        max_subdivisions: 10_000,
    };
    let q = quad_breakpoints(&|u: f64| (-u).exp() * i0e(u * u * inv_k2), &points, &spec)?;
    Ok((1.0 - q.value).clamp(0.0, 1.0))
}

/// Prefactor choices for [`linear_entropy_erf_kernel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErfKernelPrefactor {
    /// `1/√(16π)`. Its λ → 0⁺ limit is `S = 1 − 1/(2π)` rather than 0.
    Printed,
    /// `1/√π`, fixed by matching the exact purity as λ → ∞. The λ → 0⁺ limit
    /// is then `S = 1 − 2/π`.
    LargeLambda,
}

impl ErfKernelPrefactor {
    pub fn value(&self) -> f64 {
        match self {
            ErfKernelPrefactor::Printed => 1.0 / (16.0 * PI).sqrt(),
            ErfKernelPrefactor::LargeLambda => 1.0 / PI.sqrt(),
        }
    }
}

/// `S = 1 − A·c ∫₀^∞ (dy/y) e^{−cy} erf(y)` with `c = 4mσ₀²/√λ`.
///
/// The integrand's value `2/√π` is substituted below `y = 10⁻⁶`, and the
/// range is truncated once `e^{−cy} erf(y)/y` falls below 10⁻¹⁶ of its peak.
/// Not the exact entropy; see the module documentation.
pub fn linear_entropy_erf_kernel(
    t: f64,
    packet: &GaussianPacket,
    profile: &DecoherenceProfile,
    prefactor: ErfKernelPrefactor,
) -> Result<f64> {
    linear_entropy_erf_kernel_at(lambda_at(t, profile)?, packet, prefactor)
}

pub fn linear_entropy_erf_kernel_at(
    lambda: f64,
    packet: &GaussianPacket,
    prefactor: ErfKernelPrefactor,
) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("λ must be finite and >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let c = 4.0 * packet.m * packet.sigma0 * packet.sigma0 / lambda.sqrt();
    let limit = 2.0 / PI.sqrt();
    let kernel = |y: f64| if y < 1e-6 { limit } else { erf(y) / y };
    // with s = c·y the integral c∫e^{−cy}K(y)dy becomes ∫e^{−s}K(s/c)ds
    let integrand = |s: f64| (-s).exp() * kernel(s / c);
    let upper = crate::numerics::quad::tail_cutoff(&integrand, 0.0, 1e-16)?;
    let mut points = vec![0.0];
    if c < upper {
        points.push(c);
    }
    points.push(upper);
    let spec = QuadratureSpec::default().with_abs_tol(1e-300);
    let q = quad_breakpoints(&integrand, &points, &spec)?;
    Ok(1.0 - prefactor.value() * q.value)
}

/// Symmetric momentum grid `[-p_max, p_max]` with `n_points` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    pub p_max: f64,
    pub n_points: usize,
}

impl MomentumGrid {
    /// `±8` momentum standard deviations, 256 points.
    pub fn for_packet(packet: &GaussianPacket) -> Self {
        Self {
            p_max: 8.0 * packet.momentum_width(),
            n_points: 256,
        }
    }

    /// Requires at least six momentum standard deviations on each side.
    pub fn validate(&self, packet: &GaussianPacket) -> Result<()> {
        let needed = 6.0 * packet.momentum_width();
        if !(self.p_max >= needed * (1.0 - 1e-12)) || !self.p_max.is_finite() {
            return Err(Error::config(format!(
                "momentum grid half-width {} covers less than 6σ = {needed} of |φ(p)|²",
                self.p_max
            )));
        }
        if self.n_points < 3 {
            return Err(Error::config("momentum grid needs at least 3 points"));
        }
        Ok(())
    }

    fn nodes_and_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_points;
        let h = 2.0 * self.p_max / (n - 1) as f64;
        let nodes = (0..n).map(|j| -self.p_max + j as f64 * h).collect();
        let weights = (0..n)
            .map(|j| if j == 0 || j == n - 1 { 0.5 * h } else { h })
            .collect();
        (nodes, weights)
    }
}

/// Running entrywise mean of the upper triangle of `ρ_X(p_j, p_k)`.
struct MeanUpper {
    n: u64,
    mean: Vec<Complex64>,
}

impl Accumulator for MeanUpper {
    fn merge(&mut self, other: Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other;
            return;
        }
        let w = other.n as f64 / (self.n + other.n) as f64;
        for (a, b) in self.mean.iter_mut().zip(other.mean) {
            *a += (b - *a) * w;
        }
        self.n += other.n;
    }
}

/// Trapezoid purity `Σ_jk w_j w_k |ρ_jk|²` of a Hermitian kernel stored as
/// its upper triangle.
fn grid_purity(upper: &[Complex64], weights: &[f64]) -> f64 {
    let n = weights.len();
    let mut idx = 0;
    let mut total = 0.0;
    for j in 0..n {
        for k in j..n {
            let term = weights[j] * weights[k] * upper[idx].norm_sqr();
            total += if j == k { term } else { 2.0 * term };
            idx += 1;
        }
    }
    total
}

/// Linear entropy of the packet by Monte Carlo evolution on a momentum grid.
///
/// Each path evolves the discretized pure state by the phases
/// `exp(−i p²X_t/2m)`; the averaged kernel's purity is computed with the
/// trapezoid rule. Because `Tr ρ̄²` over-counts the `n` self-overlaps, the
/// reported purity is the U-statistic `(n·Tr ρ̄² − Tr ρ_X²)/(n − 1)`, which is
/// unbiased, normalized by the discrete norm `Tr ρ_X²`. Its standard error
/// is `2·sd(Tr ρ_X ρ̄)/√n`.
pub fn mc_gaussian_entropy(
    t: f64,
    packet: &GaussianPacket,
    profile: &DecoherenceProfile,
    grid: &MomentumGrid,
    cfg: &McConfig,
) -> Result<EstimateWithError> {
    grid.validate(packet)?;
    cfg.validate()?;
    let sampler = cfg.sampler.prepare(t, profile)?;
    let (nodes, weights) = grid.nodes_and_weights();
    let n = nodes.len();
    let norm: f64 = nodes
        .iter()
        .zip(&weights)
        .map(|(p, w)| w * packet.momentum_density(*p))
        .sum();
    let amplitude: Vec<f64> = nodes
        .iter()
        .map(|p| (packet.momentum_density(*p) / norm).sqrt())
        .collect();
    let energies: Vec<f64> = nodes.iter().map(|p| p * p / (2.0 * packet.m)).collect();
    let upper_len = n * (n + 1) / 2;

    let state = |x: f64| -> Vec<Complex64> {
        amplitude
            .iter()
            .zip(&energies)
            .map(|(a, e)| {
                let (s, c) = (-e * x).sin_cos();
                Complex64::new(a * c, a * s)
            })
            .collect()
    };
    let chunk = 256;

    let mean = map_reduce(
        cfg.n_paths,
        chunk,
        cfg.exec,
        || MeanUpper {
            n: 0,
            mean: vec![Complex64::new(0.0, 0.0); upper_len],
        },
        |acc, path| {
            let psi = state(sampler.draw(&mut cfg.seed.path_rng(path)));
            acc.n += 1;
            let inv = 1.0 / acc.n as f64;
            let mut idx = 0;
            for j in 0..n {
                for k in j..n {
                    let sample = psi[j] * psi[k].conj();
                    let cur = &mut acc.mean[idx];
                    *cur += (sample - *cur) * inv;
                    idx += 1;
                }
            }
        },
    );

    let single = {
        let psi = state(sampler.draw(&mut cfg.seed.path_rng(0)));
        let upper: Vec<Complex64> = (0..n)
            .flat_map(|j| (j..n).map(move |k| (j, k)))
            .map(|(j, k)| psi[j] * psi[k].conj())
            .collect();
        grid_purity(&upper, &weights)
    };
    let paths = mean.n as f64;
    let purity_u = (paths * grid_purity(&mean.mean, &weights) - single) / (paths - 1.0);

    // full Hermitian kernel for the projection pass
    let mut full = vec![Complex64::new(0.0, 0.0); n * n];
    let mut idx = 0;
    for j in 0..n {
        for k in j..n {
            full[j * n + k] = mean.mean[idx];
            full[k * n + j] = mean.mean[idx].conj();
            idx += 1;
        }
    }
    let projections = map_reduce(cfg.n_paths, chunk, cfg.exec, Welford::default, |acc, path| {
        let psi = state(sampler.draw(&mut cfg.seed.path_rng(path)));
        let b: Vec<Complex64> = psi.iter().zip(&weights).map(|(a, w)| a * *w).collect();
        // b† ρ̄ b
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let row = &full[j * n..(j + 1) * n];
            let rb: Complex64 = row.iter().zip(&b).map(|(r, bk)| r * bk).sum();
            total += b[j].conj() * rb;
        }
        acc.push(total.re);
    });

    let purity = purity_u / single;
    let std_err = 2.0 * (projections.variance() / paths).sqrt() / single;
    Ok(EstimateWithError {
        mean: (1.0 - purity).clamp(0.0, 1.0),
        std_err,
        n_paths: mean.n,
    })
}

/// Both sides of `∫₀^π exp(−z cos²θ) sin θ dθ = √(π/z)·erf(√z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErfIdentity {
    pub z: f64,
    /// Left side by adaptive quadrature.
    pub quadrature: f64,
    /// `√(π/z)·erf(√z)`.
    pub closed_form: f64,
}

impl ErfIdentity {
    pub fn discrepancy(&self) -> f64 {
        (self.quadrature - self.closed_form).abs()
    }
}

fn identity_spec() -> QuadratureSpec {
    QuadratureSpec::default().with_rel_tol(1e-13).with_abs_tol(1e-300)
}

/// Evaluates both sides of the erf angular identity (self-test utility).
pub fn erf_integral_identity(z: f64) -> Result<ErfIdentity> {
    check_positive("z", z)?;
    let quadrature = quad_adaptive(
        |th: f64| (-z * th.cos().powi(2)).exp() * th.sin(),
        0.0,
        PI,
        &identity_spec(),
    )?
    .value;
    let closed_form = (PI / z).sqrt() * erf(z.sqrt());
    Ok(ErfIdentity {
        z,
        quadrature,
        closed_form,
    })
}

/// `∫₀^π exp(−z cos²θ) dθ` by quadrature, paired with its closed form
/// `π e^{−z/2} I₀(z/2)`. This, not the erf expression, is the angular
/// integral that appears in the packet purity.
pub fn cos_squared_angular_integral(z: f64) -> Result<(f64, f64)> {
    check_positive("z", z)?;
    let q = quad_adaptive(|th: f64| (-z * th.cos().powi(2)).exp(), 0.0, PI, &identity_spec())?;
    Ok((q.value, PI * i0e(0.5 * z)))
}
