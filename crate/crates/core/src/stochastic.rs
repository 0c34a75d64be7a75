//! Brownian paths, Ito integrals of deterministic integrands and the random
//! phase time `X_t = t + ∫₀ᵗ σ(s) dB_s`.
//!
//! # Random streams
//!
//! A [`SeedSpec`] `(master_seed, stream_index)` is expanded into a 256-bit
//! ChaCha8 key by SplitMix64: the state starts at
//! `splitmix64(master_seed) + 4·stream_index·φ` (φ = `0x9E3779B97F4A7C15`)
//! and the next four SplitMix64 outputs are the key words, little-endian.
//! Path `i` of a Monte Carlo run uses ChaCha stream `i` under that key, so
//! every path is reproducible on its own regardless of scheduling.
//!
//! Standard normals are drawn with `rand_distr::StandardNormal` (the
//! 128-layer ziggurat of rand_distr 0.5) on that stream; the versions are
//! pinned in the workspace manifest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::{map_reduce, EstimateWithError, McConfig, Welford, DEFAULT_CHUNK};
use crate::profiles::DecoherenceProfile;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifies an independent, reproducible family of random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            stream_index: 0,
        }
    }

    pub fn with_stream(self, stream_index: u64) -> Self {
        Self {
            stream_index,
            ..self
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut s = self.master_seed;
        let mut state = splitmix64(&mut s)
            .wrapping_add(self.stream_index.wrapping_mul(GOLDEN.wrapping_mul(4)));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        key
    }

    /// Generator for path `path` of this stream family.
    pub fn path_rng(&self, path: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(path);
        rng
    }
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform grid `t_k = k·h`, `k = 0..=n_steps`, on `[0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::config("time grid needs n_steps >= 1"));
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::config(format!(
                "time grid needs a finite t_end > 0, got {t_end}"
            )));
        }
        Ok(Self { t_end, n_steps })
    }

    /// Grid with at least `steps_per_unit` steps per unit of time.
    pub fn with_resolution(t_end: f64, steps_per_unit: u32) -> Result<Self> {
        if steps_per_unit == 0 {
            return Err(Error::config("steps per unit time must be >= 1"));
        }
        let n = (t_end * steps_per_unit as f64).ceil();
        if !n.is_finite() {
            return Err(Error::config(format!("cannot discretize [0, {t_end}]")));
        }
        Self::new(t_end, (n as usize).max(1))
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            k as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|k| self.point(k))
    }
}

/// A discretized standard Brownian motion: `B(t_0) = 0`,
/// `B(t_k) = Σ_{j<k} ΔB_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    grid: TimeGrid,
    increments: Vec<f64>,
}

impl BrownianPath {
    pub fn from_increments(grid: TimeGrid, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != grid.n_steps() {
            return Err(Error::config(format!(
                "{} increments for a grid of {} steps",
                increments.len(),
                grid.n_steps()
            )));
        }
        Ok(Self { grid, increments })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Path values at every grid point, starting with 0.
    pub fn values(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.increments.iter().scan(0.0, |b, d| {
                *b += d;
                Some(*b)
            }))
            .collect()
    }

    pub fn final_value(&self) -> f64 {
        self.increments.iter().sum()
    }
}

/// Draws the `n_steps` i.i.d. `N(0, h)` increments of stream path 0.
pub fn sample_brownian_path(grid: &TimeGrid, seed: &SeedSpec) -> BrownianPath {
    let mut rng = seed.path_rng(0);
    let sd = grid.step().sqrt();
    let increments = (0..grid.n_steps())
        .map(|_| sd * standard_normal(&mut rng))
        .collect();
    BrownianPath {
        grid: *grid,
        increments,
    }
}

/// Left-point (Ito) sum `Σ_k σ(t_k)·ΔB_k`.
pub fn ito_integral(sigma: impl Fn(f64) -> f64, path: &BrownianPath) -> f64 {
    path.increments
        .iter()
        .enumerate()
        .map(|(k, db)| sigma(path.grid.point(k)) * db)
        .sum()
}

/// One realization of the phase time at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTimeSample {
    pub t: f64,
    pub x: f64,
}

/// How `X_t` is drawn in Monte Carlo runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PhaseSampler {
    /// `X_t = t + √λ(t)·Z`; exact in distribution because the Ito integral
    /// of a deterministic integrand is Gaussian with variance λ(t).
    #[default]
    Direct,
    /// Builds a Brownian path on `[0, t]` with `ceil(t·steps_per_unit_time)`
    /// steps and takes the left-point Ito sum.
    Pathwise { steps_per_unit_time: u32 },
}

impl PhaseSampler {
    /// The default pathwise resolution, 10³ steps per unit time.
    pub const fn pathwise() -> Self {
        PhaseSampler::Pathwise {
            steps_per_unit_time: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PhaseSampler::Pathwise {
                steps_per_unit_time: 0,
            } => Err(Error::config("pathwise sampler needs steps_per_unit_time >= 1")),
            _ => Ok(()),
        }
    }

    /// Precomputes everything that does not depend on the random draw.
    pub fn prepare(&self, t: f64, profile: &DecoherenceProfile) -> Result<PreparedSampler> {
        check_time(t)?;
        self.validate()?;
        match *self {
            PhaseSampler::Direct => {
                let lambda = profile.lambda(t)?;
                Ok(PreparedSampler::Direct {
                    t,
                    sd: lambda.sqrt(),
                })
            }
            PhaseSampler::Pathwise {
                steps_per_unit_time,
            } => {
                if t == 0.0 {
                    return Ok(PreparedSampler::Direct { t, sd: 0.0 });
                }
                let grid = TimeGrid::with_resolution(t, steps_per_unit_time)?;
                prepare_pathwise(t, profile, &grid)
            }
        }
    }
}

fn prepare_pathwise(t: f64, profile: &DecoherenceProfile, grid: &TimeGrid) -> Result<PreparedSampler> {
    let sigma: Vec<f64> = (0..grid.n_steps()).map(|k| profile.sigma(grid.point(k))).collect();
    if let Some(k) = sigma.iter().position(|s| !s.is_finite()) {
        return Err(Error::domain(format!(
            "σ is not finite at t = {} on the Ito grid; use the direct sampler for \
             profiles singular at the origin",
            grid.point(k)
        )));
    }
    Ok(PreparedSampler::Pathwise {
        t,
        sqrt_h: grid.step().sqrt(),
        sigma,
    })
}

/// A sampler bound to one time and profile.
#[derive(Debug, Clone, PartialEq)]
pub enum PreparedSampler {
    Direct { t: f64, sd: f64 },
    Pathwise { t: f64, sqrt_h: f64, sigma: Vec<f64> },
}

impl PreparedSampler {
    pub fn time(&self) -> f64 {
        match self {
            PreparedSampler::Direct { t, .. } | PreparedSampler::Pathwise { t, .. } => *t,
        }
    }

    /// Draws one `X_t`. Noise-free direct samplers return `t` without
    /// touching the generator.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            PreparedSampler::Direct { t, sd } => {
                if *sd == 0.0 {
                    *t
                } else {
                    t + sd * standard_normal(rng)
                }
            }
            PreparedSampler::Pathwise { t, sqrt_h, sigma } => {
                let mut integral = 0.0;
                for s in sigma {
                    integral += s * standard_normal(rng);
                }
                t + sqrt_h * integral
            }
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `X_t = t + ∫₀ᵗ σ dB` along a freshly sampled path with `n_steps` steps.
pub fn sample_phase_time(
    t: f64,
    profile: &DecoherenceProfile,
    seed: &SeedSpec,
    n_steps: usize,
) -> Result<PhaseTimeSample> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(PhaseTimeSample { t, x: 0.0 });
    }
    let grid = TimeGrid::new(t, n_steps)?;
    let sampler = prepare_pathwise(t, profile, &grid)?;
    Ok(PhaseTimeSample {
        t,
        x: sampler.draw(&mut seed.path_rng(0)),
    })
}

/// `X_t = t + √λ(t)·Z` drawn directly from its Gaussian law.
pub fn sample_phase_time_direct(
    t: f64,
    profile: &DecoherenceProfile,
    seed: &SeedSpec,
) -> Result<PhaseTimeSample> {
    let sampler = PhaseSampler::Direct.prepare(t, profile)?;
    Ok(PhaseTimeSample {
        t,
        x: sampler.draw(&mut seed.path_rng(0)),
    })
}

/// Closed-form moments of the zero-mean part `X_t − t = ∫₀ᵗ σ dB`:
/// `β_{2k} = (2k)!/(2ᵏ k!)·λᵏ = (2k−1)!!·λᵏ` and `β_{2k+1} = 0`.
pub fn moment_closed_form(n: u32, lambda_t: f64) -> Result<f64> {
    if !(lambda_t >= 0.0) || !lambda_t.is_finite() {
        return Err(Error::domain(format!("λ(t) must be finite and >= 0, got {lambda_t}")));
    }
    if n % 2 == 1 {
        return Ok(0.0);
    }
    let k = n / 2;
    let double_factorial: f64 = (1..=k).map(|j| (2 * j - 1) as f64).product();
    Ok(double_factorial * lambda_t.powi(k as i32))
}

/// Which moment hierarchy [`moment_recursion_with`] integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    /// Moments of `X_t − t`: `dβ_n/dt = n(n−1)/2·σ²·β_{n−2}`, `β_0 = 1`,
    /// `β_1 ≡ 0`. Matches [`moment_closed_form`].
    Central,
    /// Raw moments of `X_t` from Ito's formula including the unit drift:
    /// `dβ_n/dt = n·β_{n−1} + n(n−1)/2·σ²·β_{n−2}`, `β_n(0) = 0` for n ≥ 1.
    Raw,
}

/// β_n(t_k) for `n = 0..=n_max` on every point of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    grid: TimeGrid,
    kind: MomentKind,
    /// `values[n][k]`
    values: Vec<Vec<f64>>,
}

impl MomentTable {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kind(&self) -> MomentKind {
        self.kind
    }

    pub fn n_max(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    pub fn get(&self, n: u32, k: usize) -> f64 {
        self.values[n as usize][k]
    }

    pub fn at_end(&self, n: u32) -> f64 {
        *self.values[n as usize].last().expect("grid has points")
    }

    pub fn series(&self, n: u32) -> &[f64] {
        &self.values[n as usize]
    }
}

/// Central-moment hierarchy of `X_t` for a profile, integrated with RK4.
pub fn moment_recursion(
    n_max: u32,
    profile: &DecoherenceProfile,
    grid: &TimeGrid,
) -> Result<MomentTable> {
    moment_recursion_with(MomentKind::Central, n_max, |t| profile.sigma_squared(t), grid)
}

/// Integrates a moment hierarchy with the classical fixed-step fourth-order
/// Runge–Kutta scheme on `grid`.
pub fn moment_recursion_with(
    kind: MomentKind,
    n_max: u32,
    sigma_squared: impl Fn(f64) -> f64,
    grid: &TimeGrid,
) -> Result<MomentTable> {
    if n_max < 2 {
        return Err(Error::domain(format!(
            "moment recursion needs n_max >= 2, got {n_max}"
        )));
    }
    let len = n_max as usize + 1;
    let rhs = |t: f64, beta: &[f64], out: &mut [f64]| -> Result<()> {
        let s2 = sigma_squared(t);
        if !s2.is_finite() {
            return Err(Error::Numerical(format!("σ²({t}) is not finite")));
        }
        out[0] = 0.0;
        out[1] = match kind {
            MomentKind::Central => 0.0,
            MomentKind::Raw => 1.0,
        };
        for n in 2..len {
            let nf = n as f64;
            let diffusion = 0.5 * nf * (nf - 1.0) * s2 * beta[n - 2];
            out[n] = match kind {
                MomentKind::Central => diffusion,
                MomentKind::Raw => nf * beta[n - 1] + diffusion,
            };
        }
        Ok(())
    };

    let mut values = vec![Vec::with_capacity(grid.n_steps() + 1); len];
    let mut beta = vec![0.0; len];
    beta[0] = 1.0;
    let h = grid.step();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    for (n, series) in values.iter_mut().enumerate() {
        series.push(beta[n]);
    }
    for k in 0..grid.n_steps() {
        let t = grid.point(k);
        rhs(t, &beta, &mut k1)?;
        for i in 0..len {
            tmp[i] = beta[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2)?;
        for i in 0..len {
            tmp[i] = beta[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3)?;
        for i in 0..len {
            tmp[i] = beta[i] + h * k3[i];
        }
        rhs(grid.point(k + 1), &tmp, &mut k4)?;
        for i in 0..len {
            beta[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        for (n, series) in values.iter_mut().enumerate() {
            series.push(beta[n]);
        }
    }
    Ok(MomentTable {
        grid: *grid,
        kind,
        values,
    })
}

/// `(E[cos aX_t], E[sin aX_t]) = e^{−a²λ(t)/2}·(cos at, sin at)`.
pub fn expect_trig(a: f64, t: f64, profile: &DecoherenceProfile) -> Result<(f64, f64)> {
    check_time(t)?;
    let lambda = profile.lambda(t)?;
    let envelope = (-0.5 * a * a * lambda).exp();
    Ok((envelope * (a * t).cos(), envelope * (a * t).sin()))
}

/// Monte Carlo estimates of `E[cos aX_t]` and `E[sin aX_t]`.
pub fn mc_expect_trig(
    a: f64,
    t: f64,
    profile: &DecoherenceProfile,
    cfg: &McConfig,
) -> Result<(EstimateWithError, EstimateWithError)> {
    cfg.validate()?;
    let sampler = cfg.sampler.prepare(t, profile)?;
    let acc = map_reduce(
        cfg.n_paths,
        DEFAULT_CHUNK,
        cfg.exec,
        || vec![Welford::default(); 2],
        |acc, path| {
            let x = sampler.draw(&mut cfg.seed.path_rng(path));
            acc[0].push((a * x).cos());
            acc[1].push((a * x).sin());
        },
    );
    Ok((acc[0].estimate(), acc[1].estimate()))
}

/// Monte Carlo estimates of `E[(X_t − t)ⁿ]` for `n = 0..=n_max`.
pub fn mc_central_moments(
    t: f64,
    profile: &DecoherenceProfile,
    n_max: u32,
    cfg: &McConfig,
) -> Result<Vec<EstimateWithError>> {
    cfg.validate()?;
    let sampler = cfg.sampler.prepare(t, profile)?;
    let len = n_max as usize + 1;
    let acc = map_reduce(
        cfg.n_paths,
        DEFAULT_CHUNK,
        cfg.exec,
        || vec![Welford::default(); len],
        |acc, path| {
            let y = sampler.draw(&mut cfg.seed.path_rng(path)) - t;
            let mut power = 1.0;
            for w in acc.iter_mut() {
                w.push(power);
                power *= y;
            }
        },
    );
    Ok(acc.iter().map(Welford::estimate).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;

    fn grid(t_end: f64, n: usize) -> TimeGrid {
        TimeGrid::new(t_end, n).unwrap()
    }

    #[test]
    fn invalid_grids() {
        assert!(matches!(TimeGrid::new(1.0, 0), Err(Error::Config(_))));
        assert!(matches!(TimeGrid::new(0.0, 10), Err(Error::Config(_))));
        assert!(matches!(TimeGrid::new(-1.0, 10), Err(Error::Config(_))));
        assert!(TimeGrid::new(f64::NAN, 10).is_err());
    }

    #[test]
    fn grid_points() {
        let g = grid(3.0, 3);
        assert_eq!(g.points().collect::<Vec<_>>(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(TimeGrid::with_resolution(0.25, 1000).unwrap().n_steps(), 250);
    }

    #[test]
    fn same_seed_same_path() {
        let g = grid(1.0, 500);
        let s = SeedSpec::new(42).with_stream(7);
        assert_eq!(sample_brownian_path(&g, &s), sample_brownian_path(&g, &s));
        assert_ne!(
            sample_brownian_path(&g, &s),
            sample_brownian_path(&g, &s.with_stream(8))
        );
        assert_ne!(
            sample_brownian_path(&g, &s),
            sample_brownian_path(&g, &SeedSpec::new(43).with_stream(7))
        );
    }

    #[test]
    fn path_values_are_prefix_sums() {
        let g = grid(3.0, 3);
        let p = BrownianPath::from_increments(g, vec![0.1, -0.2, 0.3]).unwrap();
        let v = p.values();
        assert_eq!(v[0], 0.0);
        assert!((v[2] - (-0.1)).abs() < 1e-15);
        assert!((p.final_value() - 0.2).abs() < 1e-15);
        assert!(BrownianPath::from_increments(g, vec![0.1]).is_err());
    }

    #[test]
    fn ito_left_point_sums() {
        let p = BrownianPath::from_increments(grid(3.0, 3), vec![0.1, -0.2, 0.3]).unwrap();
        assert!((ito_integral(|_| 1.0, &p) - 0.2).abs() < 1e-15);
        assert!((ito_integral(|s| s, &p) - 0.4).abs() < 1e-15);
        assert_eq!(ito_integral(|_| 0.0, &p), 0.0);
    }

    #[test]
    fn phase_time_edge_cases() {
        let noisy = DecoherenceProfile::markovian(1.0).unwrap();
        let quiet = DecoherenceProfile::noiseless();
        let s = SeedSpec::new(1);
        assert_eq!(sample_phase_time(0.0, &noisy, &s, 100).unwrap().x, 0.0);
        assert_eq!(sample_phase_time(5.0, &quiet, &s, 100).unwrap().x, 5.0);
        assert_eq!(sample_phase_time_direct(5.0, &quiet, &s).unwrap().x, 5.0);
        assert!(matches!(
            sample_phase_time(-1.0, &noisy, &s, 100),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn singular_sigma_rejected_by_pathwise_sampler_only() {
        let p = DecoherenceProfile::from_expression("t^(-0.25)").unwrap();
        let s = SeedSpec::new(1);
        assert!(matches!(
            sample_phase_time(1.0, &p, &s, 100),
            Err(Error::Domain(_))
        ));
        assert!(sample_phase_time_direct(1.0, &p, &s).is_ok());
    }

    #[test]
    fn closed_form_moments() {
        assert_eq!(moment_closed_form(0, 3.0).unwrap(), 1.0);
        assert_eq!(moment_closed_form(1, 3.0).unwrap(), 0.0);
        assert_eq!(moment_closed_form(2, 1.0).unwrap(), 1.0);
        assert_eq!(moment_closed_form(4, 2.0).unwrap(), 12.0);
        assert_eq!(moment_closed_form(6, 2.0).unwrap(), 15.0 * 8.0);
        assert_eq!(moment_closed_form(7, 5.0).unwrap(), 0.0);
        assert!(moment_closed_form(2, -1.0).is_err());
    }

    #[test]
    fn closed_form_matches_factorial_expression() {
        // (2k)! / (2^k k!)
        for k in 0..10u32 {
            let fact = |m: u32| (1..=m).map(f64::from).product::<f64>();
            let want = fact(2 * k) / (2f64.powi(k as i32) * fact(k));
            assert_eq!(moment_closed_form(2 * k, 1.0).unwrap(), want);
        }
    }

    #[test]
    fn recursion_examples() {
        let markov = DecoherenceProfile::markovian(1.0).unwrap();
        let t = moment_recursion(2, &markov, &grid(1.0, 1000)).unwrap();
        assert!((t.at_end(2) - 1.0).abs() < 1e-6);
        let t = moment_recursion(4, &markov, &grid(2.0, 2000)).unwrap();
        assert!((t.at_end(4) - 12.0).abs() < 1e-5);
        let quiet = DecoherenceProfile::noiseless();
        let t = moment_recursion(6, &quiet, &grid(3.0, 100)).unwrap();
        for n in 0..=6 {
            assert!(t.series(n).iter().all(|&b| b == t.get(n, 0)));
        }
        assert!(matches!(
            moment_recursion(1, &markov, &grid(1.0, 10)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn raw_hierarchy_is_binomial_expansion_of_central() {
        // E[X^n] = Σ_k C(n,k) t^{n−k} β_k
        let profile = DecoherenceProfile::sub_markovian(1.3, 0.7).unwrap();
        let g = grid(1.5, 1500);
        let raw = moment_recursion_with(MomentKind::Raw, 5, |t| profile.sigma_squared(t), &g)
            .unwrap();
        let lambda = profile.lambda(1.5).unwrap();
        for n in 0..=5u32 {
            let mut want = 0.0;
            let mut binom = 1.0;
            for k in 0..=n {
                want += binom * 1.5f64.powi((n - k) as i32) * moment_closed_form(k, lambda).unwrap();
                binom = binom * (n - k) as f64 / (k + 1) as f64;
            }
            assert!((raw.at_end(n) - want).abs() < 1e-8 * want.abs().max(1.0), "n={n}");
        }
    }

    #[test]
    fn trig_expectations() {
        let markov = DecoherenceProfile::markovian(1.0).unwrap();
        assert_eq!(expect_trig(0.0, 2.0, &markov).unwrap(), (1.0, 0.0));
        let (c, s) = expect_trig(1.0, std::f64::consts::PI, &markov).unwrap();
        assert!((c + 0.207_879_576_350_761_9).abs() < 1e-12);
        assert!(s.abs() < 1e-15);
        let quiet = DecoherenceProfile::noiseless();
        let (c, s) = expect_trig(2.0, 0.3, &quiet).unwrap();
        assert_eq!((c, s), ((0.6f64).cos(), (0.6f64).sin()));
        assert!(expect_trig(1.0, -0.1, &markov).is_err());
    }

    #[test]
    fn mc_trig_pi_point() {
        let markov = DecoherenceProfile::markovian(1.0).unwrap();
        let cfg = McConfig::new(100_000, SeedSpec::new(5).with_stream(1));
        let (c, s) = mc_expect_trig(1.0, std::f64::consts::PI, &markov, &cfg).unwrap();
        let (ec, es) = expect_trig(1.0, std::f64::consts::PI, &markov).unwrap();
        assert!(c.within(ec, 3.0), "{c:?} vs {ec}");
        assert!(s.within(es, 3.0), "{s:?} vs {es}");
        assert!((c.mean - ec).abs() < 5e-3);
    }

    #[test]
    fn mc_results_independent_of_schedule() {
        let p = DecoherenceProfile::super_markovian_i(1.0).unwrap();
        let cfg = McConfig::new(10_000, SeedSpec::new(9)).with_sampler(PhaseSampler::Pathwise {
            steps_per_unit_time: 50,
        });
        let seq = mc_central_moments(1.0, &p, 4, &cfg.with_exec(Exec::Sequential)).unwrap();
        let par = mc_central_moments(1.0, &p, 4, &cfg.with_exec(Exec::Parallel)).unwrap();
        assert_eq!(seq, par);
    }
}
