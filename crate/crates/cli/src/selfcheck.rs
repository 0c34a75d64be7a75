//! Built-in consistency checks with a deterministic text report.

use std::fmt::Write as _;

use dephasim::engine::{evolve_exact, evolve_mc};
use dephasim::numerics::QuadratureSpec;
use dephasim::observables::{
    damped_pattern, erf_integral_identity, linear_entropy_closed_form, linear_entropy_closed_form_at,
    linear_entropy_oracle, mc_gaussian_entropy, mc_pattern, purity_gaussian_oracle_at, GaussianPacket,
    MomentumGrid, PlaneWavePair,
};
use dephasim::profiles::{builtin_profiles, classify_regime, BuiltinParams};
use dephasim::stochastic::{mc_central_moments, moment_closed_form, moment_recursion};
use dephasim::{
    DecoherenceProfile, DensityMatrix, Hamiltonian, McConfig, Regime, Result, SeedSpec, TimeGrid,
};
use num_complex::Complex64;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub struct Report {
    pub master_seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = format!("dephasim self-check, master seed {}\n", self.master_seed);
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{:<width$}  {status}  {}", c.name, c.detail);
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(out, "{passed}/{} checks passed", self.checks.len());
        out
    }
}

/// Closed-form central moment, optionally with a deliberately wrong fourth
/// moment (`5λ²` instead of `3λ²`) to prove the checks can fail.
fn reference_moment(n: u32, lambda: f64, faulty: bool) -> Result<f64> {
    if faulty && n == 4 {
        return Ok(5.0 * lambda * lambda);
    }
    moment_closed_form(n, lambda)
}

fn check(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match body() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

pub fn run(master_seed: u64, inject_moment_fault: bool) -> Report {
    let seed = SeedSpec::new(master_seed);
    let builtins = builtin_profiles(BuiltinParams::default()).expect("default parameters are valid");
    let mut checks = Vec::new();

    checks.push(check("moments: Monte Carlo vs closed form", || {
        let profile = DecoherenceProfile::markovian(1.0)?;
        let t = 1.0;
        let lambda = profile.lambda(t)?;
        let est = mc_central_moments(t, &profile, 6, &McConfig::new(40_000, seed.with_stream(1)))?;
        let mut worst: f64 = 0.0;
        for n in 1..=6 {
            let e = &est[n as usize];
            worst = worst.max((e.mean - reference_moment(n, lambda, inject_moment_fault)?).abs() / e.std_err);
        }
        Ok((worst <= 3.0, format!("max deviation {worst:.2} SE over n = 1..6")))
    }));

    checks.push(check("moments: ODE recursion vs closed form", || {
        let grid = TimeGrid::new(2.0, 2000)?;
        let mut worst: f64 = 0.0;
        for profile in &builtins {
            let table = moment_recursion(8, profile, &grid)?;
            let lambda = profile.lambda(2.0)?;
            for n in 0..=8 {
                let closed = reference_moment(n, lambda, inject_moment_fault)?;
                worst = worst.max((table.at_end(n) - closed).abs() / closed.abs().max(1.0));
            }
        }
        Ok((worst <= 1e-5, format!("max relative error {worst:.2e}")))
    }));

    checks.push(check("erf angular identity", || {
        let mut worst: f64 = 0.0;
        for z in [0.1, 1.0, 4.0, 25.0] {
            worst = worst.max(erf_integral_identity(z)?.discrepancy());
        }
        Ok((worst <= 1e-8, format!("max discrepancy {worst:.2e}")))
    }));

    checks.push(check("engine: Monte Carlo vs exact", || {
        let c = Complex64::new;
        let rho0 = DensityMatrix::pure(&[c(0.6, 0.1), c(-0.2, 0.5), c(0.3, -0.4)])?;
        let h = Hamiltonian::new(vec![-0.4, 0.3, 1.2])?;
        let mut total = 0.0;
        for (k, profile) in builtins.iter().enumerate() {
            let exact = evolve_exact(&rho0, &h, 1.5, profile)?;
            let cfg = McConfig::new(20_000, seed.with_stream(10 + k as u64));
            total += evolve_mc(&rho0, &h, 1.5, profile, &cfg)?.fraction_within(&exact, 3.0);
        }
        let fraction = total / builtins.len() as f64;
        Ok((fraction >= 0.95, format!("{:.1}% of entries within 3 SE", 100.0 * fraction)))
    }));

    checks.push(check("interference: Monte Carlo vs damped pattern", || {
        let pair = PlaneWavePair::new(1.0, 0.0, 0.5)?;
        let mut worst: f64 = 0.0;
        for (k, profile) in builtins.iter().enumerate() {
            let cfg = McConfig::new(20_000, seed.with_stream(20 + k as u64));
            for (x, t) in [(0.0, 1.0), (1.0, 2.0), (2.5, 0.5)] {
                let est = mc_pattern(x, t, &pair, profile, &cfg)?;
                worst = worst.max((est.mean - damped_pattern(x, t, &pair, profile)?).abs() / est.std_err);
            }
        }
        let still = PlaneWavePair::new(1.0, -1.0, 1.0)?;
        let zero = mc_pattern(0.3, 2.0, &still, &builtins[1], &McConfig::new(1000, seed))?;
        Ok((
            worst <= 3.0 && zero.std_err == 0.0,
            format!("max deviation {worst:.2} SE; zero-gap std_err {}", zero.std_err),
        ))
    }));

    checks.push(check("entropy: bounds and monotonicity", || {
        let packet = GaussianPacket::new(1.0, 1.0)?;
        let mut ok = true;
        for profile in &builtins {
            let mut last = 0.0;
            for k in 0..=20 {
                let t = 0.25 * k as f64;
                let s = linear_entropy_oracle(t, &packet, profile)?;
                let c = linear_entropy_closed_form(t, &packet, profile)?;
                ok &= (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&c) && s >= last;
                ok &= k != 0 || (s == 0.0 && c == 0.0);
                last = s;
            }
        }
        Ok((ok, "S(0) = 0, 0 <= S <= 1, nondecreasing on 4 profiles".to_string()))
    }));

    checks.push(check("entropy: closed form vs double integral", || {
        let spec = QuadratureSpec::two_dimensional();
        let mut worst: f64 = 0.0;
        for (s0, m, lambda) in [(1.0, 1.0, 1.0), (0.5, 2.0, 3.0), (1.7, 0.4, 0.05), (0.9, 1.3, 250.0)] {
            let packet = GaussianPacket::new(s0, m)?;
            let oracle = 1.0 - purity_gaussian_oracle_at(lambda, &packet, &spec)?;
            worst = worst.max((oracle - linear_entropy_closed_form_at(lambda, &packet)?).abs());
        }
        Ok((worst <= 1e-5, format!("max difference {worst:.2e}")))
    }));

    checks.push(check("entropy: Monte Carlo vs oracle", || {
        let packet = GaussianPacket::new(1.0, 1.0)?;
        let profile = &builtins[1];
        let est = mc_gaussian_entropy(
            1.0,
            &packet,
            profile,
            &MomentumGrid::for_packet(&packet),
            &McConfig::new(1000, seed.with_stream(30)),
        )?;
        let oracle = linear_entropy_oracle(1.0, &packet, profile)?;
        let gap = (est.mean - oracle).abs();
        Ok((
            gap <= 3.0 * est.std_err + 1e-4,
            format!("MC {:.6} vs oracle {oracle:.6} (SE {:.1e})", est.mean, est.std_err),
        ))
    }));

    checks.push(check("regimes: classification at horizon 1000", || {
        let mut names = Vec::new();
        let mut ok = true;
        for profile in &builtins {
            let class = classify_regime(profile, 1e3, 0.5)?;
            ok &= Some(class.regime) == profile.builtin_regime();
            names.push(format!("{:.3}", class.fitted_exponent));
        }
        Ok((ok, format!("tail slopes {}", names.join(", "))))
    }));

    checks.push(check("regimes: entropy ordering at t = 10", || {
        let packet = GaussianPacket::new(1.0, 1.0)?;
        let s = |r| linear_entropy_oracle(10.0, &packet, &DecoherenceProfile::calibrated(r));
        let v = [
            s(Regime::SuperMarkovianII)?,
            s(Regime::Markovian)?,
            s(Regime::SuperMarkovianI)?,
            s(Regime::SubMarkovian)?,
        ];
        let ok = v.windows(2).all(|w| w[0] >= w[1]);
        Ok((ok, format!("II {:.4} >= M {:.4} >= I {:.4} >= sub {:.4}", v[0], v[1], v[2], v[3])))
    }));

    Report { master_seed, checks }
}
