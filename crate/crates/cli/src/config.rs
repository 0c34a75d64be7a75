//! TOML scenario files and `--set` overrides.
//!
//! ```toml
//! scenario = "pattern"
//!
//! [profile]
//! kind = "markovian"      # sub-markovian | super-markovian-i | super-markovian-ii | noiseless | expression
//! sigma0 = 1.0
//!
//! [grid]
//! t_max = 1.0
//! n_time_samples = 2
//! x_range = [0.0, 6.283185307179586]
//! n_x_samples = 25
//!
//! [mc]
//! n_paths = 100000
//! master_seed = 1
//!
//! [physics]
//! k1 = 1.0
//! k2 = 0.0
//! m = 0.5
//!
//! [output]
//! csv_path = "pattern.csv"
//! plot_path = "pattern.svg"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dephasim::observables::{GaussianPacket, MomentumGrid, PlaneWavePair};
use dephasim::profiles::{builtin_profiles, BuiltinParams};
use dephasim::{
    DecoherenceProfile, DensityMatrix, Hamiltonian, McConfig, PhaseSampler, Regime, SeedSpec,
};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scenario {
    Pattern,
    Entropy,
    Evolve,
    Classify,
    Moments,
    Selfcheck,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Pattern => "pattern",
            Scenario::Entropy => "entropy",
            Scenario::Evolve => "evolve",
            Scenario::Classify => "classify",
            Scenario::Moments => "moments",
            Scenario::Selfcheck => "selfcheck",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <Scenario as clap::ValueEnum>::from_str(s, false)
            .map_err(|_| CliError::Config(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: Option<String>,
    pub profile: Option<ProfileSection>,
    pub grid: Option<GridSection>,
    pub mc: Option<McSection>,
    pub physics: Option<PhysicsSection>,
    pub output: Option<OutputSection>,
    pub classify: Option<ClassifySection>,
    pub moments: Option<MomentsSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: String,
    pub sigma0: Option<f64>,
    pub gamma: Option<f64>,
    pub expr: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t_max: f64,
    pub n_time_samples: usize,
    pub x_range: Option<[f64; 2]>,
    pub n_x_samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub n_paths: Option<u64>,
    pub master_seed: Option<u64>,
    /// `direct` (default) or `pathwise`.
    pub sampler: Option<String>,
    pub n_steps_per_unit_time: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub m: Option<f64>,
    pub sigma0: Option<f64>,
    pub p_max: Option<f64>,
    pub n_momentum: Option<usize>,
    pub hamiltonian: Option<PathBuf>,
    pub density_matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv_path: Option<PathBuf>,
    pub plot_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySection {
    pub horizon: Option<f64>,
    pub window: Option<f64>,
    pub include_builtins: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSection {
    pub n_max: Option<u32>,
}

/// Parses `key=value` where the value is TOML (`3`, `1e-3`, `"text"`,
/// `[0, 1]`); anything that does not parse as TOML is taken as a string.
fn override_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies a dotted-key override such as `mc.n_paths=1000`.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{assignment}' is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed override key '{key}'")));
    }
    let (last, path) = parts.split_last().expect("split yields one part");
    let mut cursor = table;
    for p in path {
        let entry = cursor
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override '{key}': '{p}' is not a section")))?;
    }
    cursor.insert(last.to_string(), override_value(value.trim()));
    Ok(())
}

pub fn parse_table(src: &str, origin: &str) -> Result<toml::Table, CliError> {
    src.parse::<toml::Table>()
        .map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

pub fn from_table(table: toml::Table) -> Result<RawConfig, CliError> {
    RawConfig::deserialize(toml::Value::Table(table))
        .map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
}

fn missing(section: &str, scenario: Scenario) -> CliError {
    CliError::Config(format!("scenario '{scenario}' requires the [{section}] section"))
}

fn missing_key(key: &str, scenario: Scenario) -> CliError {
    CliError::Config(format!("scenario '{scenario}' requires '{key}'"))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be a positive number, got {v}")))
    }
}

fn core(e: dephasim::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Equally spaced samples of `[a, b]`; a single sample is `b`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![b];
    }
    (0..n)
        .map(|k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
        .collect()
}

pub fn build_profile(section: &ProfileSection) -> Result<DecoherenceProfile, CliError> {
    let sigma0 = section.sigma0.unwrap_or(1.0);
    let gamma = section.gamma.unwrap_or(1.0);
    let profile = match section.kind.as_str() {
        "noiseless" => Ok(DecoherenceProfile::noiseless()),
        "expression" => {
            let src = section
                .expr
                .as_deref()
                .ok_or_else(|| CliError::Config("profile kind 'expression' requires 'expr'".into()))?;
            DecoherenceProfile::from_expression(src)
        }
        other => {
            let regime = other.parse::<Regime>().map_err(|_| {
                CliError::Config(format!(
                    "unknown profile kind '{other}' (expected markovian, sub-markovian, \
                     super-markovian-i, super-markovian-ii, noiseless or expression)"
                ))
            })?;
            match regime {
                Regime::Markovian => DecoherenceProfile::markovian(sigma0),
                Regime::SubMarkovian => DecoherenceProfile::sub_markovian(sigma0, gamma),
                Regime::SuperMarkovianI => DecoherenceProfile::super_markovian_i(sigma0),
                Regime::SuperMarkovianII => DecoherenceProfile::super_markovian_ii(sigma0),
            }
        }
    };
    profile.map_err(core)
}

fn build_mc(section: &McSection, scenario: Scenario) -> Result<McConfig, CliError> {
    let n_paths = section.n_paths.ok_or_else(|| missing_key("mc.n_paths", scenario))?;
    let master_seed = section.master_seed.ok_or_else(|| missing_key("mc.master_seed", scenario))?;
    let sampler = match section.sampler.as_deref().unwrap_or("direct") {
        "direct" => PhaseSampler::Direct,
        "pathwise" => PhaseSampler::Pathwise {
            steps_per_unit_time: section.n_steps_per_unit_time.unwrap_or(1000),
        },
        other => return Err(CliError::Config(format!("unknown sampler '{other}'"))),
    };
    let cfg = McConfig::new(n_paths, SeedSpec::new(master_seed)).with_sampler(sampler);
    cfg.validate().map_err(core)?;
    Ok(cfg)
}

/// A fully validated run. Building one performs every check that can fail
/// before computation starts, so errors here never leave output files behind.
#[derive(Debug)]
pub enum Plan {
    Pattern {
        pair: PlaneWavePair,
        profile: DecoherenceProfile,
        times: Vec<f64>,
        xs: Vec<f64>,
        mc: McConfig,
    },
    Entropy {
        packet: GaussianPacket,
        grid: MomentumGrid,
        profile: DecoherenceProfile,
        times: Vec<f64>,
        mc: McConfig,
    },
    Evolve {
        rho0: DensityMatrix,
        hamiltonian: Hamiltonian,
        profile: DecoherenceProfile,
        times: Vec<f64>,
        mc: McConfig,
    },
    Classify {
        profiles: Vec<DecoherenceProfile>,
        horizon: f64,
        window: f64,
    },
    Moments {
        profile: DecoherenceProfile,
        times: Vec<f64>,
        n_max: u32,
        steps_per_unit_time: u32,
        mc: McConfig,
    },
    Selfcheck {
        master_seed: u64,
    },
}

#[derive(Debug)]
pub struct Validated {
    pub scenario: Scenario,
    pub plan: Plan,
    pub csv_path: Option<PathBuf>,
    pub plot_path: Option<PathBuf>,
}

/// Default seed of the self-check report.
pub const SELFCHECK_SEED: u64 = 20_260_101;

pub fn validate(raw: RawConfig, scenario: Scenario, base_dir: &Path) -> Result<Validated, CliError> {
    let output = raw.output.clone();
    let csv_path = output.as_ref().and_then(|o| o.csv_path.clone());
    let plot_path = output.as_ref().and_then(|o| o.plot_path.clone());
    if scenario != Scenario::Selfcheck && csv_path.is_none() {
        return Err(CliError::Config(format!(
            "scenario '{scenario}' requires [output] csv_path (or --out)"
        )));
    }

    let times = |raw: &RawConfig| -> Result<Vec<f64>, CliError> {
        let g = raw.grid.as_ref().ok_or_else(|| missing("grid", scenario))?;
        positive("grid.t_max", g.t_max)?;
        if g.n_time_samples == 0 {
            return Err(CliError::Config("grid.n_time_samples must be positive".into()));
        }
        Ok(linspace(0.0, g.t_max, g.n_time_samples))
    };
    let profile = |raw: &RawConfig| -> Result<DecoherenceProfile, CliError> {
        build_profile(raw.profile.as_ref().ok_or_else(|| missing("profile", scenario))?)
    };
    let mc = |raw: &RawConfig| -> Result<McConfig, CliError> {
        build_mc(raw.mc.as_ref().ok_or_else(|| missing("mc", scenario))?, scenario)
    };
    let physics = || raw.physics.clone().ok_or_else(|| missing("physics", scenario));

    let plan = match scenario {
        Scenario::Pattern => {
            let ph = physics()?;
            let need = |v: Option<f64>, k: &str| v.ok_or_else(|| missing_key(&format!("physics.{k}"), scenario));
            let pair = PlaneWavePair::new(need(ph.k1, "k1")?, need(ph.k2, "k2")?, need(ph.m, "m")?)
                .map_err(core)?;
            let g = raw.grid.as_ref().ok_or_else(|| missing("grid", scenario))?;
            let [x0, x1] = g.x_range.ok_or_else(|| missing_key("grid.x_range", scenario))?;
            let nx = g.n_x_samples.ok_or_else(|| missing_key("grid.n_x_samples", scenario))?;
            if nx == 0 || !x0.is_finite() || !x1.is_finite() || x1 < x0 {
                return Err(CliError::Config(
                    "grid.x_range must be finite and increasing, grid.n_x_samples positive".into(),
                ));
            }
            Plan::Pattern {
                pair,
                profile: profile(&raw)?,
                times: times(&raw)?,
                xs: linspace(x0, x1, nx),
                mc: mc(&raw)?,
            }
        }
        Scenario::Entropy => {
            let ph = physics()?;
            let packet = GaussianPacket::new(
                ph.sigma0.ok_or_else(|| missing_key("physics.sigma0", scenario))?,
                ph.m.ok_or_else(|| missing_key("physics.m", scenario))?,
            )
            .map_err(core)?;
            let mut grid = MomentumGrid::for_packet(&packet);
            if let Some(p) = ph.p_max {
                grid.p_max = p;
            }
            if let Some(n) = ph.n_momentum {
                grid.n_points = n;
            }
            grid.validate(&packet).map_err(core)?;
            Plan::Entropy {
                packet,
                grid,
                profile: profile(&raw)?,
                times: times(&raw)?,
                mc: mc(&raw)?,
            }
        }
        Scenario::Evolve => {
            let ph = physics()?;
            let h_path = ph.hamiltonian.ok_or_else(|| missing_key("physics.hamiltonian", scenario))?;
            let r_path = ph
                .density_matrix
                .ok_or_else(|| missing_key("physics.density_matrix", scenario))?;
            let hamiltonian = dephasim::engine::io::read_hamiltonian(base_dir.join(&h_path))
                .map_err(|e| CliError::Config(format!("{}: {e}", h_path.display())))?;
            let rho0 = dephasim::engine::io::read_density_matrix(base_dir.join(&r_path))
                .map_err(|e| CliError::Config(format!("{}: {e}", r_path.display())))?;
            if rho0.dim() != hamiltonian.dim() {
                return Err(CliError::Config(format!(
                    "density matrix is {0}x{0} but the Hamiltonian has {1} levels",
                    rho0.dim(),
                    hamiltonian.dim()
                )));
            }
            Plan::Evolve {
                rho0,
                hamiltonian,
                profile: profile(&raw)?,
                times: times(&raw)?,
                mc: mc(&raw)?,
            }
        }
        Scenario::Classify => {
            let c = raw.classify.clone().unwrap_or_default();
            let horizon = positive("classify.horizon", c.horizon.unwrap_or(1e3))?;
            let window = c.window.unwrap_or(0.5);
            if !(window > 0.0 && window < 1.0) {
                return Err(CliError::Config(format!("classify.window must lie in (0, 1), got {window}")));
            }
            let mut profiles = Vec::new();
            if c.include_builtins.unwrap_or(true) {
                let params = BuiltinParams {
                    sigma0: raw.profile.as_ref().and_then(|p| p.sigma0).unwrap_or(1.0),
                    gamma: raw.profile.as_ref().and_then(|p| p.gamma).unwrap_or(1.0),
                };
                profiles.extend(builtin_profiles(params).map_err(core)?);
            }
            if let Some(p) = &raw.profile {
                let custom = build_profile(p)?;
                if custom.builtin_regime().is_none() || !c.include_builtins.unwrap_or(true) {
                    profiles.push(custom);
                }
            }
            if profiles.is_empty() {
                return Err(CliError::Config(
                    "nothing to classify: set include_builtins or give a [profile]".into(),
                ));
            }
            Plan::Classify {
                profiles,
                horizon,
                window,
            }
        }
        Scenario::Moments => {
            let n_max = raw.moments.clone().unwrap_or_default().n_max.unwrap_or(6);
            if !(2..=24).contains(&n_max) {
                return Err(CliError::Config(format!("moments.n_max must lie in 2..=24, got {n_max}")));
            }
            let mc = mc(&raw)?;
            let steps = raw
                .mc
                .as_ref()
                .and_then(|m| m.n_steps_per_unit_time)
                .unwrap_or(1000);
            if steps == 0 {
                return Err(CliError::Config("mc.n_steps_per_unit_time must be positive".into()));
            }
            Plan::Moments {
                profile: profile(&raw)?,
                times: times(&raw)?,
                n_max,
                steps_per_unit_time: steps,
                mc,
            }
        }
        Scenario::Selfcheck => Plan::Selfcheck {
            master_seed: raw.mc.as_ref().and_then(|m| m.master_seed).unwrap_or(SELFCHECK_SEED),
        },
    };
    Ok(Validated {
        scenario,
        plan,
        csv_path,
        plot_path,
    })
}
