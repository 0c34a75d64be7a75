//! Scenario runner for the `dephasim` library.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical error,
//! 3 self-check failure.

pub mod config;
pub mod plot;
pub mod scenarios;
pub mod selfcheck;

use std::path::{Path, PathBuf};

use clap::Parser;

use config::{Plan, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("self-check failed")]
    SelfCheck,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::SelfCheck => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dephasim", version, about = "Phase-damping decoherence scenarios")]
pub struct Cli {
    /// Scenario to run; defaults to the config file's `scenario` key.
    #[arg(value_enum)]
    pub scenario: Option<Scenario>,
    /// TOML scenario file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set mc.n_paths=2000` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Master seed (mc.master_seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of Monte Carlo paths (mc.n_paths).
    #[arg(long)]
    pub paths: Option<u64>,
    /// CSV output path (output.csv_path); for `selfcheck`, the report file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG plot path (output.plot_path).
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Suppress the summary line.
    #[arg(long)]
    pub quiet: bool,
    /// Make the self-check use a wrong fourth-moment constant.
    #[arg(long, hide = true)]
    pub inject_moment_fault: bool,
}

/// Caps the rayon pool at `DEPHASIM_THREADS` workers when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("DEPHASIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("DEPHASIM_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot start {n} worker threads: {e}")))
}

fn load(cli: &Cli) -> Result<config::Validated, CliError> {
    let (mut table, base_dir) = match &cli.config {
        Some(path) => {
            let src = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (config::parse_table(&src, &path.display().to_string())?, dir)
        }
        None => (toml::Table::new(), PathBuf::new()),
    };
    for assignment in &cli.overrides {
        config::apply_override(&mut table, assignment)?;
    }
    let set = |table: &mut toml::Table, key: &str, value: String| config::apply_override(table, &format!("{key}={value}"));
    if let Some(seed) = cli.seed {
        set(&mut table, "mc.master_seed", seed.to_string())?;
    }
    if let Some(paths) = cli.paths {
        set(&mut table, "mc.n_paths", paths.to_string())?;
    }
    let toml_string = |p: &Path| toml::Value::String(p.display().to_string()).to_string();
    if let Some(out) = &cli.out {
        set(&mut table, "output.csv_path", toml_string(out))?;
    }
    if let Some(plot) = &cli.plot {
        set(&mut table, "output.plot_path", toml_string(plot))?;
    }
    let raw = config::from_table(table)?;
    let scenario = match (cli.scenario, &raw.scenario) {
        (Some(s), _) => s,
        (None, Some(name)) => name.parse()?,
        (None, None) => {
            return Err(CliError::Config(
                "no scenario given: pass one on the command line or set `scenario` in the config".into(),
            ))
        }
    };
    config::validate(raw, scenario, &base_dir)
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn csv_bytes(table: &scenarios::Table) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Config(format!("CSV encoding failed: {e}"));
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Config(format!("CSV encoding failed: {e}")))
}

/// Runs the CLI and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            if !matches!(e, CliError::SelfCheck) {
                eprintln!("dephasim: {e}");
            }
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let validated = load(cli)?;
    if let Plan::Selfcheck { master_seed } = validated.plan {
        let report = selfcheck::run(master_seed, cli.inject_moment_fault);
        let text = report.render();
        print!("{text}");
        if let Some(path) = &validated.csv_path {
            write(path, text.as_bytes())?;
        }
        return if report.all_passed() {
            Ok(())
        } else {
            eprintln!("dephasim: self-check failed");
            Err(CliError::SelfCheck)
        };
    }

    let outcome = scenarios::run(&validated.plan)?;
    let csv_path = validated.csv_path.as_ref().expect("validated");
    write(csv_path, &csv_bytes(&outcome.table)?)?;
    if let Some(plot) = &validated.plot_path {
        write(plot, outcome.chart.to_svg().as_bytes())?;
    }
    if !cli.quiet {
        println!("{}: {} (wrote {})", validated.scenario, outcome.summary, csv_path.display());
    }
    Ok(())
}
