use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chemoblow::harness::config::parse_override;
use chemoblow::harness::experiment::{evaluate_bound, exit, exit_code, run_experiment, setup};
use chemoblow::harness::record::{bound_report, ADMISSIBILITY_FILE, BOUNDS_FILE};
use chemoblow::harness::{sweep, write_sweep, RunConfig};
use chemoblow::{Error, ExecMode, Result};
use clap::{Args, Parser, Subcommand};

/// Radial flux-limited chemotaxis lab: admissibility checks, blow-up time bounds,
/// simulations and parameter sweeps.
#[derive(Debug, Parser)]
#[command(name = "chemoblow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides run.output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `section.key=value`, applied after loading; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Seed for randomized initial data (overrides run.seed); at most 2^63 - 1.
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check parameters and initial data against the blow-up hypotheses.
    Check(Common),
    /// Evaluate the constants pipeline and the lower bound on the blow-up time.
    Bound(Common),
    /// Run the full experiment and write series, bound report and manifest.
    Run(Common),
    /// Run one experiment per value of a scalar config field.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted config key, e.g. `model.alpha`.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Run the sweep members one after another.
        #[arg(long)]
        sequential: bool,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut overrides = common.overrides.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>>>()?;
    if let Some(seed) = common.seed {
        overrides.push(("run.seed".into(), seed.to_string()));
    }
    RunConfig::load(&common.config, &overrides)
}

fn output_dir(common: &Common, config: &RunConfig) -> Option<PathBuf> {
    common.out.clone().or_else(|| config.run.output.clone())
}

fn require_output(common: &Common, config: &RunConfig) -> Result<PathBuf> {
    output_dir(common, config).ok_or_else(|| Error::Config("no output directory: pass --out or set run.output".into()))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn check(common: &Common) -> Result<i32> {
    let config = load(common)?;
    let s = setup(&config)?;
    let text = s.admissibility.to_text();
    print!("{text}");
    if let Some(dir) = output_dir(common, &config) {
        write_file(&dir, ADMISSIBILITY_FILE, &text)?;
    }
    Ok(if s.admissibility.passed() { exit::OK } else { exit::INADMISSIBLE })
}

fn bound(common: &Common) -> Result<i32> {
    let config = load(common)?;
    let s = setup(&config)?;
    let outcome = evaluate_bound(&config, &s.grid, &s.u0)?;
    let text = bound_report(&outcome);
    print!("{text}");
    if let Some(dir) = output_dir(common, &config) {
        write_file(&dir, BOUNDS_FILE, &text)?;
    }
    Ok(exit::OK)
}

fn run(common: &Common) -> Result<i32> {
    let config = load(common)?;
    let dir = require_output(common, &config)?;
    let record = run_experiment(&config, &dir)?;
    println!(
        "verdict={} t_detect={} T_quadrature={:e} T_le_t_detect={} output={}",
        record.trajectory.verdict.label(),
        record.trajectory.verdict.t_detect().map_or("none".into(), |t| t.to_string()),
        record.bound.t_quadrature,
        record.bound_respected(),
        dir.display()
    );
    Ok(record.exit_code())
}

fn run_sweep(common: &Common, axis: &str, values: &[String], sequential: bool) -> Result<i32> {
    let config = load(common)?;
    let dir = require_output(common, &config)?;
    let mode = if sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    let outcome = sweep(mode, &config, axis, values)?;
    write_sweep(&outcome, &dir)?;
    for r in &outcome.rows {
        println!(
            "{}={} verdict={}{}",
            axis,
            r.value,
            r.verdict,
            r.error.as_ref().map_or(String::new(), |e| format!(" ({e})"))
        );
    }
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(c) => check(c),
        Command::Bound(c) => bound(c),
        Command::Run(c) => run(c),
        Command::Sweep { common, axis, values, sequential } => run_sweep(common, axis, values, *sequential),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
