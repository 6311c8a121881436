use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use splitbeam::{cmd_noise, cmd_spectrum, cmd_sql, cmd_validate, CliError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "splitbeam", version, about = "Squeezed-light split-detector displacement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file
    #[arg(long)]
    config: PathBuf,
    /// Override a scenario value, e.g. `--set signal.rbw=1e4`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory
    #[arg(long, default_value = "splitbeam-out")]
    out: PathBuf,
    /// Seed for synthesized traces and sampling (overrides run.seed)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sum, difference and single-pixel noise levels
    Noise(Common),
    /// Standard quantum limit table over photon number and beam size
    Sql(Common),
    /// Displacement spectra with coherent and squeezed light
    Spectrum(Common),
    /// Oracle comparisons and invariant checks
    Validate(Common),
}

type Handler = fn(&ScenarioConfig, &std::path::Path) -> Result<splitbeam::Report, CliError>;

fn run(cli: Cli) -> Result<String, CliError> {
    let (common, f): (Common, Handler) = match cli.command {
        Command::Noise(c) => (c, cmd_noise),
        Command::Sql(c) => (c, cmd_sql),
        Command::Spectrum(c) => (c, cmd_spectrum),
        Command::Validate(c) => (c, cmd_validate),
    };
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("run.seed={seed}"));
    }
    let cfg = ScenarioConfig::load(&common.config, &overrides)?;
    let report = f(&cfg, &common.out)?;
    let mut text = report.summary;
    for p in &report.files {
        text.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(text)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("splitbeam: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
