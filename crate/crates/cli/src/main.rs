//! `qesr`: qubit-detected ESR simulations from a TOML run configuration.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical guard
//! violation, 4 I/O error.

mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qesr_core::dynamics::SpectralMode;

use crate::config::{parse_config, RunConfig};
use crate::error::CliError;
use crate::run::Subcommand;

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    NarrowPulse,
    ExactConvolution,
    Resolvent,
}

impl From<ModeArg> for SpectralMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::NarrowPulse => SpectralMode::NarrowPulse,
            ModeArg::ExactConvolution => SpectralMode::ExactConvolution,
            ModeArg::Resolvent => SpectralMode::Resolvent,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qesr", version, about = "Qubit-detected ESR: transfer amplitudes, spectra and sensitivity")]
struct Args {
    #[arg(value_enum)]
    command: Subcommand,
    /// TOML run configuration (frequencies in Hz).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_effective_config: bool,
    /// Overrides `numerics.mode`.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::io(format!("reading {}", args.config.display()), e))?;
    let mut cfg = parse_config(&text)?;
    if let Some(m) = args.mode {
        cfg.numerics.mode = m.into();
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn execute(args: &Args) -> Result<(), CliError> {
    let cfg = load(args)?;
    if args.print_effective_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Invalid {
                field: "--threads".into(),
                reason: "must be >= 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid {
                field: "--threads".into(),
                reason: e.to_string(),
            })?;
    }
    let out = PathBuf::from(&cfg.output.dir);
    let summary = run::run(args.command, &cfg, &out)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
