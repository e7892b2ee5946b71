use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qsym::output::Format;
use qsym::{run, Command, RunOptions, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "qsym", version, about = "Quasisymmetry checks, guiding-centre orbits and GS solves")]
struct Cli {
    /// Run config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "qsym-out")]
    out: PathBuf,
    #[arg(long, global = true, env = "QSYM_THREADS")]
    threads: Option<usize>,
    /// Overrides sampling.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Format of the data artifact; report.json is always JSON.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Exit with status 3 if any check fails.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Pointwise quasisymmetry, consequence and Killing residuals.
    Verify,
    /// Guiding-centre orbit with invariant drift.
    Orbit,
    /// Winding ratios, u-line periods and arc-length invariance.
    Flux,
    /// Reduced Grad-Shafranov problem.
    Gs {
        #[command(subcommand)]
        action: GsAction,
    },
}

#[derive(Subcommand)]
enum GsAction {
    Solve,
    Check,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.command {
        Sub::Verify => Command::Verify,
        Sub::Orbit => Command::Orbit,
        Sub::Flux => Command::Flux,
        Sub::Gs { action: GsAction::Solve } => Command::GsSolve,
        Sub::Gs { action: GsAction::Check } => Command::GsCheck,
    };
    let Some(path) = cli.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(EXIT_CONFIG as u8);
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let opts = RunOptions { out: cli.out, threads: cli.threads, seed: cli.seed, format: cli.format, strict: cli.strict };
    let outcome = run(cmd, &text, &opts);
    eprintln!("{}", outcome.message);
    ExitCode::from(outcome.exit_code as u8)
}
