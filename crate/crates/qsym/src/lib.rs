//! Command-line companion to `qsym-core`: TOML run configs, JSON reports and CSV/JSON artifacts.
//!
//! Every run writes `report.json` to the output directory, plus one data artifact per command.
//! See [`run`] for the exit-code contract.

use std::fs;
use std::path::PathBuf;

pub use qsym_core as core;

pub mod commands;
pub mod config;
pub mod output;
pub mod report;

use commands::{Context, RunError};
use config::{parse_config, RunConfig};
use output::Format;
use report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Orbit,
    Flux,
    GsSolve,
    GsCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Orbit => "orbit",
            Command::Flux => "flux",
            Command::GsSolve => "gs solve",
            Command::GsCheck => "gs check",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
    /// Overrides `sampling.seed`.
    pub seed: Option<u64>,
    pub format: Format,
    /// Exit with [`EXIT_CHECKS`] when any check fails.
    pub strict: bool,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;
pub const EXIT_CHECKS: i32 = 3;

pub struct Outcome {
    /// `None` when the config could not be parsed and nothing ran.
    pub report: Option<Report>,
    pub exit_code: i32,
    /// Human-readable summary for stderr.
    pub message: String,
}

fn config_error(message: String) -> Outcome {
    Outcome { report: None, exit_code: EXIT_CONFIG, message }
}

/// Parse `config_text`, run `cmd` and write the report.
///
/// Exit codes: 0 when the run completes (checks may still fail; see `all_pass`), 1 for a
/// config error, 2 when computation or IO fails part way, 3 for failed checks under `strict`.
/// On a code-2 failure the report and any partial artifact carry the error.
pub fn run(cmd: Command, config_text: &str, opts: &RunOptions) -> Outcome {
    let cfg = match parse_config(config_text) {
        Ok(c) => c,
        Err(e) => return config_error(format!("invalid config\n{e}")),
    };
    if let Err(m) = requirements(cmd, &cfg) {
        return config_error(format!("invalid config\n{m}"));
    }
    let seed = opts.seed.unwrap_or(cfg.sampling.seed);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => return Outcome { report: None, exit_code: EXIT_COMPUTE, message: format!("thread pool: {e}") },
    };
    if let Err(e) = fs::create_dir_all(&opts.out) {
        return Outcome { report: None, exit_code: EXIT_COMPUTE, message: format!("io: {e}") };
    }
    let ctx = Context { out: opts.out.clone(), format: opts.format, seed, pool };
    let mut report = Report::new(cmd.name(), config_text, seed);
    let result = match cmd {
        Command::Verify => commands::verify::run(&cfg, &ctx, &mut report),
        Command::Orbit => commands::orbit::run(&cfg, &ctx, &mut report),
        Command::Flux => commands::flux::run(&cfg, &ctx, &mut report),
        Command::GsSolve => commands::gs::run_solve(&cfg, &ctx, &mut report),
        Command::GsCheck => commands::gs::run_check(&cfg, &ctx, &mut report),
    };
    let (mut exit_code, mut message) = match result {
        Ok(()) => {
            let failed = report.checks.iter().filter(|c| !c.pass).count();
            let code = if failed > 0 && opts.strict { EXIT_CHECKS } else { EXIT_OK };
            (code, format!("{}: {} checks, {failed} failed", cmd.name(), report.checks.len()))
        }
        Err(RunError::Config(m)) => return config_error(format!("invalid config\n{m}")),
        Err(e) => {
            report.fail(e.to_string());
            (EXIT_COMPUTE, format!("{} failed: {e}", cmd.name()))
        }
    };
    if let Err(e) = fs::write(opts.out.join("report.json"), report.to_json()) {
        exit_code = EXIT_COMPUTE;
        message = format!("io: writing report: {e}");
    }
    Outcome { report: Some(report), exit_code, message }
}

/// Sections a subcommand cannot run without.
fn requirements(cmd: Command, cfg: &RunConfig) -> Result<(), String> {
    let needs_symmetry = matches!(cmd, Command::Verify | Command::Flux | Command::GsSolve | Command::GsCheck);
    if needs_symmetry && cfg.symmetry.is_none() {
        return Err(format!("{} needs a [symmetry] section", cmd.name()));
    }
    let has_psi = cfg.psi_model().is_some();
    match cmd {
        Command::Flux if !has_psi => Err("flux needs a [psi] section (the field has no built-in flux function)".into()),
        Command::GsSolve | Command::GsCheck => {
            if cfg.gs_symmetry().is_none() {
                return Err("gs needs an axisym or helical [symmetry]".into());
            }
            let gs = cfg.gs.clone().unwrap_or_default();
            if !has_psi && (gs.compare || cmd == Command::GsCheck) {
                return Err("gs needs a [psi] section for boundary data and comparison".into());
            }
            Ok(())
        }
        _ => Ok(()),
    }
}
