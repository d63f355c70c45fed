//! Command-line front end: configuration, parallel orchestration and
//! serialization of the experiments in `homoclinic-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

pub use config::RunConfig;
pub use output::Artifacts;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    Core(homoclinic_core::Error),
    Io(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Core(e) if e.is_validation() => "validation",
            CliError::Core(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    /// 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "numerical" => 2,
            _ => 1,
        }
    }

    pub fn detail(&self) -> serde_json::Value {
        match self {
            CliError::Core(e) => serde_json::to_value(e).unwrap_or(serde_json::Value::Null),
            _ => serde_json::Value::Null,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<homoclinic_core::Error> for CliError {
    fn from(e: homoclinic_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "homoclinic", version, about = "Bifurcation experiments near a homoclinic tangency of a non-orientable area-preserving map")]
pub struct Cli {
    /// TOML config with [family], [experiment] and [output] sections.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override a config value (`key=value` or `section.key=value`); repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Limit-map bifurcation values, twist coefficient scan, horseshoe certificate.
    Henon,
    /// Build the family, audit its invariants, dump the Taylor data.
    FamilyCheck,
    /// Residuals of the first-order cross form of T0^k.
    CrossForm,
    /// Horseshoe classification at mu = 0.
    Classify,
    /// Cascade of elliptic 2-orbit intervals in mu.
    Cascade,
    /// Strip atlas in the (mu, alpha) plane.
    Atlas2d,
    /// Global-resonance certificate at mu = 0.
    Resonance,
    /// Convergence of the rescaled return map to the limit map.
    RescaleVerify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Henon => "henon",
            Command::FamilyCheck => "family-check",
            Command::CrossForm => "cross-form",
            Command::Classify => "classify",
            Command::Cascade => "cascade",
            Command::Atlas2d => "atlas2d",
            Command::Resonance => "resonance",
            Command::RescaleVerify => "rescale-verify",
        }
    }
}

/// Runs one subcommand on a resolved configuration.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Artifacts, CliError> {
    match command {
        Command::Henon => commands::henon(cfg),
        Command::FamilyCheck => commands::family_check(cfg),
        Command::CrossForm => commands::cross_form(cfg),
        Command::Classify => commands::classify(cfg),
        Command::Cascade => commands::cascade(cfg),
        Command::Atlas2d => commands::atlas2d(cfg),
        Command::Resonance => commands::resonance(cfg),
        Command::RescaleVerify => commands::rescale_verify(cfg),
    }
}

fn run_parsed(cli: &Cli) -> Result<(RunConfig, Artifacts, f64), (Option<PathBuf>, CliError)> {
    let mut cfg = config::load(cli.config.as_deref(), &cli.set).map_err(|e| (cli.out.clone(), e))?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    let dir = Some(PathBuf::from(&cfg.output.dir));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| (dir.clone(), CliError::Validation(format!("thread pool: {e}"))))?;
    let start = Instant::now();
    let art = pool.install(|| execute(cli.command, &cfg)).map_err(|e| (dir.clone(), e))?;
    Ok((cfg, art, start.elapsed().as_secs_f64()))
}

/// Parses arguments, runs, writes outputs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let name = cli.command.name();
    let fail = |dir: Option<PathBuf>, err: CliError| {
        let text = output::error_json(name, &err);
        eprintln!("{text}");
        if let Some(d) = dir {
            output::write_error(&d, &text);
        }
        err.exit_code()
    };
    match run_parsed(&cli) {
        Ok((cfg, art, secs)) => {
            for w in &art.warnings {
                eprintln!("warning: {w}");
            }
            match output::emit(std::path::Path::new(&cfg.output.dir), name, &cfg, &art, secs) {
                Ok(files) => {
                    for f in files {
                        println!("wrote {}", f.display());
                    }
                    0
                }
                Err(e) => fail(None, e),
            }
        }
        Err((dir, e)) => fail(dir, e),
    }
}
