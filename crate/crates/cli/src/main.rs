//! `varleb`: runs one experiment from a JSON config and writes a JSON report.
//!
//! Exit status: 0 on success, 1 on configuration or numerical errors,
//! 2 when a checked inequality or identity fails. `VARLEB_THREADS` caps the
//! worker pool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Overrides};
use error::CliError;
use report::Run;

#[derive(Parser)]
#[command(name = "varleb", version, about = "Variable-exponent experiments from JSON configs")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    action: Option<Action>,
    /// Experiment config (JSON).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Action {
    /// Re-run the config echoed in a report and compare the results.
    Replay {
        report: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Where to write the report; defaults to the config's `output`, else stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid nodes per axis.
    #[arg(long)]
    resolution: Option<usize>,
    /// Dyadic cube depth.
    #[arg(long)]
    cube_depth: Option<u32>,
    /// Relative tolerance of norm evaluations.
    #[arg(long)]
    tol: Option<f64>,
    /// No summary line.
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            resolution: self.resolution,
            cube_depth: self.cube_depth,
            rel_tol: self.tol,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("VARLEB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("VARLEB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn main_inner(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let (run, common, default_out): (Run, Common, Option<PathBuf>) = match (cli.action, cli.config) {
        (Some(Action::Replay { report, common }), _) => {
            let source = report::read_report(&report)?;
            (report::replay(&source, &common.overrides())?, common, None)
        }
        (None, Some(path)) => {
            let mut cfg = ExperimentConfig::from_json(&read(&path)?)?;
            cfg.apply(&cli.common.overrides());
            let out = cfg.output.clone();
            (report::execute(&cfg)?, cli.common, out)
        }
        (None, None) => return Err(CliError::Usage("either --config PATH or `replay REPORT` is required".into())),
    };
    let body = serde_json::to_string_pretty(&run.report)?;
    match common.out.or(default_out) {
        Some(path) => {
            std::fs::write(&path, body + "\n").map_err(|source| CliError::Io { path, source })?;
            if !common.quiet {
                println!("{}", report::summary(&run.report));
            }
        }
        None => println!("{body}"),
    }
    for w in &run.report.warnings {
        if !common.quiet {
            eprintln!("warning: {w}");
        }
    }
    Ok(run.violated)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
