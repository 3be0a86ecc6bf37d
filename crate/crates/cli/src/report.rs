//! Self-contained JSON reports and replay.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commands;
use crate::config::{parse_at, Command, ExperimentConfig, Overrides};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayInfo {
    pub source_tool_version: String,
    pub overrides: Value,
    pub matches_source: bool,
    /// Largest relative difference over numeric leaves; absent when the
    /// result shapes differ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rel_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub command: Command,
    /// Fully resolved; running it again reproduces `results`.
    pub config: ExperimentConfig,
    pub results: Value,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<ReplayInfo>,
}

/// Report plus the assertion status that decides the exit code.
pub struct Run {
    pub report: Report,
    pub violated: bool,
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Run, CliError> {
    let resolved = cfg.resolve()?;
    let start = Instant::now();
    let out = commands::run(&resolved)?;
    Ok(Run {
        report: Report {
            schema_version: SCHEMA_VERSION,
            command: resolved.command,
            provenance: Provenance {
                tool_version: TOOL_VERSION.to_string(),
                seed: resolved.seed.expect("resolved"),
                wall_time_ms: start.elapsed().as_millis() as u64,
            },
            config: resolved,
            results: out.results,
            warnings: out.warnings,
            replay: None,
        },
        violated: out.violated,
    })
}

pub fn read_report(path: &Path) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let report: Report = parse_at(&text, "")?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(CliError::Schema {
            path: "schema_version".into(),
            message: format!("unsupported version {} (expected {SCHEMA_VERSION})", report.schema_version),
        });
    }
    Ok(report)
}

/// Re-runs the config echo of `source`. Without overrides a differing
/// result counts as a violation.
pub fn replay(source: &Report, overrides: &Overrides) -> Result<Run, CliError> {
    let mut cfg = source.config.clone();
    cfg.apply(overrides);
    let mut run = execute(&cfg)?;
    let matches = run.report.results == source.results;
    if source.provenance.tool_version != TOOL_VERSION {
        run.report.warnings.push(format!(
            "version mismatch: report written by {}, replayed with {TOOL_VERSION}",
            source.provenance.tool_version
        ));
    }
    if !matches && overrides.is_empty() {
        run.violated = true;
        run.report.warnings.push("replayed results differ from the source report".into());
    }
    run.report.replay = Some(ReplayInfo {
        source_tool_version: source.provenance.tool_version.clone(),
        overrides: serde_json::to_value(overrides)?,
        matches_source: matches,
        max_rel_difference: max_rel_difference(&source.results, &run.report.results),
    });
    Ok(run)
}

fn max_rel_difference(a: &Value, b: &Value) -> Option<f64> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64()?, y.as_f64()?);
            let scale = x.abs().max(y.abs());
            Some(if scale == 0.0 { 0.0 } else { (x - y).abs() / scale })
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            x.iter().zip(y).try_fold(0.0, |m, (u, v)| Some(f64::max(m, max_rel_difference(u, v)?)))
        }
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => x.iter().try_fold(0.0, |m, (k, u)| {
            Some(f64::max(m, max_rel_difference(u, y.get(k)?)?))
        }),
        _ if a == b => Some(0.0),
        _ => None,
    }
}

pub fn summary(r: &Report) -> String {
    let command = serde_json::to_value(r.command).ok();
    let name = command.as_ref().and_then(Value::as_str).unwrap_or("?");
    let res = &r.results;
    let detail = match r.command {
        Command::Norm => format!("value {}", res["value"]),
        Command::Modular => format!("modular {}", res["modular"]),
        Command::WeightConstant | Command::MultilinearConstant => format!("constant {}", res["constant"]),
        Command::TwoToOne => format!("lhs {} rhs {} rel_error {}", res["lhs"], res["rhs"], res["rel_error"]),
        Command::Maximal => format!("sup {}", res["sup"]),
        Command::RkClassify => format!("verdict {} failing {}", res["verdict"], res["failing_clauses"]),
        Command::InterpVerify => format!(
            "violations {} of {} worst ratio {}",
            res["violations"], res["trials"], res["worst_ratio"]
        ),
        Command::Extrapolate => format!("{} theta values", res["endpoints"].as_array().map_or(0, Vec::len)),
    };
    let mut s = format!("{name}: {detail} ({} ms)", r.provenance.wall_time_ms);
    if let Some(rep) = &r.replay {
        s.push_str(if rep.matches_source { ", matches source" } else { ", differs from source" });
    }
    s
}
