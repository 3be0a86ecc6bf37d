//! Experiment configuration: the JSON schema and its defaults.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use varleb::exponent::{ExponentDescriptor, QuadrupleDescriptor};
use varleb::field::{BoxDomain, FunctionDescriptor, DEFAULT_RESOLUTION_1D, DEFAULT_RESOLUTION_2D};
use varleb::interp::OperatorSpec;
use varleb::maximal::RadiusSweep;
use varleb::norms::DEFAULT_REL_TOL;
use varleb::rk::{FamilyDescriptor, RkConfig};
use varleb::weights::{DEFAULT_CUBE_DEPTH_1D, DEFAULT_CUBE_DEPTH_2D};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Norm,
    Modular,
    WeightConstant,
    MultilinearConstant,
    TwoToOne,
    Maximal,
    RkClassify,
    InterpVerify,
    Extrapolate,
}

/// Top-level config. Unset knobs resolve to:
/// `resolution` 4096 nodes (1D) or 256 per axis (2D), `cube_depth` 6 (1D)
/// or 4 (2D), `rel_tol` 1e-10, `seed` 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub domain: BoxDomain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cube_depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Command-specific; see the `*Inputs` types.
    pub inputs: serde_json::Value,
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cube_depth: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }
}

/// Parses JSON text, reporting the path of the offending key on failure.
pub fn parse_at<T: DeserializeOwned>(text: &str, prefix: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| schema_error(prefix, e))
}

pub fn parse_value<T: DeserializeOwned>(v: &serde_json::Value, prefix: &str) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| schema_error(prefix, e))
}

fn schema_error<E: std::fmt::Display>(prefix: &str, e: serde_path_to_error::Error<E>) -> CliError {
    let inner = e.path().to_string();
    let path = match (prefix.is_empty(), inner.as_str()) {
        (true, _) => inner.clone(),
        (false, ".") => prefix.to_string(),
        (false, _) => format!("{prefix}.{inner}"),
    };
    CliError::Schema {
        path,
        message: e.into_inner().to_string(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = parse_at(text, "")?;
        cfg.domain.validate().map_err(|e| CliError::Schema {
            path: "domain".into(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.resolution.is_some() {
            self.resolution = o.resolution;
        }
        if o.cube_depth.is_some() {
            self.cube_depth = o.cube_depth;
        }
        if o.rel_tol.is_some() {
            self.rel_tol = o.rel_tol;
        }
    }

    /// Fills every unset knob and normalizes `inputs` so that the echo
    /// carries all defaults explicitly.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let two_d = self.domain.dim() == 2;
        let mut r = self.clone();
        r.resolution.get_or_insert(if two_d { DEFAULT_RESOLUTION_2D } else { DEFAULT_RESOLUTION_1D });
        r.cube_depth.get_or_insert(if two_d { DEFAULT_CUBE_DEPTH_2D } else { DEFAULT_CUBE_DEPTH_1D });
        r.rel_tol.get_or_insert(DEFAULT_REL_TOL);
        r.seed.get_or_insert(0);
        r.inputs = match self.command {
            Command::Norm | Command::Modular => normalize::<NormInputs>(&self.inputs)?,
            Command::WeightConstant => normalize::<WeightConstantInputs>(&self.inputs)?,
            Command::MultilinearConstant => normalize::<MultilinearInputs>(&self.inputs)?,
            Command::TwoToOne => normalize::<TwoToOneInputs>(&self.inputs)?,
            Command::Maximal => normalize::<MaximalInputs>(&self.inputs)?,
            Command::RkClassify => normalize::<RkInputs>(&self.inputs)?,
            Command::InterpVerify => normalize::<InterpInputs>(&self.inputs)?,
            Command::Extrapolate => normalize::<ExtrapolateInputs>(&self.inputs)?,
        };
        Ok(r)
    }

    pub fn inputs<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        parse_value(&self.inputs, "inputs")
    }
}

fn normalize<T: DeserializeOwned + Serialize>(v: &serde_json::Value) -> Result<serde_json::Value, CliError> {
    let t: T = parse_value(v, "inputs")?;
    Ok(serde_json::to_value(t)?)
}

fn one() -> f64 {
    1.0
}

/// `norm` and `modular`: `‖f‖_{L^p(w)}` or `ρ_p(f w / lambda)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormInputs {
    pub f: FunctionDescriptor,
    pub p: ExponentDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<FunctionDescriptor>,
    /// Used by `modular` only.
    #[serde(default = "one")]
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConstantInputs {
    pub w: FunctionDescriptor,
    pub p: ExponentDescriptor,
    #[serde(default)]
    pub per_cube: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultilinearInputs {
    pub w: Vec<FunctionDescriptor>,
    pub spec: QuadrupleDescriptor,
    #[serde(default)]
    pub per_cube: bool,
}

fn identity_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoToOneInputs {
    pub w: FunctionDescriptor,
    pub spec: QuadrupleDescriptor,
    /// Exit status 2 when the relative error exceeds this.
    #[serde(default = "identity_tol")]
    pub identity_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeInputs {
    pub p: ExponentDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<FunctionDescriptor>,
    pub corpus: Vec<FunctionDescriptor>,
}

/// `M_q f`, sampled at `at` (nearest node) plus an optional boundedness probe.
/// `radii` defaults to a geometric sweep from the grid step to the diameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalInputs {
    pub f: FunctionDescriptor,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<RadiusSweep>,
    #[serde(default)]
    pub at: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeInputs>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RkInputs {
    pub family: FamilyDescriptor,
    pub p: ExponentDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<FunctionDescriptor>,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default)]
    pub rk: RkConfig,
}

/// One endpoint; `v` defaults to the product of the `w`, and `bound = 0`
/// asks for a certified constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointInputs {
    pub p: Vec<ExponentDescriptor>,
    pub q: ExponentDescriptor,
    pub w: Vec<FunctionDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<FunctionDescriptor>,
    #[serde(default)]
    pub bound: f64,
}

fn y_radius() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedInputs {
    pub q_inner: f64,
    #[serde(default = "y_radius")]
    pub y_radius: f64,
}

fn trials() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpInputs {
    pub endpoint0: EndpointInputs,
    pub endpoint1: EndpointInputs,
    pub theta: f64,
    pub operator: OperatorSpec,
    #[serde(default = "trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed: Option<MixedInputs>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowInputs {
    pub operator: OperatorSpec,
    /// One argument tuple per family member.
    pub inputs: Vec<Vec<FunctionDescriptor>>,
    #[serde(default = "one")]
    pub q_tilde: f64,
    #[serde(default)]
    pub rk: RkConfig,
}

/// Builds the 0-endpoint for every θ of the ladder from the target
/// `(target, w)` and the known endpoint `(known, w1)`; with `workflow`
/// also runs the compactness chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrapolateInputs {
    pub target: QuadrupleDescriptor,
    pub known: QuadrupleDescriptor,
    pub w: Vec<FunctionDescriptor>,
    pub w1: Vec<FunctionDescriptor>,
    pub theta_ladder: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workflow: Option<WorkflowInputs>,
}
