//! Dispatch from a resolved config to the library.

use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use varleb::exponent::{ExponentField, QuadrupleSpec};
use varleb::field::{DyadicCubeSet, FunctionDescriptor, Grid, GridFunction, WeightField};
use varleb::interp::{
    build_extrapolation_family, run_extrapolation_workflow, verify_interpolation_bound,
    verify_mixed_interpolation_bound, CompactEndpoint, Endpoint, InterpolationExperiment,
};
use varleb::maximal::{maximal_boundedness_probe, maximal_function, RadiusSweep};
use varleb::norms::{modular, weighted_norm};
use varleb::rk::classify;
use varleb::weights::{ap_constant, multilinear_constant, two_to_one_check, WeightConstantReport};

use crate::config::*;
use crate::error::CliError;

/// Command output before it is wrapped into a report.
pub struct Outcome {
    pub results: Value,
    pub warnings: Vec<String>,
    /// A mathematical assertion failed (exit status 2).
    pub violated: bool,
}

impl Outcome {
    fn ok(results: impl Serialize) -> Result<Self, CliError> {
        Ok(Outcome {
            results: serde_json::to_value(results)?,
            warnings: Vec::new(),
            violated: false,
        })
    }
}

struct Ctx {
    grid: Arc<Grid>,
    cubes: DyadicCubeSet,
    rel_tol: f64,
    seed: u64,
}

impl Ctx {
    fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let d = cfg.domain.clone();
        let n = cfg.resolution.expect("resolved");
        let grid = Arc::new(Grid::new(d.clone(), vec![n; d.dim()])?);
        let cubes = DyadicCubeSet::new(d, cfg.cube_depth.expect("resolved"), true)?;
        Ok(Ctx {
            grid,
            cubes,
            rel_tol: cfg.rel_tol.expect("resolved"),
            seed: cfg.seed.expect("resolved"),
        })
    }

    fn function(&self, f: &FunctionDescriptor) -> Result<GridFunction, CliError> {
        Ok(f.sample(&self.grid)?)
    }

    fn weight(&self, w: Option<&FunctionDescriptor>) -> Result<WeightField, CliError> {
        match w {
            Some(w) => Ok(w.sample_weight(&self.grid)?),
            None => Ok(WeightField::unit(&self.grid)),
        }
    }

    fn weights(&self, ws: &[FunctionDescriptor]) -> Result<Vec<WeightField>, CliError> {
        ws.iter().map(|w| self.weight(Some(w))).collect()
    }

    fn cube_caveat(&self) -> String {
        format!(
            "weight constants are maxima over {} enumerated dyadic cubes and bound the true supremum from below",
            self.cubes.count()
        )
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ctx = Ctx::new(cfg)?;
    let d = &cfg.domain;
    match cfg.command {
        Command::Norm => {
            let i: NormInputs = cfg.inputs()?;
            let f = ctx.function(&i.f)?;
            let w = ctx.weight(i.w.as_ref())?;
            Outcome::ok(weighted_norm(&f, &i.p.build(d)?, &w, ctx.rel_tol)?)
        }
        Command::Modular => {
            let i: NormInputs = cfg.inputs()?;
            if !(i.lambda > 0.0) {
                return Err(CliError::Schema {
                    path: "inputs.lambda".into(),
                    message: "must be positive".into(),
                });
            }
            let f = ctx.function(&i.f)?;
            let fw = f.mul(ctx.weight(i.w.as_ref())?.as_function())?.scale(1.0 / i.lambda);
            Outcome::ok(json!({ "modular": modular(&fw, &i.p.build(d)?)?, "lambda": i.lambda }))
        }
        Command::WeightConstant => {
            let i: WeightConstantInputs = cfg.inputs()?;
            let w = ctx.weight(Some(&i.w))?;
            let r = ap_constant(&w, &i.p.build(d)?, &ctx.cubes);
            weight_outcome(&ctx, r, i.per_cube)
        }
        Command::MultilinearConstant => {
            let i: MultilinearInputs = cfg.inputs()?;
            let spec = i.spec.build(d)?;
            let r = multilinear_constant(&ctx.weights(&i.w)?, &spec, &ctx.cubes);
            weight_outcome(&ctx, r, i.per_cube)
        }
        Command::TwoToOne => {
            let i: TwoToOneInputs = cfg.inputs()?;
            let spec = i.spec.build(d)?;
            let r = two_to_one_check(&ctx.weight(Some(&i.w))?, &spec, &ctx.cubes)?;
            let mut out = Outcome::ok(&r)?;
            out.warnings.push(ctx.cube_caveat());
            if !(r.rel_error <= i.identity_tol) {
                out.violated = true;
                out.warnings.push(format!(
                    "relative error {:e} exceeds identity_tol {:e}",
                    r.rel_error, i.identity_tol
                ));
            }
            Ok(out)
        }
        Command::Maximal => maximal(&ctx, cfg),
        Command::RkClassify => {
            let i: RkInputs = cfg.inputs()?;
            let fam = i.family.generate(&ctx.grid)?;
            let mut rk = i.rk.clone();
            if rk.cube_depth.is_none() {
                rk.cube_depth = cfg.cube_depth;
            }
            Outcome::ok(classify(&fam, &i.p.build(d)?, &ctx.weight(i.w.as_ref())?, i.q, &rk)?)
        }
        Command::InterpVerify => {
            let i: InterpInputs = cfg.inputs()?;
            let exp = InterpolationExperiment {
                endpoint0: endpoint(&ctx, cfg, &i.endpoint0)?,
                endpoint1: endpoint(&ctx, cfg, &i.endpoint1)?,
                theta: i.theta,
                operator: i.operator.clone(),
                trials: i.trials,
                seed: ctx.seed,
            };
            let r = match &i.mixed {
                None => verify_interpolation_bound(&exp)?,
                Some(m) => verify_mixed_interpolation_bound(&exp, m.q_inner, m.y_radius)?,
            };
            let mut out = Outcome::ok(&r)?;
            for (k, c) in r.endpoints.iter().enumerate() {
                if c.inflated {
                    out.warnings.push(format!(
                        "endpoint{k} bound {} is below the observed ratio {}; certified {}",
                        c.supplied, c.observed, c.certified
                    ));
                }
            }
            if r.violations > 0 {
                out.violated = true;
                out.warnings.push(format!("{} of {} trials violate the blended bound", r.violations, r.trials));
            }
            Ok(out)
        }
        Command::Extrapolate => extrapolate(&ctx, cfg),
    }
}

fn weight_outcome(ctx: &Ctx, r: varleb::Result<WeightConstantReport>, per_cube: bool) -> Result<Outcome, CliError> {
    let mut out = match r {
        Ok(mut rep) => {
            if !per_cube {
                rep.per_cube_values.clear();
            }
            Outcome::ok(rep)?
        }
        Err(varleb::Error::OverflowToInfinity { value }) => {
            let mut o = Outcome::ok(json!({ "constant": "inf", "overflow": true }))?;
            o.warnings.push(format!("weight constant overflowed ({value:e}); reported as infinite"));
            o
        }
        Err(e) => return Err(e.into()),
    };
    out.warnings.push(ctx.cube_caveat());
    Ok(out)
}

fn maximal(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let i: MaximalInputs = cfg.inputs()?;
    let f = ctx.function(&i.f)?;
    let sweep = match &i.radii {
        Some(s) => s.clone(),
        None => RadiusSweep::default_for(&ctx.grid)?,
    };
    let mf = maximal_function(&f, i.q, &sweep)?;
    let at: Vec<Value> = i
        .at
        .iter()
        .map(|x| {
            let node = nearest_node(&ctx.grid, x);
            json!({ "x": x, "node": ctx.grid.point(node), "value": mf.values()[node] })
        })
        .collect();
    let probe = match &i.probe {
        None => None,
        Some(p) => {
            let corpus: Vec<GridFunction> = p.corpus.iter().map(|f| ctx.function(f)).collect::<Result<_, _>>()?;
            let w = ctx.weight(p.w.as_ref())?;
            Some(maximal_boundedness_probe(&p.p.build(&cfg.domain)?, &w, i.q, &corpus, &sweep, &ctx.cubes)?)
        }
    };
    Outcome::ok(json!({
        "q": i.q,
        "radii": sweep.len(),
        "sup": mf.sup_norm(),
        "at": at,
        "probe": probe,
    }))
}

fn nearest_node(grid: &Grid, x: &[f64]) -> usize {
    (0..grid.len())
        .min_by(|&a, &b| {
            let da: f64 = grid.point(a).iter().zip(x).map(|(u, v)| (u - v).powi(2)).sum();
            let db: f64 = grid.point(b).iter().zip(x).map(|(u, v)| (u - v).powi(2)).sum();
            da.total_cmp(&db)
        })
        .unwrap_or(0)
}

fn endpoint(ctx: &Ctx, cfg: &ExperimentConfig, e: &EndpointInputs) -> Result<Endpoint, CliError> {
    let d = &cfg.domain;
    let w = ctx.weights(&e.w)?;
    let v = match &e.v {
        Some(v) => ctx.weight(Some(v))?,
        None => WeightField::product(&w)?,
    };
    Ok(Endpoint {
        p: e.p.iter().map(|p| p.build(d)).collect::<varleb::Result<_>>()?,
        q: e.q.build(d)?,
        w,
        v,
        bound: e.bound,
    })
}

fn range(p: &ExponentField) -> [f64; 2] {
    [p.p_minus(), p.p_plus()]
}

fn spec_summary(s: &QuadrupleSpec) -> Value {
    json!({
        "p": s.p.iter().map(range).collect::<Vec<_>>(),
        "q": range(&s.q),
        "r": s.r,
        "s": if s.s.is_infinite() { json!("inf") } else { json!(s.s) },
        "gamma": s.gamma,
    })
}

fn extrapolate(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let i: ExtrapolateInputs = cfg.inputs()?;
    let d = &cfg.domain;
    let target = i.target.build(d)?;
    let known = i.known.build(d)?;
    let ws = ctx.weights(&i.w)?;
    let w1s = ctx.weights(&i.w1)?;
    let mut warnings = Vec::new();
    let endpoints: Vec<Value> = i
        .theta_ladder
        .iter()
        .map(|&theta| match build_extrapolation_family(&target, &known, &ws, &w1s, theta, &ctx.cubes) {
            Ok(e) => json!({
                "theta": theta,
                "spec0": spec_summary(&e.spec0),
                "admissible": e.admissible,
                "gamma_deviation": e.gamma_deviation,
                "constant0": e.constant0,
                "round_trip_error": e.round_trip_error,
            }),
            Err(err) => {
                warnings.push(format!("theta {theta}: {err}"));
                json!({ "theta": theta, "error": err.to_string() })
            }
        })
        .collect();
    let workflow = match &i.workflow {
        None => None,
        Some(wf) => {
            let compact = CompactEndpoint {
                spec1: known.clone(),
                weights1: w1s.clone(),
                inputs: wf
                    .inputs
                    .iter()
                    .map(|args| args.iter().map(|f| ctx.function(f)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<_, _>>()?,
            };
            Some(run_extrapolation_workflow(
                &i.theta_ladder,
                &target,
                &ws,
                &compact,
                &wf.operator,
                wf.q_tilde,
                &ctx.cubes,
                &wf.rk,
            )?)
        }
    };
    Ok(Outcome {
        results: json!({ "endpoints": endpoints, "workflow": workflow }),
        warnings,
        violated: false,
    })
}
