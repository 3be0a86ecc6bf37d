//! Interpolation of weighted multilinear bounds and extrapolation endpoints.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{theta_blend, theta_invert, validate_quadruple, ExponentField, QuadrupleSpec, GAMMA_TOLERANCE};
use crate::field::{BoxDomain, DyadicCubeSet, Grid, GridFunction, WeightField};
use crate::maximal::ball_runs;
use crate::norms::{weighted_mixed_norm, weighted_norm, DEFAULT_REL_TOL};
use crate::par;
use crate::rk::{classify, FunctionFamily, RkConfig, RkReport, RkVerdict};
use crate::weights::multilinear_constant;

/// Factor applied to an observed endpoint ratio that exceeds the supplied bound.
pub const CERTIFICATION_FACTOR: f64 = 1.05;
/// Relative slack of the blended inequality.
pub const ASSERTION_SLACK: f64 = 1e-6;

/// A demo `m`-linear operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// `Π f_j(x)`.
    PointwiseProduct { arity: usize },
    /// `Σ_{y ≠ (x,..,x)} Π f_j(y_j) (Σ |x - y_j|)^{-(m - α)}` on a line, `m <= 2`.
    FractionalKernel { arity: usize, alpha: f64 },
    /// `Π avg_{B(x, radius)} f_j`.
    BallAverageProduct { arity: usize, radius: f64 },
}

impl OperatorSpec {
    pub fn product(arity: usize) -> Self {
        OperatorSpec::PointwiseProduct { arity }
    }

    pub fn arity(&self) -> usize {
        match self {
            OperatorSpec::PointwiseProduct { arity }
            | OperatorSpec::FractionalKernel { arity, .. }
            | OperatorSpec::BallAverageProduct { arity, .. } => *arity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.arity();
        if m == 0 {
            return Err(Error::Domain("operator arity must be >= 1".into()));
        }
        match *self {
            OperatorSpec::FractionalKernel { alpha, .. } => {
                if m > 2 {
                    return Err(Error::Domain("fractional kernel supports m <= 2".into()));
                }
                if !(alpha > 0.0 && alpha < m as f64) {
                    return Err(Error::Domain(format!("alpha {alpha} outside (0, {m})")));
                }
            }
            OperatorSpec::BallAverageProduct { radius, .. } if !(radius > 0.0) => {
                return Err(Error::Domain(format!("radius {radius} must be positive")));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Mass `2 (h/2)^α / α` of the kernel `|t|^{α-1}` on the skipped diagonal
/// cell of a line grid with step `h`.
pub fn fractional_mesh_criterion(alpha: f64, h: f64) -> f64 {
    2.0 * (0.5 * h).powf(alpha) / alpha
}

pub fn apply_operator(op: &OperatorSpec, fs: &[GridFunction]) -> Result<GridFunction> {
    op.validate()?;
    if fs.len() != op.arity() {
        return Err(Error::ArityMismatch {
            expected: op.arity(),
            got: fs.len(),
        });
    }
    for f in &fs[1..] {
        fs[0].check_same_grid(f)?;
    }
    let grid = fs[0].grid().clone();
    match *op {
        OperatorSpec::PointwiseProduct { .. } => {
            let out = (0..grid.len())
                .map(|i| fs.iter().map(|f| f.values()[i]).product())
                .collect();
            GridFunction::new(grid, out)
        }
        OperatorSpec::BallAverageProduct { radius, .. } => {
            let out = par::map_range(grid.len(), |i| {
                let runs = ball_runs(&grid, grid.point(i), radius);
                let wsum: f64 = runs.iter().flat_map(|&(a, b)| a..=b).map(|k| grid.weight(k)).sum();
                fs.iter()
                    .map(|f| {
                        runs.iter()
                            .flat_map(|&(a, b)| a..=b)
                            .map(|k| grid.weight(k) * f.values()[k])
                            .sum::<f64>()
                            / wsum
                    })
                    .product()
            });
            GridFunction::new(grid, out)
        }
        OperatorSpec::FractionalKernel { arity, alpha } => {
            if grid.dim() != 1 {
                return Err(Error::Domain("fractional kernel is implemented on a line".into()));
            }
            let power = -(arity as f64 - alpha);
            let n = grid.len();
            let x = |i: usize| grid.point(i)[0];
            let out = par::map_range(n, |i| {
                let xi = x(i);
                if arity == 1 {
                    let f = fs[0].values();
                    (0..n)
                        .filter(|&j| j != i && f[j] != 0.0)
                        .map(|j| grid.weight(j) * f[j] * (xi - x(j)).abs().powf(power))
                        .sum()
                } else {
                    let (f, g) = (fs[0].values(), fs[1].values());
                    let mut s = 0.0;
                    for j in 0..n {
                        if f[j] == 0.0 {
                            continue;
                        }
                        let dj = (xi - x(j)).abs();
                        let mut inner = 0.0;
                        for k in 0..n {
                            if (j == i && k == i) || g[k] == 0.0 {
                                continue;
                            }
                            inner += grid.weight(k) * g[k] * (dj + (xi - x(k)).abs()).powf(power);
                        }
                        s += grid.weight(j) * f[j] * inner;
                    }
                    s
                }
            });
            GridFunction::new(grid, out)
        }
    }
}

/// Spaces and constant of one interpolation endpoint:
/// `‖T f‖_{L^q(v)} <= M Π ‖f_j‖_{L^{p_j}(w_j)}`.
#[derive(Debug, Clone)]
pub struct Endpoint {
    pub p: Vec<ExponentField>,
    pub q: ExponentField,
    pub w: Vec<WeightField>,
    pub v: WeightField,
    pub bound: f64,
}

impl Endpoint {
    /// Endpoint with target weight `v = Π w_j`.
    pub fn from_spec(spec: &QuadrupleSpec, w: Vec<WeightField>, bound: f64) -> Result<Self> {
        let v = WeightField::product(&w)?;
        Ok(Endpoint {
            p: spec.p.clone(),
            q: spec.q.clone(),
            w,
            v,
            bound,
        })
    }

    fn blend(&self, other: &Endpoint, theta: f64) -> Result<Endpoint> {
        if self.p.len() != other.p.len() || self.w.len() != other.w.len() {
            return Err(Error::ArityMismatch {
                expected: self.p.len(),
                got: other.p.len(),
            });
        }
        Ok(Endpoint {
            p: self
                .p
                .iter()
                .zip(&other.p)
                .map(|(a, b)| theta_blend(a, b, theta))
                .collect::<Result<_>>()?,
            q: theta_blend(&self.q, &other.q, theta)?,
            w: self
                .w
                .iter()
                .zip(&other.w)
                .map(|(a, b)| WeightField::blend(a, b, theta))
                .collect::<Result<_>>()?,
            v: WeightField::blend(&self.v, &other.v, theta)?,
            bound: self.bound.powf(1.0 - theta) * other.bound.powf(theta),
        })
    }

    fn input_norms(&self, fs: &[GridFunction]) -> Result<f64> {
        fs.iter()
            .zip(&self.p)
            .zip(&self.w)
            .map(|((f, p), w)| Ok(weighted_norm(f, p, w, DEFAULT_REL_TOL)?.value))
            .product()
    }
}

#[derive(Debug, Clone)]
pub struct InterpolationExperiment {
    pub endpoint0: Endpoint,
    pub endpoint1: Endpoint,
    pub theta: f64,
    pub operator: OperatorSpec,
    pub trials: usize,
    pub seed: u64,
}

/// `Σ c_i χ_{[a_i, b_i]}` over node index ranges of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleFunction {
    /// `(first node, last node, coefficient)`.
    pub pieces: Vec<(usize, usize, f64)>,
}

impl SimpleFunction {
    /// At most 8 pieces, coefficients log-uniform in `[1e-2, 1e2]`.
    pub fn random(rng: &mut impl Rng, nodes: usize) -> Self {
        let k = rng.gen_range(1..=8usize);
        let pieces = (0..k)
            .map(|_| {
                let a = rng.gen_range(0..nodes);
                let b = rng.gen_range(0..nodes);
                let c = 10f64.powf(rng.gen_range(-2.0..=2.0));
                (a.min(b), a.max(b), c)
            })
            .collect();
        SimpleFunction { pieces }
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Result<GridFunction> {
        let mut v = vec![0.0; grid.len()];
        for &(a, b, c) in &self.pieces {
            for x in &mut v[a..=b.min(grid.len() - 1)] {
                *x += c;
            }
        }
        GridFunction::new(grid.clone(), v)
    }
}

fn trial_rng(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

fn random_tuple(seed: u64, t: usize, m: usize, nodes: usize) -> Vec<SimpleFunction> {
    let mut rng = trial_rng(seed, t);
    (0..m).map(|_| SimpleFunction::random(&mut rng, nodes)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub supplied: f64,
    pub observed: f64,
    pub certified: f64,
    pub inflated: bool,
}

impl Certification {
    pub fn new(supplied: f64, observed: f64) -> Self {
        let inflated = observed > supplied;
        Certification {
            supplied,
            observed,
            certified: if inflated {
                CERTIFICATION_FACTOR * observed
            } else {
                supplied
            },
            inflated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub trials: usize,
    pub theta: f64,
    pub endpoints: [Certification; 2],
    pub blended_bound: f64,
    /// Largest `‖T f‖ / (M_0^{1-θ} M_1^θ Π ‖f_j‖)` over the corpus.
    pub worst_ratio: f64,
    pub worst_trial: Option<usize>,
    pub violations: usize,
    pub violating_example: Option<Vec<SimpleFunction>>,
    pub slack: f64,
    pub certification_factor: f64,
}

/// Output of a trial tuple and its norm in the space of an endpoint.
type Output<'a> = dyn Fn(&[GridFunction]) -> Result<GridFunction> + Sync + Send + 'a;
type OutputNorm<'a> = dyn Fn(&GridFunction, &Endpoint) -> Result<f64> + Sync + Send + 'a;

fn run_experiment(
    exp: &InterpolationExperiment,
    grid: &Arc<Grid>,
    output: &Output,
    out_norm: &OutputNorm,
) -> Result<InterpolationReport> {
    exp.operator.validate()?;
    let m = exp.operator.arity();
    for e in [&exp.endpoint0, &exp.endpoint1] {
        if e.p.len() != m || e.w.len() != m {
            return Err(Error::ArityMismatch {
                expected: m,
                got: e.p.len(),
            });
        }
    }
    let blended = exp.endpoint0.blend(&exp.endpoint1, exp.theta)?;
    let nodes = grid.len();
    let ratio = |fs: &[GridFunction], out: &GridFunction, e: &Endpoint| -> Result<f64> {
        let bottom = e.input_norms(fs)?;
        Ok(out_norm(out, e)? / bottom)
    };
    let sample = |tuple: &[SimpleFunction]| -> Result<Vec<GridFunction>> {
        tuple.iter().map(|s| s.sample(grid)).collect()
    };
    let rows = par::try_map_range(exp.trials, |t| {
        let fs = sample(&random_tuple(exp.seed, t, m, nodes))?;
        let out = output(&fs)?;
        Ok([
            ratio(&fs, &out, &exp.endpoint0)?,
            ratio(&fs, &out, &exp.endpoint1)?,
            ratio(&fs, &out, &blended)?,
        ])
    })?;
    let observed = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    let c0 = Certification::new(exp.endpoint0.bound, observed(0));
    let c1 = Certification::new(exp.endpoint1.bound, observed(1));
    let bound = c0.certified.powf(1.0 - exp.theta) * c1.certified.powf(exp.theta);
    let mut worst = (0.0f64, None);
    let mut violations = 0;
    for (t, r) in rows.iter().enumerate() {
        let v = r[2] / bound;
        if v > worst.0 {
            worst = (v, Some(t));
        }
        if v > 1.0 + ASSERTION_SLACK {
            violations += 1;
        }
    }
    let violating_example = match worst.1 {
        Some(t) if worst.0 > 1.0 + ASSERTION_SLACK => {
            let mut tuple = random_tuple(exp.seed, t, m, nodes);
            let violates = |tuple: &[SimpleFunction]| -> Result<bool> {
                let fs = sample(tuple)?;
                Ok(ratio(&fs, &output(&fs)?, &blended)? / bound > 1.0 + ASSERTION_SLACK)
            };
            // halve coefficients one at a time while the violation persists
            for _ in 0..32 {
                let mut changed = false;
                for j in 0..tuple.len() {
                    for i in 0..tuple[j].pieces.len() {
                        let mut trial = tuple.clone();
                        trial[j].pieces[i].2 *= 0.5;
                        if violates(&trial)? {
                            tuple = trial;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            Some(tuple)
        }
        _ => None,
    };
    Ok(InterpolationReport {
        trials: exp.trials,
        theta: exp.theta,
        endpoints: [c0, c1],
        blended_bound: bound,
        worst_ratio: worst.0,
        worst_trial: worst.1,
        violations,
        violating_example,
        slack: ASSERTION_SLACK,
        certification_factor: CERTIFICATION_FACTOR,
    })
}

fn shared_grid(exp: &InterpolationExperiment) -> Result<Arc<Grid>> {
    let grid = exp.endpoint0.v.grid().clone();
    let all = exp
        .endpoint0
        .w
        .iter()
        .chain(&exp.endpoint1.w)
        .chain([&exp.endpoint0.v, &exp.endpoint1.v]);
    for w in all {
        if w.grid() != &grid {
            return Err(Error::Domain("experiment weights live on different grids".into()));
        }
    }
    Ok(grid)
}

/// Certifies the endpoint constants on a random simple-function corpus and
/// checks `‖T f‖_{L^q(v)} <= M_0^{1-θ} M_1^θ Π ‖f_j‖_{L^{p_j}(w_j)}`.
pub fn verify_interpolation_bound(exp: &InterpolationExperiment) -> Result<InterpolationReport> {
    let grid = shared_grid(exp)?;
    let op = exp.operator.clone();
    run_experiment(exp, &grid, &move |fs| apply_operator(&op, fs), &|out, e| {
        Ok(weighted_norm(out, &e.q, &e.v, DEFAULT_REL_TOL)?.value)
    })
}

/// `S f(x, y) = T f(x) - T f(x + y)` for `|y| <= y_radius`, with `T f`
/// extended by zero and read by linear interpolation off the grid.
pub fn difference_operator(tf: &GridFunction, y_radius: f64, y_nodes: usize) -> Result<GridFunction> {
    let g = tf.grid();
    if g.dim() != 1 {
        return Err(Error::Domain("difference operator is implemented on a line".into()));
    }
    let d = g.domain();
    let plane = Arc::new(Grid::new(
        BoxDomain::new(vec![d.lo[0], -y_radius], vec![d.hi[0], y_radius])?,
        vec![g.len(), y_nodes],
    )?);
    difference_on(&plane, tf)
}

fn difference_on(plane: &Arc<Grid>, tf: &GridFunction) -> Result<GridFunction> {
    let g = tf.grid();
    let (lo, h, n) = (g.domain().lo[0], g.step()[0], g.len());
    let v = tf.values();
    let at = |x: f64| -> f64 {
        let s = (x - lo) / h;
        if s < 0.0 || s > (n - 1) as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        v[i] * (1.0 - t) + v[i + 1] * t
    };
    GridFunction::from_fn(plane, |p| at(p[0]) - at(p[0] + p[1]))
}

/// Mixed-norm version of [`verify_interpolation_bound`] for the difference
/// operator `S`, with inner exponent `q_inner` over `|y| <= y_radius`.
pub fn verify_mixed_interpolation_bound(
    exp: &InterpolationExperiment,
    q_inner: f64,
    y_radius: f64,
) -> Result<InterpolationReport> {
    let grid = shared_grid(exp)?;
    let q_min = exp.endpoint0.q.p_minus().min(exp.endpoint1.q.p_minus());
    if !(q_inner > 0.0 && q_inner < q_min) {
        return Err(Error::HypothesisFailure(format!(
            "inner exponent {q_inner} must lie below min(q_0-, q_1-) = {q_min}"
        )));
    }
    let y_nodes = 2 * ((y_radius / grid.min_step()).round() as usize).max(1) + 1;
    if grid.dim() != 1 {
        return Err(Error::Domain("difference operator is implemented on a line".into()));
    }
    let d = grid.domain();
    let plane = Arc::new(Grid::new(
        BoxDomain::new(vec![d.lo[0], -y_radius], vec![d.hi[0], y_radius])?,
        vec![grid.len(), y_nodes],
    )?);
    let op = exp.operator.clone();
    run_experiment(
        exp,
        &grid,
        &move |fs| difference_on(&plane, &apply_operator(&op, fs)?),
        &|s, e| weighted_mixed_norm(s, &e.q, &e.v, q_inner),
    )
}

/// Endpoint 0 reconstructed from a target and endpoint 1.
#[derive(Debug, Clone)]
pub struct ExtrapolationEndpoint {
    pub spec0: QuadrupleSpec,
    pub weights0: Vec<WeightField>,
    pub admissible: bool,
    pub gamma_deviation: f64,
    /// `None` when the constant overflowed or the endpoint is not admissible.
    pub constant0: Option<f64>,
    pub round_trip_error: f64,
}

fn max_field_gap(a: &ExponentField, b: &ExponentField, grid: &Grid) -> Result<f64> {
    let (x, y) = (a.values_on(grid)?, b.values_on(grid)?);
    Ok(x.iter().zip(&y).map(|(u, v)| (u - v).abs() / v.abs()).fold(0.0, f64::max))
}

fn max_weight_gap(a: &WeightField, b: &WeightField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(u, v)| (u - v).abs() / v)
        .fold(0.0, f64::max)
}

/// Solves `p = blend(p0, p1, θ)`, `q = blend(q0, q1, θ)`,
/// `w = w0^{1-θ} w1^θ` for the 0-endpoint and checks it.
pub fn build_extrapolation_family(
    target: &QuadrupleSpec,
    known1: &QuadrupleSpec,
    ws: &[WeightField],
    w1s: &[WeightField],
    theta: f64,
    cubes: &DyadicCubeSet,
) -> Result<ExtrapolationEndpoint> {
    if target.m() != known1.m() || ws.len() != target.m() || w1s.len() != target.m() {
        return Err(Error::ArityMismatch {
            expected: target.m(),
            got: ws.len(),
        });
    }
    let p0: Vec<ExponentField> = target
        .p
        .iter()
        .zip(&known1.p)
        .map(|(p, p1)| theta_invert(p, p1, theta))
        .collect::<Result<_>>()?;
    let q0 = theta_invert(&target.q, &known1.q, theta)?;
    let weights0: Vec<WeightField> = ws
        .iter()
        .zip(w1s)
        .map(|(w, w1)| {
            WeightField::new(w.as_function().zip_with(w1.as_function(), |a, b| {
                (a * b.powf(-theta)).powf(1.0 / (1.0 - theta))
            })?)
        })
        .collect::<Result<_>>()?;
    let spec0 = QuadrupleSpec::new(p0, q0, target.r.clone(), target.s, target.gamma)?;
    let verdict = validate_quadruple(&spec0, GAMMA_TOLERANCE)?;
    let constant0 = if verdict.admissible() {
        match multilinear_constant(&weights0, &spec0, cubes) {
            Ok(r) => Some(r.constant),
            Err(Error::OverflowToInfinity { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let grid = ws[0].grid();
    let mut gap = max_field_gap(&theta_blend(&spec0.q, &known1.q, theta)?, &target.q, grid)?;
    for j in 0..target.m() {
        gap = gap.max(max_field_gap(&theta_blend(&spec0.p[j], &known1.p[j], theta)?, &target.p[j], grid)?);
        gap = gap.max(max_weight_gap(&WeightField::blend(&weights0[j], &w1s[j], theta)?, &ws[j]));
    }
    Ok(ExtrapolationEndpoint {
        admissible: verdict.admissible(),
        gamma_deviation: verdict.gamma_max_deviation,
        spec0,
        weights0,
        constant0,
        round_trip_error: gap,
    })
}

/// Known compact endpoint: its data plus the operator inputs whose outputs
/// form the family to classify.
#[derive(Debug, Clone)]
pub struct CompactEndpoint {
    pub spec1: QuadrupleSpec,
    pub weights1: Vec<WeightField>,
    pub inputs: Vec<Vec<GridFunction>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowEntry {
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint0_admissible: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint0_constant: Option<f64>,
    /// Largest `‖T f‖ / Π ‖f_j‖` at endpoint 0 over the inputs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint0_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rk: Option<RkReport>,
}

impl WorkflowEntry {
    pub fn verdict(&self) -> Option<RkVerdict> {
        self.rk.as_ref().map(|r| r.verdict)
    }
}

/// For each θ: build endpoint 0, measure the operator's ratio there over
/// the inputs, then classify the outputs in the target space.
#[allow(clippy::too_many_arguments)]
pub fn run_extrapolation_workflow(
    thetas: &[f64],
    target: &QuadrupleSpec,
    ws: &[WeightField],
    compact: &CompactEndpoint,
    operator: &OperatorSpec,
    q_tilde: f64,
    cubes: &DyadicCubeSet,
    rk_config: &RkConfig,
) -> Result<Vec<WorkflowEntry>> {
    let outputs: Vec<GridFunction> = compact
        .inputs
        .iter()
        .map(|fs| apply_operator(operator, fs))
        .collect::<Result<_>>()?;
    let family = FunctionFamily::new(outputs.clone(), "operator outputs")?;
    let nu = WeightField::product(ws)?;
    let mut entries = Vec::new();
    for &theta in thetas {
        let run = || -> Result<WorkflowEntry> {
            let e0 = build_extrapolation_family(target, &compact.spec1, ws, &compact.weights1, theta, cubes)?;
            let end0 = Endpoint::from_spec(&e0.spec0, e0.weights0.clone(), 1.0)?;
            let mut ratio = 0.0f64;
            for (fs, tf) in compact.inputs.iter().zip(&outputs) {
                let top = weighted_norm(tf, &end0.q, &end0.v, DEFAULT_REL_TOL)?.value;
                ratio = ratio.max(top / end0.input_norms(fs)?);
            }
            let rk = classify(&family, &target.q, &nu, q_tilde, rk_config)?;
            Ok(WorkflowEntry {
                theta,
                error: None,
                endpoint0_admissible: Some(e0.admissible),
                endpoint0_constant: e0.constant0,
                endpoint0_ratio: Some(ratio),
                rk: Some(rk),
            })
        };
        entries.push(run().unwrap_or_else(|e| WorkflowEntry {
            theta,
            error: Some(e.to_string()),
            endpoint0_admissible: None,
            endpoint0_constant: None,
            endpoint0_ratio: None,
            rk: None,
        }));
    }
    Ok(entries)
}
