//! Muckenhoupt-type constants over dyadic cube families.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{
    dual_exponent, harmonic_combine, theta_blend, validate_quadruple, ExponentField, QuadrupleSpec,
    GAMMA_TOLERANCE,
};
use crate::field::{Cube, CubeId, DyadicCubeSet, Grid, GridFunction, WeightField};
use crate::norms::{norm_on, product_holder_constant, DEFAULT_REL_TOL, OVERFLOW_THRESHOLD};
use crate::par;

/// Default dyadic depth for one-dimensional cube scans.
pub const DEFAULT_CUBE_DEPTH_1D: u32 = 6;
/// Default dyadic depth for planar cube scans.
pub const DEFAULT_CUBE_DEPTH_2D: u32 = 4;

/// Cube convention used by every constant in this module.
pub const CONVENTION: &str = "symmetric: |Q|^power * ||nu chi_Q|| * prod ||w_j^-1 chi_Q||";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubeValue {
    pub cube: CubeId,
    pub value: f64,
}

/// Maximum of a cube functional over an enumerated cube family.
///
/// The constant is a lower bound for the supremum over all cubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightConstantReport {
    /// `+inf` when `overflow` is set.
    pub constant: f64,
    pub argmax_cube: Option<CubeId>,
    pub per_cube_values: Vec<CubeValue>,
    pub cube_set: DyadicCubeSet,
    pub overflow: bool,
    pub convention: String,
}

impl WeightConstantReport {
    pub fn is_finite(&self) -> bool {
        !self.overflow && self.constant.is_finite()
    }

    fn into_result(self) -> Result<Self> {
        if self.overflow {
            Err(Error::OverflowToInfinity {
                value: self.constant,
            })
        } else {
            Ok(self)
        }
    }
}

/// `|Q|^power * ||nu chi_Q||_t * prod_j ||v_j chi_Q||_{s_j}` with every
/// exponent pre-sampled on the grid.
struct CubeFunctional<'a> {
    grid: &'a Grid,
    power: f64,
    factors: Vec<(Vec<f64>, Vec<f64>)>,
}

impl CubeFunctional<'_> {
    fn value(&self, cube: &Cube) -> Result<Option<f64>> {
        let idx = cube.region().indices(self.grid);
        if idx.is_empty() {
            return Ok(None);
        }
        let measure: f64 = idx.iter().map(|&i| self.grid.weight(i)).sum();
        let mut v = measure.powf(self.power);
        for (f, p) in &self.factors {
            let n = norm_on(self.grid, f, p, &idx, DEFAULT_REL_TOL)?.value;
            if !(n <= OVERFLOW_THRESHOLD) {
                return Ok(Some(f64::INFINITY));
            }
            v *= n;
        }
        Ok(Some(v))
    }

    fn report(&self, cubes: &DyadicCubeSet) -> Result<WeightConstantReport> {
        let list = cubes.cubes();
        let values = par::try_map_slice(&list, |c| self.value(c))?;
        let mut per_cube = Vec::new();
        let mut best: Option<CubeValue> = None;
        for (c, v) in list.iter().zip(values) {
            let Some(value) = v else { continue };
            let cv = CubeValue { cube: c.id, value };
            if best.is_none_or(|b| value > b.value) {
                best = Some(cv);
            }
            per_cube.push(cv);
        }
        let constant = best.map_or(0.0, |b| b.value);
        Ok(WeightConstantReport {
            constant,
            argmax_cube: best.map(|b| b.cube),
            per_cube_values: per_cube,
            cube_set: cubes.clone(),
            overflow: constant.is_infinite(),
            convention: CONVENTION.to_string(),
        })
    }
}

fn check_grid<'a>(ws: &[&'a WeightField]) -> Result<&'a Grid> {
    let grid = ws
        .first()
        .ok_or_else(|| Error::Domain("empty weight vector".into()))?
        .grid();
    if ws.iter().any(|w| w.grid() != grid) {
        return Err(Error::Domain("weights live on different grids".into()));
    }
    Ok(grid)
}

/// `[w]_{A_p(·)} = sup_Q |Q|^{-1} ||w chi_Q||_{p(·)} ||w^{-1} chi_Q||_{p'(·)}`.
pub fn ap_constant(w: &WeightField, p: &ExponentField, cubes: &DyadicCubeSet) -> Result<WeightConstantReport> {
    let pd = dual_exponent(p)?;
    let grid = w.grid();
    CubeFunctional {
        grid,
        power: -1.0,
        factors: vec![
            (w.values().to_vec(), p.values_on(grid)?),
            (w.recip().values().to_vec(), pd.values_on(grid)?),
        ],
    }
    .report(cubes)?
    .into_result()
}

fn multilinear_report(ws: &[WeightField], spec: &QuadrupleSpec, cubes: &DyadicCubeSet) -> Result<WeightConstantReport> {
    if ws.len() != spec.m() {
        return Err(Error::ArityMismatch {
            expected: spec.m(),
            got: ws.len(),
        });
    }
    let refs: Vec<&WeightField> = ws.iter().collect();
    let grid = check_grid(&refs)?;
    let verdict = validate_quadruple(spec, GAMMA_TOLERANCE)?;
    if !verdict.admissible() {
        return Err(Error::HypothesisFailure(format!(
            "quadruple is not admissible: {}",
            verdict.failures.join("; ")
        )));
    }
    let nu = WeightField::product(ws)?;
    let mut factors = vec![(nu.values().to_vec(), spec.target_exponent()?.values_on(grid)?)];
    for (j, w) in ws.iter().enumerate() {
        factors.push((w.recip().values().to_vec(), spec.source_exponent(j)?.values_on(grid)?));
    }
    CubeFunctional {
        grid,
        power: spec.cube_power(),
        factors,
    }
    .report(cubes)
}

/// Multilinear constant
/// `sup_Q |Q|^{γ-(1/r-1/s)} ||ν chi_Q||_{1/(1/q-1/s)} prod_j ||w_j^{-1} chi_Q||_{1/(1/r_j-1/p_j)}`
/// with `ν = prod w_j`.
pub fn multilinear_constant(ws: &[WeightField], spec: &QuadrupleSpec, cubes: &DyadicCubeSet) -> Result<WeightConstantReport> {
    multilinear_report(ws, spec, cubes)?.into_result()
}

/// Per-cube identity `[w]_{(p,q),(r,s)} = [w^a]_{A_t}^{1/a}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoToOneReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_error: f64,
    pub a: f64,
    pub t_minus: f64,
    pub t_plus: f64,
}

/// Compares the two-exponent constant of `w` with the one-exponent constant
/// of `w^a`, where `a = 1/(1/r - 1/s - γ)` and `1/t = a (1/q - 1/s)`.
pub fn two_to_one_check(w: &WeightField, spec: &QuadrupleSpec, cubes: &DyadicCubeSet) -> Result<TwoToOneReport> {
    if spec.m() != 1 {
        return Err(Error::ArityMismatch {
            expected: 1,
            got: spec.m(),
        });
    }
    let inv_a = 1.0 / spec.r[0] - spec.inv_s() - spec.gamma;
    if !(inv_a > 0.0) {
        return Err(Error::HypothesisFailure(format!(
            "1/r - 1/s - gamma = {inv_a} must be positive"
        )));
    }
    let a = 1.0 / inv_a;
    let t = ExponentField::from_reciprocals(-a * spec.inv_s(), vec![(a, spec.q.clone())])?;
    if !t.is_banach() {
        return Err(Error::HypothesisFailure(format!(
            "derived exponent t has t_- = {} <= 1",
            t.p_minus()
        )));
    }
    let lhs = multilinear_constant(std::slice::from_ref(w), spec, cubes)?.constant;
    let rhs = ap_constant(&w.pow(a)?, &t, cubes)?.constant.powf(1.0 / a);
    Ok(TwoToOneReport {
        lhs,
        rhs,
        rel_error: (lhs - rhs).abs() / rhs,
        a,
        t_minus: t.p_minus(),
        t_plus: t.p_plus(),
    })
}

/// Outcome of a constant inequality `lhs <= factor * rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub factor: f64,
    pub ratio: f64,
    pub holds: bool,
}

impl InequalityReport {
    fn new(lhs: f64, rhs: f64, factor: f64) -> Self {
        InequalityReport {
            lhs,
            rhs,
            factor,
            ratio: lhs / rhs,
            holds: lhs <= factor * rhs * (1.0 + 1e-9),
        }
    }
}

/// Checks `[w]_{(r,∞)} <= C [w]_{(r,s)}` for finite `s`, where `C` is the
/// Hölder constant of `||ν chi_Q||_q <= C ||chi_Q||_s ||ν chi_Q||_{1/(1/q-1/s)}`.
pub fn containment_check(ws: &[WeightField], spec: &QuadrupleSpec, cubes: &DyadicCubeSet) -> Result<InequalityReport> {
    if spec.s.is_infinite() {
        return Err(Error::HypothesisFailure("containment needs a finite s".into()));
    }
    let grid = check_grid(&ws.iter().collect::<Vec<_>>())?;
    let companion = spec.with_s(f64::INFINITY);
    let finite = multilinear_constant(ws, spec, cubes)?.constant;
    let infinite = multilinear_constant(ws, &companion, cubes)?.constant;
    let s_field = ExponentField::constant(spec.domain().clone(), spec.s)?;
    let c = product_holder_constant(&spec.q, &[s_field, spec.target_exponent()?], grid)?;
    Ok(InequalityReport::new(infinite, finite, c))
}

/// Result of [`blend_constant_check`] together with the blended data.
#[derive(Debug, Clone)]
pub struct BlendReport {
    pub inequality: InequalityReport,
    pub constant0: f64,
    pub constant1: f64,
    pub spec: QuadrupleSpec,
    pub weights: Vec<WeightField>,
}

fn same_parameters(a: &QuadrupleSpec, b: &QuadrupleSpec) -> bool {
    a.r == b.r && a.s == b.s && (a.gamma - b.gamma).abs() <= GAMMA_TOLERANCE
}

/// Hölder constant for `||f0^{1-θ} f1^θ||_t <= C ||f0||_{t0}^{1-θ} ||f1||_{t1}^θ`
/// when `1/t = (1-θ)/t0 + θ/t1`.
fn blend_factor_constant(t0: &ExponentField, t1: &ExponentField, theta: f64, grid: &Grid) -> Result<f64> {
    if t0.constant_value().is_some() && t1.constant_value().is_some() {
        return Ok(1.0);
    }
    let t = theta_blend(t0, t1, theta)?;
    product_holder_constant(&t, &[t0.scaled(1.0 / (1.0 - theta))?, t1.scaled(1.0 / theta)?], grid)
}

/// Checks `[w] <= C [w0]^{1-θ} [w1]^θ` for the blended spec and weights
/// `w_j = w0_j^{1-θ} w1_j^θ`.
pub fn blend_constant_check(
    w0: &[WeightField],
    w1: &[WeightField],
    spec0: &QuadrupleSpec,
    spec1: &QuadrupleSpec,
    theta: f64,
    cubes: &DyadicCubeSet,
) -> Result<BlendReport> {
    if !same_parameters(spec0, spec1) {
        return Err(Error::SpecMismatch(
            "blended specs must share r, s and gamma".into(),
        ));
    }
    if spec0.m() != spec1.m() || w0.len() != w1.len() {
        return Err(Error::ArityMismatch {
            expected: spec0.m(),
            got: spec1.m(),
        });
    }
    let p: Vec<ExponentField> = spec0
        .p
        .iter()
        .zip(&spec1.p)
        .map(|(a, b)| theta_blend(a, b, theta))
        .collect::<Result<_>>()?;
    let q = theta_blend(&spec0.q, &spec1.q, theta)?;
    let spec = QuadrupleSpec::new(p, q, spec0.r.clone(), spec0.s, spec0.gamma)?;
    let weights: Vec<WeightField> = w0
        .iter()
        .zip(w1)
        .map(|(a, b)| WeightField::blend(a, b, theta))
        .collect::<Result<_>>()?;
    let grid = check_grid(&weights.iter().collect::<Vec<_>>())?;

    let mut c = blend_factor_constant(&spec0.target_exponent()?, &spec1.target_exponent()?, theta, grid)?;
    for j in 0..spec.m() {
        c *= blend_factor_constant(&spec0.source_exponent(j)?, &spec1.source_exponent(j)?, theta, grid)?;
    }
    let k0 = multilinear_constant(w0, spec0, cubes)?.constant;
    let k1 = multilinear_constant(w1, spec1, cubes)?.constant;
    let k = multilinear_constant(&weights, &spec, cubes)?.constant;
    Ok(BlendReport {
        inequality: InequalityReport::new(k, k0.powf(1.0 - theta) * k1.powf(theta), c),
        constant0: k0,
        constant1: k1,
        spec,
        weights,
    })
}

/// Component constants `[w_j]_{A_{p_j,(r_j,σ_j)}}` and the aggregate
/// `[ν]_{A_{(p,q),(r,s)}}`; `None` marks an overflowed (infinite) constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub sigma: Vec<f64>,
    pub components: Vec<Option<f64>>,
    pub nu_constant: Option<f64>,
    pub multilinear: Option<f64>,
    pub components_finite: bool,
    pub multilinear_finite: bool,
    pub consistent: bool,
}

fn finite_or_none(r: Result<WeightConstantReport>) -> Result<Option<f64>> {
    match r {
        Ok(rep) if rep.is_finite() => Ok(Some(rep.constant)),
        Ok(_) | Err(Error::OverflowToInfinity { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `1/σ_j = 1/r_j - (1/r - 1/s)`; refuses nonpositive values.
pub fn component_sigmas(spec: &QuadrupleSpec) -> Result<Vec<f64>> {
    let shift = 1.0 / spec.r_harmonic() - spec.inv_s();
    spec.r
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let inv = 1.0 / r - shift;
            if inv > 0.0 {
                Ok(1.0 / inv)
            } else {
                Err(Error::range(
                    &spec.domain().center(),
                    format!("1/sigma_{} = {inv} is not positive", j + 1),
                ))
            }
        })
        .collect()
}

/// Evaluates each component membership and compares finiteness with the
/// multilinear constant on the same cube family.
pub fn componentwise_characterize(ws: &[WeightField], spec: &QuadrupleSpec, cubes: &DyadicCubeSet) -> Result<ComponentReport> {
    let sigma = component_sigmas(spec)?;
    let mut components = Vec::with_capacity(ws.len());
    for (j, w) in ws.iter().enumerate() {
        let cs = QuadrupleSpec::new(
            vec![spec.p[j].clone()],
            spec.p[j].clone(),
            vec![spec.r[j]],
            sigma[j],
            0.0,
        )?;
        components.push(finite_or_none(multilinear_report(std::slice::from_ref(w), &cs, cubes))?);
    }
    let nu = WeightField::product(ws)?;
    let nu_spec = QuadrupleSpec::new(
        vec![harmonic_combine(&spec.p)?],
        spec.q.clone(),
        vec![spec.r_harmonic()],
        spec.s,
        spec.gamma,
    )?;
    let nu_constant = finite_or_none(multilinear_report(&[nu], &nu_spec, cubes))?;
    let multilinear = finite_or_none(multilinear_report(ws, spec, cubes))?;
    let components_finite = components.iter().all(Option::is_some) && nu_constant.is_some();
    let multilinear_finite = multilinear.is_some();
    Ok(ComponentReport {
        sigma,
        components,
        nu_constant,
        multilinear,
        components_finite,
        multilinear_finite,
        consistent: components_finite == multilinear_finite,
    })
}

/// `u = w^{p(·)}`, the weight of the non-symmetric convention.
pub fn to_nonsymmetric(w: &WeightField, p: &ExponentField) -> Result<WeightField> {
    let pv = p.values_on(w.grid())?;
    WeightField::new(GridFunction::new(
        w.grid().clone(),
        w.values().iter().zip(&pv).map(|(v, p)| v.powf(*p)).collect(),
    )?)
}

/// `w = u^{1/p(·)}`.
pub fn from_nonsymmetric(u: &WeightField, p: &ExponentField) -> Result<WeightField> {
    let pv = p.values_on(u.grid())?;
    WeightField::new(GridFunction::new(
        u.grid().clone(),
        u.values().iter().zip(&pv).map(|(v, p)| v.powf(1.0 / p)).collect(),
    )?)
}

/// Classical `[u]_{A_p} = sup_Q (avg_Q u) (avg_Q u^{-1/(p-1)})^{p-1}` for a
/// constant `p > 1`. Equals `[u^{1/p}]_{A_p}^p` in the symmetric convention.
pub fn classical_ap_constant(u: &WeightField, p: f64, cubes: &DyadicCubeSet) -> Result<WeightConstantReport> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("classical A_p needs p > 1, got {p}")));
    }
    let grid = u.grid();
    let dual = -1.0 / (p - 1.0);
    let list = cubes.cubes();
    let values = par::map_slice(&list, |c| {
        let idx = c.region().indices(grid);
        if idx.is_empty() {
            return None;
        }
        let m: f64 = idx.iter().map(|&i| grid.weight(i)).sum();
        let a: f64 = idx.iter().map(|&i| grid.weight(i) * u.values()[i]).sum::<f64>() / m;
        let b: f64 = idx
            .iter()
            .map(|&i| grid.weight(i) * u.values()[i].powf(dual))
            .sum::<f64>()
            / m;
        Some(a * b.powf(p - 1.0))
    });
    let mut per_cube = Vec::new();
    let mut best: Option<CubeValue> = None;
    for (c, v) in list.iter().zip(values) {
        let Some(value) = v else { continue };
        let cv = CubeValue { cube: c.id, value };
        if best.is_none_or(|b| value > b.value) {
            best = Some(cv);
        }
        per_cube.push(cv);
    }
    let constant = best.map_or(0.0, |b| b.value);
    Ok(WeightConstantReport {
        constant,
        argmax_cube: best.map(|b| b.cube),
        per_cube_values: per_cube,
        cube_set: cubes.clone(),
        overflow: !(constant <= OVERFLOW_THRESHOLD),
        convention: "non-symmetric: avg_Q u * (avg_Q u^(-1/(p-1)))^(p-1)".to_string(),
    })
}
