//! Variable exponents, their reciprocal algebra and admissible quadruples.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{BoxDomain, Grid, Outside, SampledTable};

/// Default pointwise tolerance for `1/p - 1/q = gamma`.
pub const GAMMA_TOLERANCE: f64 = 1e-9;
/// Log-Hölder estimates above this are treated as "not log-Hölder".
pub const LOG_HOLDER_THRESHOLD: f64 = 10.0;
/// Default pair budget for properness checks.
pub const DEFAULT_LH_BUDGET: usize = 10_000;

const SCAN_RESOLUTION_1D: usize = 4097;
const SCAN_RESOLUTION_2D: usize = 257;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Constant(f64),
    Affine {
        base: f64,
        slope: Vec<f64>,
    },
    LogDecay {
        limit: f64,
        amplitude: f64,
        center: Vec<f64>,
    },
    Piecewise {
        axis: usize,
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    Table(SampledTable),
    /// `1/p(x) = offset + sum c_i / p_i(x)`.
    Reciprocal {
        offset: f64,
        terms: Vec<(f64, ExponentField)>,
    },
}

/// A variable exponent `p(.)` on a box, with cached `p_-` and `p_+`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField {
    domain: BoxDomain,
    kind: Arc<Kind>,
    p_minus: f64,
    p_plus: f64,
    p_infinity: Option<f64>,
}

impl ExponentField {
    fn build(domain: BoxDomain, kind: Kind, p_infinity: Option<f64>) -> Result<Self> {
        domain.validate()?;
        let mut field = ExponentField {
            domain,
            kind: Arc::new(kind),
            p_minus: f64::NAN,
            p_plus: f64::NAN,
            p_infinity,
        };
        let (lo, hi) = field.extremes()?;
        if !(lo > 0.0 && hi.is_finite()) {
            return Err(Error::Domain(format!(
                "exponent range [{lo}, {hi}] leaves (0, inf)"
            )));
        }
        field.p_minus = lo;
        field.p_plus = hi;
        Ok(field)
    }

    pub fn constant(domain: BoxDomain, value: f64) -> Result<Self> {
        ExponentField::build(domain, Kind::Constant(value), Some(value))
    }

    /// `p(x) = base + slope . x`.
    pub fn affine(domain: BoxDomain, base: f64, slope: Vec<f64>) -> Result<Self> {
        ExponentField::build(domain, Kind::Affine { base, slope }, None)
    }

    /// `p(x) = limit + amplitude / log(e + |x - center|)`, with `p_inf = limit`.
    pub fn log_decay(domain: BoxDomain, limit: f64, amplitude: f64, center: Vec<f64>) -> Result<Self> {
        ExponentField::build(
            domain,
            Kind::LogDecay {
                limit,
                amplitude,
                center,
            },
            Some(limit),
        )
    }

    /// `values[i]` where `i` counts the breaks strictly below `x[axis]`.
    pub fn piecewise(domain: BoxDomain, axis: usize, breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 || axis >= domain.dim() {
            return Err(Error::Descriptor(
                "piecewise exponent needs one more value than breaks on a valid axis".into(),
            ));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Descriptor("piecewise breaks must increase".into()));
        }
        ExponentField::build(
            domain,
            Kind::Piecewise {
                axis,
                breaks,
                values,
            },
            None,
        )
    }

    /// Multilinear interpolation of a sampled table, clamped outside it.
    pub fn table(domain: BoxDomain, table: SampledTable) -> Result<Self> {
        ExponentField::build(domain, Kind::Table(table), None)
    }

    /// `1/p = offset + sum c_i / p_i`. Collapses to a constant when every
    /// term is constant.
    pub fn from_reciprocals(offset: f64, terms: Vec<(f64, ExponentField)>) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::Domain("reciprocal combination needs a term".into()))?;
        let domain = first.domain.clone();
        if terms.iter().any(|(_, p)| p.domain != domain) {
            return Err(Error::Domain("exponents live on different domains".into()));
        }
        if terms.iter().all(|(_, p)| p.constant_value().is_some()) {
            let inv: f64 = offset
                + terms
                    .iter()
                    .map(|(c, p)| c / p.constant_value().unwrap())
                    .sum::<f64>();
            if !(inv > 0.0) {
                return Err(Error::range(
                    &domain.center(),
                    format!("reciprocal exponent {inv} is not positive"),
                ));
            }
            return ExponentField::constant(domain, 1.0 / inv);
        }
        let p_inf = terms
            .iter()
            .map(|(c, p)| p.p_infinity.map(|v| c / v))
            .sum::<Option<f64>>()
            .map(|s| 1.0 / (offset + s))
            .filter(|v| *v > 0.0 && v.is_finite());
        let field = ExponentField {
            domain: domain.clone(),
            kind: Arc::new(Kind::Reciprocal { offset, terms }),
            p_minus: f64::NAN,
            p_plus: f64::NAN,
            p_infinity: p_inf,
        };
        // locate a violating point before computing extremes
        field.scan_points(|x| {
            let inv = field.reciprocal_at(x);
            if inv > 0.0 && inv.is_finite() {
                Ok(())
            } else {
                Err(Error::range(
                    x,
                    format!("derived exponent has reciprocal {inv} <= 0"),
                ))
            }
        })?;
        let kind = Arc::try_unwrap(field.kind).unwrap_or_else(|k| (*k).clone());
        ExponentField::build(domain, kind, p_inf)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    /// Declared limit at infinity, if any.
    pub fn declared_p_infinity(&self) -> Option<f64> {
        self.p_infinity
    }

    /// Class `P`: `p_- > 1`.
    pub fn is_banach(&self) -> bool {
        self.p_minus > 1.0
    }

    pub fn constant_value(&self) -> Option<f64> {
        match &*self.kind {
            Kind::Constant(v) => Some(*v),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &*self.kind {
            Kind::Constant(v) => *v,
            Kind::Affine { base, slope } => {
                base + slope
                    .iter()
                    .zip(x)
                    .map(|(s, v)| s * v)
                    .sum::<f64>()
            }
            Kind::LogDecay {
                limit,
                amplitude,
                center,
            } => limit + amplitude / (std::f64::consts::E + dist(x, center)).ln(),
            Kind::Piecewise {
                axis,
                breaks,
                values,
            } => {
                let v = x[*axis];
                values[breaks.iter().filter(|b| **b < v).count()]
            }
            Kind::Table(t) => t.eval(x),
            Kind::Reciprocal { .. } => 1.0 / self.reciprocal_at(x),
        }
    }

    /// `1/p(x)`.
    pub fn reciprocal_at(&self, x: &[f64]) -> f64 {
        match &*self.kind {
            Kind::Reciprocal { offset, terms } => {
                offset + terms.iter().map(|(c, p)| c / p.eval(x)).sum::<f64>()
            }
            _ => 1.0 / self.eval(x),
        }
    }

    /// Values at the nodes of `grid`; errors at the first node outside `(0, inf)`.
    pub fn values_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        if let Some(v) = self.constant_value() {
            return Ok(vec![v; grid.len()]);
        }
        (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                let v = self.eval(x);
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::range(x, format!("exponent value {v} outside (0, inf)")))
                }
            })
            .collect()
    }

    /// `(min, max)` over the nodes of `grid`.
    pub fn range_on(&self, grid: &Grid) -> Result<(f64, f64)> {
        let v = self.values_on(grid)?;
        Ok(v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x))))
    }

    fn scan_points(&self, mut visit: impl FnMut(&[f64]) -> Result<()>) -> Result<()> {
        let n = self.domain.dim();
        let res = if n == 1 {
            SCAN_RESOLUTION_1D
        } else {
            SCAN_RESOLUTION_2D
        };
        let grid = Grid::new(self.domain.clone(), vec![res; n])?;
        for i in 0..grid.len() {
            visit(grid.point(i))?;
        }
        Ok(())
    }

    fn extremes(&self) -> Result<(f64, f64)> {
        let corners = self.domain.corners();
        let over = |vals: &mut dyn Iterator<Item = f64>| {
            vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
        };
        Ok(match &*self.kind {
            Kind::Constant(v) => (*v, *v),
            Kind::Affine { .. } => over(&mut corners.iter().map(|c| self.eval(c))),
            Kind::LogDecay {
                limit,
                amplitude,
                center,
            } => {
                let near: f64 = (0..self.domain.dim())
                    .map(|a| {
                        let c = center.get(a).copied().unwrap_or(0.0);
                        let d = c.clamp(self.domain.lo[a], self.domain.hi[a]) - c;
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt();
                let far = corners
                    .iter()
                    .map(|c| dist(c, center))
                    .fold(0.0, f64::max);
                let at = |d: f64| limit + amplitude / (std::f64::consts::E + d).ln();
                over(&mut [at(near), at(far)].into_iter())
            }
            Kind::Piecewise {
                axis,
                breaks,
                values,
            } => {
                let (lo, hi) = (self.domain.lo[*axis], self.domain.hi[*axis]);
                let present = values.iter().enumerate().filter(|(i, _)| {
                    // piece i covers (breaks[i-1], breaks[i]]
                    let left = if *i == 0 { f64::NEG_INFINITY } else { breaks[i - 1] };
                    let right = breaks.get(*i).copied().unwrap_or(f64::INFINITY);
                    right >= lo && left < hi
                });
                over(&mut present.map(|(_, v)| *v))
            }
            Kind::Table(t) => t.min_max(),
            Kind::Reciprocal { offset, terms } => {
                let variable: Vec<&(f64, ExponentField)> = terms
                    .iter()
                    .filter(|(_, p)| p.constant_value().is_none())
                    .collect();
                if variable.len() == 1 {
                    // monotone in the single variable term
                    let (c, p) = variable[0];
                    let rest: f64 = offset
                        + terms
                            .iter()
                            .filter_map(|(c, p)| p.constant_value().map(|v| c / v))
                            .sum::<f64>();
                    let a = rest + c / p.p_minus;
                    let b = rest + c / p.p_plus;
                    if !(a > 0.0 && b > 0.0) {
                        return Err(Error::range(
                            &self.domain.center(),
                            "derived exponent is not positive",
                        ));
                    }
                    let (v1, v2) = (1.0 / a, 1.0 / b);
                    (v1.min(v2), v1.max(v2))
                } else {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    self.scan_points(|x| {
                        let v = self.eval(x);
                        lo = lo.min(v);
                        hi = hi.max(v);
                        Ok(())
                    })?;
                    (lo, hi)
                }
            }
        })
    }

    /// `p(.) * c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("scale factor {c} must be positive")));
        }
        ExponentField::from_reciprocals(0.0, vec![(1.0 / c, self.clone())])
    }

    /// The `p_inf` used for the log-Hölder estimate at infinity: the declared
    /// value, else the value at the domain point of largest norm.
    pub fn p_infinity_for_estimate(&self) -> f64 {
        self.p_infinity.unwrap_or_else(|| {
            let far = self
                .domain
                .corners()
                .into_iter()
                .max_by(|a, b| norm(a).total_cmp(&norm(b)))
                .expect("box has corners");
            self.eval(&far)
        })
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(x: &[f64], c: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(a, v)| {
            let d = v - c.get(a).copied().unwrap_or(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// `p'` with `1/p + 1/p' = 1`.
pub fn dual_exponent(p: &ExponentField) -> Result<ExponentField> {
    if !p.is_banach() {
        return Err(Error::Domain(format!(
            "dual exponent needs p_- > 1, got {}",
            p.p_minus()
        )));
    }
    ExponentField::from_reciprocals(1.0, vec![(-1.0, p.clone())])
}

/// `1/p = sum 1/p_j`.
pub fn harmonic_combine(ps: &[ExponentField]) -> Result<ExponentField> {
    ExponentField::from_reciprocals(0.0, ps.iter().map(|p| (1.0, p.clone())).collect())
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta {theta} must lie in (0, 1)")))
    }
}

/// `1/p = (1 - theta)/p0 + theta/p1`.
pub fn theta_blend(p0: &ExponentField, p1: &ExponentField, theta: f64) -> Result<ExponentField> {
    check_theta(theta)?;
    ExponentField::from_reciprocals(0.0, vec![(1.0 - theta, p0.clone()), (theta, p1.clone())])
}

/// Recovers `p0` from `p = blend(p0, p1, theta)`:
/// `1/p0 = (1/p - theta/p1) / (1 - theta)`.
pub fn theta_invert(p: &ExponentField, p1: &ExponentField, theta: f64) -> Result<ExponentField> {
    check_theta(theta)?;
    let k = 1.0 / (1.0 - theta);
    ExponentField::from_reciprocals(0.0, vec![(k, p.clone()), (-theta * k, p1.clone())])
}

/// Sampled lower bounds for the log-Hölder constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogHolderReport {
    pub c0_estimate: f64,
    pub c_inf_estimate: f64,
    pub p_infinity: f64,
    pub sample_pairs: usize,
}

impl LogHolderReport {
    pub fn c_log(&self) -> f64 {
        self.c0_estimate.max(self.c_inf_estimate)
    }
}

/// Estimates `C_0` and `C_inf` from `budget` random point pairs.
///
/// The sample sequence for a budget is a prefix of the one for any larger
/// budget, so the estimates never decrease as the budget grows.
pub fn log_holder_estimate(p: &ExponentField, budget: usize) -> LogHolderReport {
    let p_inf = p.p_infinity_for_estimate();
    if budget < 2 {
        return LogHolderReport {
            c0_estimate: 0.0,
            c_inf_estimate: 0.0,
            p_infinity: p_inf,
            sample_pairs: budget,
        };
    }
    let dom = p.domain();
    let n = dom.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1061_0de4);
    let (mut c0, mut cinf) = (0.0f64, 0.0f64);
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let tail = |x: &[f64]| (p.eval(x) - p_inf).abs() * (std::f64::consts::E + norm(x)).ln();
    for corner in dom.corners() {
        cinf = cinf.max(tail(&corner));
    }
    for _ in 0..budget {
        for a in 0..n {
            x[a] = rng.gen_range(dom.lo[a]..=dom.hi[a]);
        }
        // log-uniform separation in [1e-12, 1/2)
        let d = (rng.gen_range((1e-12f64).ln()..(0.5f64).ln())).exp();
        let mut dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = norm(&dir).max(1e-300);
        dir.iter_mut().for_each(|v| *v /= len);
        for a in 0..n {
            y[a] = x[a] + d * dir[a];
        }
        cinf = cinf.max(tail(&x));
        if dom.contains(&y) {
            let sep = dist(&x, &y);
            if sep > 0.0 && sep < 0.5 {
                c0 = c0.max((p.eval(&x) - p.eval(&y)).abs() * -sep.ln());
            }
        }
    }
    LogHolderReport {
        c0_estimate: c0,
        c_inf_estimate: cinf,
        p_infinity: p_inf,
        sample_pairs: budget,
    }
}

/// An `m`-admissible candidate `(p_vec, q, r_vec, s)` with offset `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrupleSpec {
    pub p: Vec<ExponentField>,
    pub q: ExponentField,
    pub r: Vec<f64>,
    /// May be `f64::INFINITY`.
    pub s: f64,
    pub gamma: f64,
}

impl QuadrupleSpec {
    pub fn new(p: Vec<ExponentField>, q: ExponentField, r: Vec<f64>, s: f64, gamma: f64) -> Result<Self> {
        if p.is_empty() || p.len() != r.len() {
            return Err(Error::Domain(format!(
                "quadruple needs m >= 1 exponents and as many r_j (got {} and {})",
                p.len(),
                r.len()
            )));
        }
        if p.iter().any(|pj| pj.domain() != q.domain()) {
            return Err(Error::Domain("quadruple exponents live on different domains".into()));
        }
        Ok(QuadrupleSpec { p, q, r, s, gamma })
    }

    /// Builds the spec with `1/q = 1/p - gamma`.
    pub fn with_gamma(p: Vec<ExponentField>, r: Vec<f64>, s: f64, gamma: f64) -> Result<Self> {
        let hp = harmonic_combine(&p)?;
        let q = ExponentField::from_reciprocals(-gamma, vec![(1.0, hp)])?;
        QuadrupleSpec::new(p, q, r, s, gamma)
    }

    pub fn m(&self) -> usize {
        self.p.len()
    }

    pub fn domain(&self) -> &BoxDomain {
        self.q.domain()
    }

    /// `1/r = sum 1/r_j`.
    pub fn r_harmonic(&self) -> f64 {
        1.0 / self.r.iter().map(|r| 1.0 / r).sum::<f64>()
    }

    /// `p(.)` with `1/p = sum 1/p_j`.
    pub fn p_harmonic(&self) -> Result<ExponentField> {
        harmonic_combine(&self.p)
    }

    pub fn inv_s(&self) -> f64 {
        if self.s.is_infinite() {
            0.0
        } else {
            1.0 / self.s
        }
    }

    /// Exponent `1/(1/q - 1/s)` of the `nu_w` factor.
    pub fn target_exponent(&self) -> Result<ExponentField> {
        ExponentField::from_reciprocals(-self.inv_s(), vec![(1.0, self.q.clone())])
    }

    /// Exponent `1/(1/r_j - 1/p_j)` of the `w_j^{-1}` factor.
    pub fn source_exponent(&self, j: usize) -> Result<ExponentField> {
        ExponentField::from_reciprocals(1.0 / self.r[j], vec![(-1.0, self.p[j].clone())])
    }

    /// Power of `|Q|` in the cube functional: `gamma - (1/r - 1/s)`.
    pub fn cube_power(&self) -> f64 {
        self.gamma - (1.0 / self.r_harmonic() - self.inv_s())
    }

    /// Same data with `s` replaced.
    pub fn with_s(&self, s: f64) -> Self {
        QuadrupleSpec { s, ..self.clone() }
    }
}

/// Per-clause outcome of [`validate_quadruple`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleVerdict {
    /// `r_j < (p_j)_-` for each `j`.
    pub r_clauses: Vec<bool>,
    /// `q_+ < s`.
    pub q_clause: bool,
    /// `|1/p - 1/q - gamma| <= tol` on the validation grid.
    pub gamma_clause: bool,
    pub gamma_max_deviation: f64,
    /// Positive `r_j`, positive `s`, nonnegative `gamma`.
    pub constants_clause: bool,
    pub proper: bool,
    pub log_holder: Vec<LogHolderReport>,
    pub failures: Vec<String>,
}

impl QuadrupleVerdict {
    pub fn admissible(&self) -> bool {
        self.r_clauses.iter().all(|&b| b) && self.q_clause && self.gamma_clause && self.constants_clause
    }
}

/// Checks every admissibility clause and properness.
pub fn validate_quadruple(spec: &QuadrupleSpec, tol: f64) -> Result<QuadrupleVerdict> {
    let mut failures = Vec::new();
    let constants_clause =
        spec.r.iter().all(|&r| r > 0.0) && spec.s > 0.0 && spec.gamma >= 0.0 && spec.gamma.is_finite();
    if !constants_clause {
        failures.push("r_j > 0, s > 0 and gamma >= 0 required".to_string());
    }
    let r_clauses: Vec<bool> = spec
        .r
        .iter()
        .zip(&spec.p)
        .map(|(r, p)| *r < p.p_minus())
        .collect();
    for (j, ok) in r_clauses.iter().enumerate() {
        if !ok {
            failures.push(format!(
                "r_{} = {} is not below (p_{})_- = {}",
                j + 1,
                spec.r[j],
                j + 1,
                spec.p[j].p_minus()
            ));
        }
    }
    let q_clause = spec.q.p_plus() < spec.s;
    if !q_clause {
        failures.push(format!("q_+ = {} is not below s = {}", spec.q.p_plus(), spec.s));
    }
    let dom = spec.domain();
    let n = dom.dim();
    let res = if n == 1 {
        SCAN_RESOLUTION_1D
    } else {
        SCAN_RESOLUTION_2D
    };
    let grid = Grid::new(dom.clone(), vec![res; n])?;
    let mut dev = 0.0f64;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let inv_p: f64 = spec.p.iter().map(|p| p.reciprocal_at(x)).sum();
        dev = dev.max((inv_p - spec.q.reciprocal_at(x) - spec.gamma).abs());
    }
    let gamma_clause = dev <= tol;
    if !gamma_clause {
        failures.push(format!("1/p - 1/q deviates from gamma by {dev:e} (tol {tol:e})"));
    }
    let log_holder: Vec<LogHolderReport> = spec
        .p
        .iter()
        .chain(std::iter::once(&spec.q))
        .map(|p| log_holder_estimate(p, DEFAULT_LH_BUDGET))
        .collect();
    let proper = log_holder.iter().all(|r| r.c_log() <= LOG_HOLDER_THRESHOLD);
    if !proper {
        failures.push("some exponent fails the log-Hölder threshold (not proper)".to_string());
    }
    Ok(QuadrupleVerdict {
        r_clauses,
        q_clause,
        gamma_clause,
        gamma_max_deviation: dev,
        constants_clause,
        proper,
        log_holder,
        failures,
    })
}

// ---------------------------------------------------------------------------
// JSON descriptors

/// `{"kind": ..., "params": {...}, "p_infinity": optional}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExponent", into = "RawExponent")]
pub struct ExponentDescriptor {
    pub shape: ExponentShape,
    pub p_infinity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExponentShape {
    Constant(ConstantExponent),
    Affine(AffineExponent),
    LogDecay(LogDecayExponent),
    Piecewise(PiecewiseExponent),
    Grid(GridExponent),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantExponent {
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineExponent {
    pub base: f64,
    pub slope: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogDecayExponent {
    pub limit: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseExponent {
    #[serde(default)]
    pub axis: usize,
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

/// Inline table (`lo`, `hi`, `resolution`, `values`) or a CSV `path`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridExponent {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<std::path::PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExponent {
    kind: String,
    params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_infinity: Option<f64>,
}

impl TryFrom<RawExponent> for ExponentDescriptor {
    type Error = String;

    fn try_from(raw: RawExponent) -> std::result::Result<Self, String> {
        fn parse<T: serde::de::DeserializeOwned>(v: serde_json::Value, kind: &str) -> std::result::Result<T, String> {
            serde_json::from_value(v).map_err(|e| format!("params of `{kind}` exponent: {e}"))
        }
        let shape = match raw.kind.as_str() {
            "constant" => ExponentShape::Constant(parse(raw.params, "constant")?),
            "affine" => ExponentShape::Affine(parse(raw.params, "affine")?),
            "log_decay" => ExponentShape::LogDecay(parse(raw.params, "log_decay")?),
            "piecewise" => ExponentShape::Piecewise(parse(raw.params, "piecewise")?),
            "grid" => ExponentShape::Grid(parse(raw.params, "grid")?),
            other => {
                return Err(format!(
                    "unknown exponent kind `{other}` (expected constant, affine, log_decay, piecewise or grid)"
                ))
            }
        };
        Ok(ExponentDescriptor {
            shape,
            p_infinity: raw.p_infinity,
        })
    }
}

impl From<ExponentDescriptor> for RawExponent {
    fn from(d: ExponentDescriptor) -> Self {
        let (kind, params) = match d.shape {
            ExponentShape::Constant(p) => ("constant", serde_json::to_value(p)),
            ExponentShape::Affine(p) => ("affine", serde_json::to_value(p)),
            ExponentShape::LogDecay(p) => ("log_decay", serde_json::to_value(p)),
            ExponentShape::Piecewise(p) => ("piecewise", serde_json::to_value(p)),
            ExponentShape::Grid(p) => ("grid", serde_json::to_value(p)),
        };
        RawExponent {
            kind: kind.to_string(),
            params: params.expect("plain data serializes"),
            p_infinity: d.p_infinity,
        }
    }
}

impl ExponentDescriptor {
    pub fn constant(value: f64) -> Self {
        ExponentDescriptor {
            shape: ExponentShape::Constant(ConstantExponent { value }),
            p_infinity: None,
        }
    }

    pub fn affine(base: f64, slope: Vec<f64>) -> Self {
        ExponentDescriptor {
            shape: ExponentShape::Affine(AffineExponent { base, slope }),
            p_infinity: None,
        }
    }

    pub fn build(&self, domain: &BoxDomain) -> Result<ExponentField> {
        let d = domain.clone();
        let mut field = match &self.shape {
            ExponentShape::Constant(c) => ExponentField::constant(d, c.value)?,
            ExponentShape::Affine(a) => ExponentField::affine(d, a.base, a.slope.clone())?,
            ExponentShape::LogDecay(l) => {
                ExponentField::log_decay(d, l.limit, l.amplitude, l.center.clone())?
            }
            ExponentShape::Piecewise(p) => {
                ExponentField::piecewise(d, p.axis, p.breaks.clone(), p.values.clone())?
            }
            ExponentShape::Grid(g) => {
                let table = match (&g.path, &g.lo, &g.hi, &g.resolution, &g.values) {
                    (Some(path), None, None, None, None) => {
                        SampledTable::from_csv(path, Outside::Clamp)?
                    }
                    (None, Some(lo), Some(hi), Some(res), Some(values)) => {
                        SampledTable::uniform(lo, hi, res, values.clone(), Outside::Clamp)?
                    }
                    _ => {
                        return Err(Error::Descriptor(
                            "grid exponent needs either `path` or all of lo, hi, resolution, values"
                                .into(),
                        ))
                    }
                };
                ExponentField::table(d, table)?
            }
        };
        if self.p_infinity.is_some() {
            field.p_infinity = self.p_infinity;
        }
        Ok(field)
    }
}

/// Serde helper writing `+inf` as the string `"inf"`.
pub mod extended_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

fn infinite() -> f64 {
    f64::INFINITY
}

/// JSON form of a quadruple. `q` may be omitted, in which case
/// `1/q = 1/p - gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadrupleDescriptor {
    pub p: Vec<ExponentDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<ExponentDescriptor>,
    pub r: Vec<f64>,
    #[serde(default = "infinite", with = "extended_real")]
    pub s: f64,
    #[serde(default)]
    pub gamma: f64,
}

impl QuadrupleDescriptor {
    pub fn build(&self, domain: &BoxDomain) -> Result<QuadrupleSpec> {
        let p: Vec<ExponentField> = self.p.iter().map(|d| d.build(domain)).collect::<Result<_>>()?;
        match &self.q {
            Some(q) => QuadrupleSpec::new(p, q.build(domain)?, self.r.clone(), self.s, self.gamma),
            None => QuadrupleSpec::with_gamma(p, self.r.clone(), self.s, self.gamma),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> BoxDomain {
        BoxDomain::interval(0.0, 1.0)
    }

    fn c(v: f64) -> ExponentField {
        ExponentField::constant(unit(), v).unwrap()
    }

    #[test]
    fn dual_of_constants() {
        assert_eq!(dual_exponent(&c(2.0)).unwrap().constant_value(), Some(2.0));
        let d = dual_exponent(&c(4.0)).unwrap().constant_value().unwrap();
        assert!((d - 4.0 / 3.0).abs() < 1e-15);
        assert!(matches!(dual_exponent(&c(1.0)), Err(Error::Domain(_))));
        assert!(matches!(dual_exponent(&c(0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn dual_of_affine_pointwise() {
        let p = ExponentField::affine(unit(), 2.0, vec![1.0]).unwrap();
        let d = dual_exponent(&p).unwrap();
        assert!((d.eval(&[0.0]) - 2.0).abs() < 1e-14);
        assert!((d.eval(&[1.0]) - 1.5).abs() < 1e-14);
        for i in 0..1024 {
            let x = i as f64 / 1023.0;
            let pv = 2.0 + x;
            // independent solve of 1/p + 1/p' = 1
            let expected = pv / (pv - 1.0);
            assert!((d.eval(&[x]) - expected).abs() < 1e-13);
        }
        // (p')_- = (p_+)' and (p')_+ = (p_-)'
        assert!((d.p_minus() - 1.5).abs() < 1e-14);
        assert!((d.p_plus() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn harmonic_combine_examples() {
        let one = harmonic_combine(&[c(2.0), c(2.0)]).unwrap();
        assert_eq!(one.constant_value(), Some(1.0));
        let p = harmonic_combine(&[c(4.0), c(4.0), c(4.0)]).unwrap();
        assert!((p.constant_value().unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let a = ExponentField::affine(unit(), 2.0, vec![1.0]).unwrap();
        let h = harmonic_combine(&[a, c(3.0)]).unwrap();
        assert!((h.eval(&[0.0]) - 1.2).abs() < 1e-14);
        assert!((h.eval(&[1.0]) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn harmonic_combine_rejects_mismatched_domains() {
        let other = ExponentField::constant(BoxDomain::interval(0.0, 2.0), 2.0).unwrap();
        assert!(matches!(harmonic_combine(&[c(2.0), other]), Err(Error::Domain(_))));
    }

    #[test]
    fn blend_examples() {
        let b = theta_blend(&c(4.0), &c(2.0), 0.5).unwrap();
        assert!((b.constant_value().unwrap() - 8.0 / 3.0).abs() < 1e-15);
        assert!(theta_blend(&c(4.0), &c(2.0), 0.0).is_err());
        assert!(theta_blend(&c(4.0), &c(2.0), 1.0).is_err());
        let a = ExponentField::affine(unit(), 2.0, vec![1.0]).unwrap();
        let b = theta_blend(&a, &c(3.0), 0.25).unwrap();
        for i in 0..1024 {
            let x = i as f64 / 1023.0;
            let direct = 1.0 / (0.75 / (2.0 + x) + 0.25 / 3.0);
            assert!((b.eval(&[x]) - direct).abs() < 1e-13);
        }
        assert!(b.p_minus() >= 2.0 - 1e-15);
        let fixed = theta_blend(&a, &a, 0.3).unwrap();
        assert!((fixed.eval(&[0.4]) - 2.4).abs() < 1e-14);
    }

    #[test]
    fn invert_examples() {
        let p0 = theta_invert(&c(8.0 / 3.0), &c(2.0), 0.5).unwrap();
        assert!((p0.constant_value().unwrap() - 4.0).abs() < 1e-13);
        let same = theta_invert(&c(3.0), &c(3.0), 0.7).unwrap();
        assert!((same.constant_value().unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn invert_reports_violating_point() {
        let p = ExponentField::affine(unit(), 4.0, vec![4.0]).unwrap(); // 4..8
        let p1 = c(1.0);
        // 1/p - 0.3/1 < 0 everywhere since 1/p <= 1/4
        match theta_invert(&p, &p1, 0.3) {
            Err(Error::Range { point, .. }) => assert_eq!(point.len(), 1),
            other => panic!("expected range error, got {other:?}"),
        }
        // partially violating: 1/p - 0.2 > 0 only where p < 5
        match theta_invert(&p, &p1, 0.2) {
            Err(Error::Range { point, .. }) => assert!(point[0] >= 0.25 - 1e-3, "{point:?}"),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn log_holder_constant_is_zero() {
        let r = log_holder_estimate(&c(2.5), 1000);
        assert_eq!(r.c0_estimate, 0.0);
        assert_eq!(r.c_inf_estimate, 0.0);
        let degenerate = log_holder_estimate(&ExponentField::affine(unit(), 2.0, vec![1.0]).unwrap(), 1);
        assert_eq!((degenerate.c0_estimate, degenerate.sample_pairs), (0.0, 1));
    }

    #[test]
    fn log_holder_at_infinity_of_log_decay() {
        let dom = BoxDomain::interval(-50.0, 50.0);
        let p = ExponentField::log_decay(dom, 2.0, 1.0, vec![0.0]).unwrap();
        for budget in [10, 1000, 20_000] {
            let r = log_holder_estimate(&p, budget);
            assert!(r.c_inf_estimate <= 1.0 + 1e-9, "{r:?}");
            assert_eq!(r.p_infinity, 2.0);
        }
    }

    #[test]
    fn log_holder_of_affine_approaches_inverse_e() {
        // sup_{d < 1/2} d * log(1/d) = 1/e, attained at d = 1/e
        let p = ExponentField::affine(unit(), 2.0, vec![1.0]).unwrap();
        let r = log_holder_estimate(&p, 100_000);
        let target = (-1.0f64).exp();
        assert!(r.c0_estimate <= target + 1e-12);
        assert!(r.c0_estimate > 0.99 * target, "{r:?}");
    }

    #[test]
    fn quadruple_examples() {
        let q = QuadrupleSpec::new(vec![c(4.0), c(4.0)], c(2.0), vec![1.0, 1.0], f64::INFINITY, 0.0)
            .unwrap();
        let v = validate_quadruple(&q, GAMMA_TOLERANCE).unwrap();
        assert!(v.admissible() && v.proper, "{v:?}");

        let bad = QuadrupleSpec::new(vec![c(4.0), c(4.0)], c(3.0), vec![1.0, 1.0], f64::INFINITY, 0.0)
            .unwrap();
        let v = validate_quadruple(&bad, GAMMA_TOLERANCE).unwrap();
        assert!(!v.gamma_clause && !v.admissible());
        assert!(v.r_clauses.iter().all(|&b| b) && v.q_clause);

        let q1 = QuadrupleSpec::with_gamma(vec![c(2.0)], vec![1.0], f64::INFINITY, 0.25).unwrap();
        assert!((q1.q.constant_value().unwrap() - 4.0).abs() < 1e-14);
        assert!(validate_quadruple(&q1, GAMMA_TOLERANCE).unwrap().admissible());
    }

    #[test]
    fn quadruple_reports_r_and_s_failures() {
        let q = QuadrupleSpec::new(vec![c(2.0)], c(2.0), vec![2.0], 2.0, 0.0).unwrap();
        let v = validate_quadruple(&q, GAMMA_TOLERANCE).unwrap();
        assert_eq!(v.r_clauses, vec![false]);
        assert!(!v.q_clause);
        assert_eq!(v.failures.len(), 2);
    }

    #[test]
    fn descriptor_round_trip_and_strictness() {
        let json = r#"{"kind":"log_decay","params":{"limit":2.0,"amplitude":1.0},"p_infinity":2.0}"#;
        let d: ExponentDescriptor = serde_json::from_str(json).unwrap();
        let back = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<ExponentDescriptor>(&back).unwrap(), d);
        assert!(serde_json::from_str::<ExponentDescriptor>(
            r#"{"kind":"constant","params":{"valeu":2}}"#
        )
        .is_err());
        assert!(serde_json::from_str::<ExponentDescriptor>(
            r#"{"kind":"constant","params":{"value":2},"bogus":1}"#
        )
        .is_err());
    }

    #[test]
    fn piecewise_descriptor() {
        let json = r#"{"kind":"piecewise","params":{"breaks":[0.5],"values":[2,3]}}"#;
        let d: ExponentDescriptor = serde_json::from_str(json).unwrap();
        let p = d.build(&unit()).unwrap();
        assert_eq!(p.eval(&[0.5]), 2.0);
        assert_eq!(p.eval(&[0.51]), 3.0);
        assert_eq!((p.p_minus(), p.p_plus()), (2.0, 3.0));
    }

    #[test]
    fn quadruple_descriptor_parses_infinite_s() {
        let json = r#"{"p":[{"kind":"constant","params":{"value":2}}],"r":[1],"s":"inf","gamma":0.25}"#;
        let d: QuadrupleDescriptor = serde_json::from_str(json).unwrap();
        assert!(d.s.is_infinite());
        let spec = d.build(&unit()).unwrap();
        assert!((spec.q.constant_value().unwrap() - 4.0).abs() < 1e-14);
        let text = serde_json::to_string(&d).unwrap();
        assert!(text.contains(r#""s":"inf""#));
    }
}
