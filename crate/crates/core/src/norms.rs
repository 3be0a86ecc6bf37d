//! Modulars, Luxemburg norms, weighted and mixed norms, and the duality pairing.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{dual_exponent, ExponentField};
use crate::field::{BoxDomain, Grid, GridFunction, WeightField};
use crate::par;

/// Default relative tolerance of the norm bisection.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Norms above this are treated as infinite by the weight constants.
pub const OVERFLOW_THRESHOLD: f64 = 1e150;

const MAX_DOUBLINGS: usize = 200;

/// Outcome of a Luxemburg norm evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub iterations: usize,
    pub bracket: [f64; 2],
    pub modular_at_value: f64,
}

impl NormResult {
    fn zero() -> Self {
        NormResult {
            value: 0.0,
            iterations: 0,
            bracket: [0.0, 0.0],
            modular_at_value: 0.0,
        }
    }
}

/// `(weight, ln|f|, p)` triples for the nonzero nodes of a function.
#[derive(Debug, Clone, Default)]
pub(crate) struct Terms {
    w: Vec<f64>,
    ln_f: Vec<f64>,
    p: Vec<f64>,
    sup: f64,
    measure: f64,
    /// Set when every active exponent equals this value.
    constant_p: Option<f64>,
}

impl Terms {
    pub(crate) fn new(nodes: impl Iterator<Item = (f64, f64, f64)>) -> Self {
        let mut t = Terms::default();
        let mut first_p = None;
        let mut uniform = true;
        for (w, f, p) in nodes {
            t.measure += w;
            let f = f.abs();
            if f == 0.0 {
                continue;
            }
            match first_p {
                None => first_p = Some(p),
                Some(q) => uniform &= q == p,
            }
            t.sup = t.sup.max(f);
            t.w.push(w);
            t.ln_f.push(f.ln());
            t.p.push(p);
        }
        t.constant_p = if uniform { first_p } else { None };
        t
    }

    fn modular_at(&self, ln_lambda: f64) -> f64 {
        self.w
            .iter()
            .zip(&self.ln_f)
            .zip(&self.p)
            .map(|((w, lf), p)| w * (p * (lf - ln_lambda)).exp())
            .sum()
    }

    pub(crate) fn norm(&self, rel_tol: f64) -> Result<NormResult> {
        if self.w.is_empty() {
            return Ok(NormResult::zero());
        }
        if self.sup.is_infinite() {
            return Ok(NormResult {
                value: f64::INFINITY,
                iterations: 0,
                bracket: [f64::INFINITY; 2],
                modular_at_value: f64::INFINITY,
            });
        }
        if let Some(p) = self.constant_p {
            let rho: f64 = self
                .w
                .iter()
                .zip(&self.ln_f)
                .map(|(w, lf)| w * (p * lf).exp())
                .sum();
            let value = rho.powf(1.0 / p);
            if value.is_finite() && value > 0.0 {
                return Ok(NormResult {
                    value,
                    iterations: 0,
                    bracket: [value, value],
                    modular_at_value: self.modular_at(value.ln()),
                });
            }
            // fall back to bisection on under/overflow
        }
        let start = (self.sup * self.measure).max(1e-300).ln();
        let step = std::f64::consts::LN_2;
        let (mut lo, mut hi);
        if self.modular_at(start) > 1.0 {
            lo = start;
            hi = start + step;
            let mut k = 0;
            while self.modular_at(hi) > 1.0 {
                k += 1;
                if k > MAX_DOUBLINGS {
                    return Err(Error::Convergence { doublings: k - 1 });
                }
                lo = hi;
                hi += step;
            }
        } else {
            hi = start;
            lo = start - step;
            let mut k = 0;
            while self.modular_at(lo) <= 1.0 {
                k += 1;
                if k > MAX_DOUBLINGS {
                    return Err(Error::Convergence { doublings: k - 1 });
                }
                hi = lo;
                lo -= step;
            }
        }
        // invariant: rho(lo) > 1 >= rho(hi)
        let mut iterations = 0;
        while (hi - lo).exp_m1() >= rel_tol {
            let mid = 0.5 * (lo + hi);
            if self.modular_at(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        Ok(NormResult {
            value: hi.exp(),
            iterations,
            bracket: [lo.exp(), hi.exp()],
            modular_at_value: self.modular_at(hi),
        })
    }
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 0.0 && rel_tol <= 1e-2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("relative tolerance {rel_tol} outside (0, 1e-2]")))
    }
}

/// `∫ |f|^{p(x)} dx` by quadrature.
pub fn modular(f: &GridFunction, p: &ExponentField) -> Result<f64> {
    let pv = p.values_on(f.grid())?;
    let g = f.grid();
    Ok(f.values()
        .iter()
        .zip(&pv)
        .enumerate()
        .filter(|(_, (v, _))| **v != 0.0)
        .map(|(i, (v, p))| g.weight(i) * v.abs().powf(*p))
        .sum())
}

/// Luxemburg norm `inf{λ > 0 : ρ(f/λ) <= 1}`.
pub fn luxemburg_norm(f: &GridFunction, p: &ExponentField, rel_tol: f64) -> Result<NormResult> {
    check_tol(rel_tol)?;
    let pv = p.values_on(f.grid())?;
    norm_with_values(f.grid(), f.values(), &pv, rel_tol)
}

pub(crate) fn norm_with_values(grid: &Grid, f: &[f64], p: &[f64], rel_tol: f64) -> Result<NormResult> {
    Terms::new((0..f.len()).map(|i| (grid.weight(i), f[i], p[i]))).norm(rel_tol)
}

/// Norm of `f` restricted to the nodes `idx`.
pub(crate) fn norm_on(grid: &Grid, f: &[f64], p: &[f64], idx: &[usize], rel_tol: f64) -> Result<NormResult> {
    Terms::new(idx.iter().map(|&i| (grid.weight(i), f[i], p[i]))).norm(rel_tol)
}

/// `‖f w‖_{p(·)}`.
pub fn weighted_norm(f: &GridFunction, p: &ExponentField, w: &WeightField, rel_tol: f64) -> Result<NormResult> {
    let fw = f.mul(w.as_function())?;
    luxemburg_norm(&fw, p, rel_tol)
}

/// The one-dimensional grid of the first axis of a planar grid.
pub fn first_axis_grid(grid: &Grid) -> Result<Arc<Grid>> {
    if grid.dim() != 2 {
        return Err(Error::Domain("mixed norms need a planar grid".into()));
    }
    let d = grid.domain();
    Ok(Arc::new(Grid::new(
        BoxDomain::interval(d.lo[0], d.hi[0]),
        vec![grid.resolution()[0]],
    )?))
}

/// `x ↦ ‖f(x, ·)‖_{L^q}` on the first axis of a planar grid.
pub fn inner_lq_norms(f: &GridFunction, q: f64) -> Result<GridFunction> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Domain(format!("inner exponent {q} must be positive and finite")));
    }
    let grid = f.grid();
    let xg = first_axis_grid(grid)?;
    let d = grid.domain();
    let ny = grid.resolution()[1];
    let yg = Grid::new(BoxDomain::interval(d.lo[1], d.hi[1]), vec![ny])?;
    let vals = f.values();
    let rows = par::map_range(xg.len(), |i| {
        let row = &vals[i * ny..(i + 1) * ny];
        let s: f64 = row
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| yg.weight(j) * v.abs().powf(q))
            .sum();
        s.powf(1.0 / q)
    });
    GridFunction::new(xg, rows)
}

/// `‖ ‖f(x, y)‖_{L^q_y} ‖_{L^{p(·)}_x}`.
pub fn mixed_norm(f: &GridFunction, p: &ExponentField, q: f64) -> Result<f64> {
    let inner = inner_lq_norms(f, q)?;
    Ok(luxemburg_norm(&inner, p, DEFAULT_REL_TOL)?.value)
}

/// `‖ ‖f(x, y)‖_{L^q_y} v(x) ‖_{L^{p(·)}_x}` with `v` on the first-axis grid.
pub fn weighted_mixed_norm(f: &GridFunction, p: &ExponentField, v: &WeightField, q: f64) -> Result<f64> {
    let inner = inner_lq_norms(f, q)?;
    let inner = GridFunction::new(v.grid().clone(), inner.into_values())?;
    Ok(weighted_norm(&inner, p, v, DEFAULT_REL_TOL)?.value)
}

/// `1/p_- - 1/p_+ + 1`, the constant in `∫|fg| <= C ‖f‖_{p(·)} ‖g‖_{p'(·)}`.
pub fn holder_constant(p: &ExponentField) -> f64 {
    1.0 / p.p_minus() - 1.0 / p.p_plus() + 1.0
}

/// Constant `C` in `‖f_1 ⋯ f_m‖_{p(·)} <= C Π ‖f_j‖_{p_j(·)}` where
/// `1/p = Σ 1/p_j` on the nodes of `grid`.
///
/// Pointwise Young gives `ρ_p(Π f_j) <= K` for unit-norm factors with
/// `K = Σ_j max p/p_j`, hence `C = K^{1/p_-}`. For two factors with target
/// exponent 1 this is `1/p_- - 1/p_+ + 1`; for constant exponents it is 1.
pub fn product_holder_constant(target: &ExponentField, factors: &[ExponentField], grid: &Grid) -> Result<f64> {
    let pt = target.values_on(grid)?;
    let mut k = 0.0;
    for pj in factors {
        let v = pj.values_on(grid)?;
        k += pt
            .iter()
            .zip(&v)
            .map(|(a, b)| a / b)
            .fold(0.0, f64::max);
    }
    let p_minus = pt.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(k.max(1.0).powf(1.0 / p_minus))
}

/// Sampled lower bound for `sup {∫|fg| : ‖g‖_{p'(·)} <= 1}`.
///
/// The norming function `(|f|/‖f‖)^{p-1}` is always tried first; the other
/// candidates are random nonnegative step functions normalised in `L^{p'}`.
pub fn duality_pairing_lower_bound(f: &GridFunction, p: &ExponentField, trials: usize, seed: u64) -> Result<f64> {
    let pd = dual_exponent(p)?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let grid = f.grid().clone();
    let pv = p.values_on(&grid)?;
    let pdv = pd.values_on(&grid)?;
    let fv = f.values();
    let pairing = |g: &[f64]| -> Result<f64> {
        let ng = norm_with_values(&grid, g, &pdv, DEFAULT_REL_TOL)?.value;
        if ng == 0.0 {
            return Ok(0.0);
        }
        Ok((0..fv.len())
            .map(|i| grid.weight(i) * (fv[i] * g[i]).abs())
            .sum::<f64>()
            / ng)
    };
    let lambda = norm_with_values(&grid, fv, &pv, DEFAULT_REL_TOL)?.value;
    let norming: Vec<f64> = fv
        .iter()
        .zip(&pv)
        .map(|(v, p)| (v.abs() / lambda).powf(p - 1.0))
        .collect();
    let mut best = pairing(&norming)?;
    let n = fv.len();
    let sampled = par::try_map_range(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let pieces = rng.gen_range(1..=8usize).min(n);
        let mut cuts: Vec<usize> = (0..pieces - 1).map(|_| rng.gen_range(1..n)).collect();
        cuts.sort_unstable();
        let heights: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.0..1.0)).collect();
        let g: Vec<f64> = (0..n)
            .map(|i| heights[cuts.partition_point(|&c| c <= i)])
            .collect();
        pairing(&g)
    })?;
    for v in sampled {
        best = best.max(v);
    }
    Ok(best)
}
