//! The `q`-power Hardy–Littlewood maximal operator over a finite radius ladder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::field::{DyadicCubeSet, Grid, GridFunction, WeightField};
use crate::norms::{weighted_norm, DEFAULT_REL_TOL};
use crate::par;
use crate::weights::ap_constant;

/// Default number of radii in [`RadiusSweep::default_for`].
pub const DEFAULT_RADII: usize = 64;

/// Strictly increasing positive radii standing in for `sup_{r > 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RadiusSweep {
    radii: Vec<f64>,
}

impl TryFrom<Vec<f64>> for RadiusSweep {
    type Error = Error;

    fn try_from(radii: Vec<f64>) -> Result<Self> {
        RadiusSweep::new(radii)
    }
}

impl From<RadiusSweep> for Vec<f64> {
    fn from(s: RadiusSweep) -> Self {
        s.radii
    }
}

impl RadiusSweep {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || !(radii[0] > 0.0) || radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(
                "radii must be positive and strictly increasing".into(),
            ));
        }
        if radii.iter().any(|r| !r.is_finite()) {
            return Err(Error::Domain("radii must be finite".into()));
        }
        Ok(RadiusSweep { radii })
    }

    /// `count` radii in geometric progression from `min` to `max`.
    pub fn geometric(min: f64, max: f64, count: usize) -> Result<Self> {
        if count == 1 {
            return RadiusSweep::new(vec![min]);
        }
        let ratio = (max / min).powf(1.0 / (count - 1) as f64);
        RadiusSweep::new((0..count).map(|k| min * ratio.powi(k as i32)).collect())
    }

    /// `count` equally spaced radii from `min` to `max`.
    pub fn linear(min: f64, max: f64, count: usize) -> Result<Self> {
        if count == 1 {
            return RadiusSweep::new(vec![min]);
        }
        let step = (max - min) / (count - 1) as f64;
        RadiusSweep::new((0..count).map(|k| min + k as f64 * step).collect())
    }

    /// Geometric ladder from the grid step to the box diameter.
    pub fn default_for(grid: &Grid) -> Result<Self> {
        RadiusSweep::geometric(grid.min_step(), grid.domain().diameter(), DEFAULT_RADII)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.radii[0] < grid.min_step() * (1.0 - 1e-9) {
            return Err(Error::Domain(format!(
                "smallest radius {} is below the grid step {}",
                self.radii[0],
                grid.min_step()
            )));
        }
        Ok(())
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Contiguous runs of flat indices covering the closed ball, one per grid
/// row along the last axis. Membership matches [`crate::field::Region`].
pub(crate) fn ball_runs(grid: &Grid, center: &[f64], r: f64) -> Vec<(usize, usize)> {
    let n = grid.dim();
    let last = n - 1;
    let res = grid.resolution();
    let row_len = res[last];
    let (lo, h) = (grid.domain().lo[last], grid.step()[last]);
    let r2 = r * r;
    let rows: Vec<usize> = if n == 1 {
        vec![0]
    } else {
        let (l0, h0) = (grid.domain().lo[0], grid.step()[0]);
        let a = ((center[0] - r - l0) / h0).floor().max(0.0) as usize;
        let b = (((center[0] + r - l0) / h0).ceil().max(0.0) as usize).min(res[0] - 1);
        (a..=b).collect()
    };
    let mut out = Vec::with_capacity(rows.len());
    for i in rows {
        let base = i * row_len;
        let d0 = if n == 1 {
            0.0
        } else {
            let x0 = grid.point(base)[0];
            (x0 - center[0]) * (x0 - center[0])
        };
        if d0 > r2 {
            continue;
        }
        let rho = (r2 - d0).sqrt();
        let c = center[last];
        let max_j = (row_len - 1) as isize;
        let mut a = (((c - rho - lo) / h).ceil() as isize).clamp(0, max_j);
        let mut b = (((c + rho - lo) / h).floor() as isize).clamp(0, max_j);
        let inside = |j: isize| dist2(grid.point(base + j as usize), center) <= r2;
        while a > 0 && inside(a - 1) {
            a -= 1;
        }
        while a <= b && !inside(a) {
            a += 1;
        }
        while b < max_j && inside(b + 1) {
            b += 1;
        }
        while b >= a && !inside(b) {
            b -= 1;
        }
        if a <= b {
            out.push((base + a as usize, base + b as usize));
        }
    }
    out
}

/// Row-wise prefix sums of `w` and `w v` for O(rows) ball means.
struct BallSums<'a> {
    grid: &'a Grid,
    row_len: usize,
    pw: Vec<f64>,
    pv: Vec<f64>,
}

impl<'a> BallSums<'a> {
    fn new(grid: &'a Grid, v: &[f64]) -> Self {
        let row_len = *grid.resolution().last().expect("grid has an axis");
        let rows = grid.len() / row_len;
        let mut pw = Vec::with_capacity(rows * (row_len + 1));
        let mut pv = Vec::with_capacity(rows * (row_len + 1));
        for i in 0..rows {
            let (mut sw, mut sv) = (0.0, 0.0);
            pw.push(0.0);
            pv.push(0.0);
            for j in 0..row_len {
                let k = i * row_len + j;
                sw += grid.weight(k);
                sv += grid.weight(k) * v[k];
                pw.push(sw);
                pv.push(sv);
            }
        }
        BallSums {
            grid,
            row_len,
            pw,
            pv,
        }
    }

    fn mean(&self, center: &[f64], r: f64) -> f64 {
        let (mut sw, mut sv) = (0.0, 0.0);
        for (a, b) in ball_runs(self.grid, center, r) {
            let row = a / self.row_len;
            let off = row * (self.row_len + 1);
            let (ja, jb) = (a - row * self.row_len, b - row * self.row_len);
            sw += self.pw[off + jb + 1] - self.pw[off + ja];
            sv += self.pv[off + jb + 1] - self.pv[off + ja];
        }
        (sv / sw).max(0.0)
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("power {q} must be positive and finite")))
    }
}

/// `M_q f(x) = max_r (avg_{B(x,r)} |f|^q)^{1/q}` over the sweep radii.
pub fn maximal_function(f: &GridFunction, q: f64, sweep: &RadiusSweep) -> Result<GridFunction> {
    check_q(q)?;
    let grid = f.grid();
    sweep.check_grid(grid)?;
    let v: Vec<f64> = f.values().iter().map(|x| x.abs().powf(q)).collect();
    let sums = BallSums::new(grid, &v);
    let out = par::map_range(grid.len(), |i| {
        let x = grid.point(i);
        let best = sweep
            .radii()
            .iter()
            .map(|&r| sums.mean(x, r))
            .fold(0.0, f64::max);
        if q == 1.0 {
            best
        } else {
            best.powf(1.0 / q)
        }
    });
    GridFunction::new(grid.clone(), out)
}

/// `x ↦ (avg_{B(x,r)} |f(x) - f(y)|^q dy)^{1/q}`.
pub fn oscillation_average(f: &GridFunction, radius: f64, q: f64) -> Result<GridFunction> {
    check_q(q)?;
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius {radius} must be positive")));
    }
    let grid = f.grid();
    let vals = f.values();
    let out = par::try_map_range(grid.len(), |i| {
        let (mut sw, mut sv) = (0.0, 0.0);
        let fx = vals[i];
        for (a, b) in ball_runs(grid, grid.point(i), radius) {
            for k in a..=b {
                let d = (fx - vals[k]).abs();
                sw += grid.weight(k);
                if d != 0.0 {
                    sv += grid.weight(k) * if q == 1.0 { d } else { d.powf(q) };
                }
            }
        }
        if sw == 0.0 {
            return Err(Error::EmptyRegion);
        }
        let m = sv / sw;
        Ok(if q == 1.0 { m } else { m.powf(1.0 / q) })
    })?;
    GridFunction::new(grid.clone(), out)
}

/// Empirical ratios `‖M_q f‖_{L^p(w)} / ‖f‖_{L^p(w)}` over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// `[w^q]_{A_{p/q}}` on the configured cube family.
    pub hypothesis_constant: f64,
}

/// Checks `w^q ∈ A_{p/q}` on `cubes` and returns the constant.
pub fn maximal_hypothesis(p: &ExponentField, w: &WeightField, q: f64, cubes: &DyadicCubeSet) -> Result<f64> {
    check_q(q)?;
    let pq = p.scaled(1.0 / q)?;
    if !pq.is_banach() {
        return Err(Error::HypothesisFailure(format!(
            "p/q has lower bound {} <= 1",
            pq.p_minus()
        )));
    }
    match ap_constant(&w.pow(q)?, &pq, cubes) {
        Ok(r) => Ok(r.constant),
        Err(Error::OverflowToInfinity { value }) => Err(Error::HypothesisFailure(format!(
            "weight constant of w^q overflows ({value:e})"
        ))),
        Err(e) => Err(e),
    }
}

pub fn maximal_boundedness_probe(
    p: &ExponentField,
    w: &WeightField,
    q: f64,
    corpus: &[GridFunction],
    sweep: &RadiusSweep,
    cubes: &DyadicCubeSet,
) -> Result<ProbeReport> {
    let hypothesis_constant = maximal_hypothesis(p, w, q, cubes)?;
    let ratios = corpus
        .iter()
        .map(|f| {
            let mf = maximal_function(f, q, sweep)?;
            let top = weighted_norm(&mf, p, w, DEFAULT_REL_TOL)?.value;
            let bottom = weighted_norm(f, p, w, DEFAULT_REL_TOL)?.value;
            if bottom == 0.0 {
                return Err(Error::Domain("probe corpus contains the zero function".into()));
            }
            Ok(top / bottom)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ProbeReport {
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
        hypothesis_constant,
    })
}
