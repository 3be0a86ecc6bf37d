//! Riesz–Kolmogorov compactness diagnostics for finite function families,
//! with an independent ε-net oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::field::{DyadicCubeSet, FunctionDescriptor, Grid, GridFunction, Region, WeightField};
use crate::maximal::{maximal_hypothesis, oscillation_average, RadiusSweep};
use crate::norms::{weighted_norm, DEFAULT_REL_TOL, OVERFLOW_THRESHOLD};
use crate::par;
use crate::weights::{DEFAULT_CUBE_DEPTH_1D, DEFAULT_CUBE_DEPTH_2D};
use std::sync::Arc;

/// Finite family of functions on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionFamily {
    members: Vec<GridFunction>,
    label: String,
}

impl FunctionFamily {
    pub fn new(members: Vec<GridFunction>, label: impl Into<String>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::Domain("function family is empty".into()))?;
        for m in &members[1..] {
            first.check_same_grid(m)?;
        }
        Ok(FunctionFamily {
            members,
            label: label.into(),
        })
    }

    pub fn members(&self) -> &[GridFunction] {
        &self.members
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.members[0].grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `base(x - k step e_1)`.
    Translate,
    /// `base` dilated by `1 + k step` about the box center.
    Dilate,
    /// `base(x) sin(2^{k step} x_1)`.
    Modulate,
    /// `base` convolved with a normalised bump of radius `(k + 1) step`.
    Mollify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDescriptor {
    pub kind: GeneratorKind,
    pub count: usize,
    pub step: f64,
}

/// A base function and a generator producing `count` members (`k = 0..count`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDescriptor {
    pub base: FunctionDescriptor,
    pub generator: GeneratorDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl FamilyDescriptor {
    pub fn new(base: FunctionDescriptor, kind: GeneratorKind, count: usize, step: f64) -> Self {
        FamilyDescriptor {
            base,
            generator: GeneratorDescriptor { kind, count, step },
            label: None,
        }
    }

    /// Same generator with twice the members at half the step.
    pub fn doubled(&self) -> Self {
        let mut d = self.clone();
        d.generator.count *= 2;
        d.generator.step /= 2.0;
        d
    }

    pub fn generate(&self, grid: &Arc<Grid>) -> Result<FunctionFamily> {
        let GeneratorDescriptor { kind, count, step } = self.generator;
        if count == 0 || !(step > 0.0 && step.is_finite()) {
            return Err(Error::Descriptor("generator needs count >= 1 and step > 0".into()));
        }
        let n = grid.dim();
        let members = (0..count)
            .map(|k| {
                let t = k as f64 * step;
                match kind {
                    GeneratorKind::Translate => {
                        let mut shift = vec![0.0; n];
                        shift[0] = t;
                        self.base.clone().translate(shift).sample(grid)
                    }
                    GeneratorKind::Dilate => self
                        .base
                        .clone()
                        .dilate(1.0 + t, grid.domain().center())
                        .sample(grid),
                    GeneratorKind::Modulate => {
                        let mut freq = vec![0.0; n];
                        freq[0] = t.exp2();
                        self.base.clone().times(FunctionDescriptor::sine(freq)).sample(grid)
                    }
                    GeneratorKind::Mollify => mollify(&self.base.sample(grid)?, step * (k + 1) as f64),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let label = self
            .label
            .clone()
            .unwrap_or_else(|| format!("{kind:?} x{count}").to_lowercase());
        FunctionFamily::new(members, label)
    }
}

/// Convolution with the normalised bump `exp(-1/(1 - |t/ε|^2))`, extending
/// `f` by zero outside the grid.
pub fn mollify(f: &GridFunction, eps: f64) -> Result<GridFunction> {
    let grid = f.grid();
    let h = grid.step();
    let reach: Vec<isize> = h.iter().map(|s| (eps / s).floor() as isize).collect();
    if reach.iter().any(|&m| m < 1) {
        return Err(Error::Domain(format!(
            "mollifier radius {eps} is below the grid step"
        )));
    }
    let n = grid.dim();
    let mut stencil: Vec<(Vec<isize>, f64)> = Vec::new();
    let (ry, ny) = if n == 2 { (reach[0], 1) } else { (0, 0) };
    let last = n - 1;
    for a in -ry..=ry {
        for b in -reach[last]..=reach[last] {
            let off = if ny == 1 { vec![a, b] } else { vec![b] };
            let t2: f64 = off
                .iter()
                .zip(h)
                .map(|(o, s)| (*o as f64 * s / eps).powi(2))
                .sum();
            if t2 < 1.0 {
                stencil.push((off, (-1.0 / (1.0 - t2)).exp()));
            }
        }
    }
    let total: f64 = stencil.iter().map(|(_, v)| v).sum();
    stencil.iter_mut().for_each(|(_, v)| *v /= total);
    let res = grid.resolution();
    let vals = f.values();
    let out = par::map_range(grid.len(), |i| {
        let idx = grid.multi_index(i);
        let mut s = 0.0;
        'outer: for (off, c) in &stencil {
            let mut src = [0usize; 2];
            for a in 0..n {
                let j = idx[a] as isize - off[a];
                if j < 0 || j >= res[a] as isize {
                    continue 'outer;
                }
                src[a] = j as usize;
            }
            s += c * vals[grid.flat_index(&src[..n])];
        }
        s
    });
    GridFunction::new(grid.clone(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Per-parameter supremum over the family of one condition's quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionProfile {
    pub parameter: Vec<f64>,
    pub sup_values: Vec<f64>,
    pub threshold: Option<f64>,
    pub verdict: Verdict,
}

fn sup_over<F>(fam: &FunctionFamily, f: F) -> Result<f64>
where
    F: Fn(&GridFunction) -> Result<f64> + Sync + Send,
{
    Ok(par::try_map_slice(fam.members(), f)?
        .into_iter()
        .fold(0.0, f64::max))
}

fn check_weight(fam: &FunctionFamily, w: &WeightField) -> Result<()> {
    if fam.grid() != w.grid() {
        return Err(Error::Domain("family and weight live on different grids".into()));
    }
    Ok(())
}

/// `sup_f ‖f‖_{L^p(w)}`; passes iff finite.
pub fn uniform_bound_profile(fam: &FunctionFamily, p: &ExponentField, w: &WeightField) -> Result<ConditionProfile> {
    check_weight(fam, w)?;
    let sup = sup_over(fam, |f| Ok(weighted_norm(f, p, w, DEFAULT_REL_TOL)?.value))?;
    Ok(ConditionProfile {
        parameter: vec![],
        sup_values: vec![sup],
        threshold: Some(OVERFLOW_THRESHOLD),
        verdict: if sup <= OVERFLOW_THRESHOLD {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    })
}

/// `r ↦ sup_f ‖osc_r f‖_{L^p(w)}`; passes iff the value at the smallest
/// radius is at most `threshold`.
pub fn equicontinuity_profile(
    fam: &FunctionFamily,
    p: &ExponentField,
    w: &WeightField,
    q: f64,
    sweep: &RadiusSweep,
    threshold: f64,
) -> Result<ConditionProfile> {
    check_weight(fam, w)?;
    if !(q > 0.0 && q < p.p_minus()) {
        return Err(Error::Domain(format!(
            "q = {q} must lie in (0, p_-) = (0, {})",
            p.p_minus()
        )));
    }
    let sup_values = sweep
        .radii()
        .iter()
        .map(|&r| {
            sup_over(fam, |f| {
                Ok(weighted_norm(&oscillation_average(f, r, q)?, p, w, DEFAULT_REL_TOL)?.value)
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let verdict = if sup_values[0] <= threshold {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ConditionProfile {
        parameter: sweep.radii().to_vec(),
        sup_values,
        threshold: Some(threshold),
        verdict,
    })
}

/// `R ↦ sup_f ‖f χ_{|x - x0| >= R}‖_{L^p(w)}`; passes iff the last value is
/// at most `threshold`.
pub fn vanishing_profile(
    fam: &FunctionFamily,
    p: &ExponentField,
    w: &WeightField,
    x0: &[f64],
    radii: &[f64],
    threshold: f64,
) -> Result<ConditionProfile> {
    check_weight(fam, w)?;
    if radii.is_empty() || radii.windows(2).any(|r| r[0] > r[1]) {
        return Err(Error::Domain("tail radii must be nonempty and nondecreasing".into()));
    }
    let sup_values = radii
        .iter()
        .map(|&r| {
            let tail = Region::Exterior {
                center: x0.to_vec(),
                radius: r,
            };
            sup_over(fam, |f| Ok(weighted_norm(&f.restrict(&tail), p, w, DEFAULT_REL_TOL)?.value))
        })
        .collect::<Result<Vec<f64>>>()?;
    let verdict = if *sup_values.last().unwrap() <= threshold {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ConditionProfile {
        parameter: radii.to_vec(),
        sup_values,
        threshold: Some(threshold),
        verdict,
    })
}

/// `E ↦ sup_f ‖f χ_E‖_{L^p(w)}` along nested sets; passes iff the value on
/// the last set is at most `threshold`.
pub fn equi_integrability_measure(
    fam: &FunctionFamily,
    p: &ExponentField,
    w: &WeightField,
    sets: &[Region],
    threshold: f64,
) -> Result<ConditionProfile> {
    check_weight(fam, w)?;
    if sets.is_empty() {
        return Err(Error::Domain("need at least one set".into()));
    }
    let grid = fam.grid();
    let parameter: Vec<f64> = sets
        .iter()
        .map(|e| {
            e.indices(grid)
                .iter()
                .map(|&i| grid.weight(i) * w.values()[i])
                .sum()
        })
        .collect();
    let sup_values = sets
        .iter()
        .map(|e| sup_over(fam, |f| Ok(weighted_norm(&f.restrict(e), p, w, DEFAULT_REL_TOL)?.value)))
        .collect::<Result<Vec<f64>>>()?;
    let verdict = if *sup_values.last().unwrap() <= threshold {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ConditionProfile {
        parameter,
        sup_values,
        threshold: Some(threshold),
        verdict,
    })
}

/// Symmetric matrix of `‖f_i - f_j‖_{L^p(w)}`.
pub fn distance_matrix(fam: &FunctionFamily, p: &ExponentField, w: &WeightField) -> Result<Vec<Vec<f64>>> {
    check_weight(fam, w)?;
    let n = fam.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let m = fam.members();
    let d = par::try_map_slice(&pairs, |&(i, j)| {
        Ok(weighted_norm(&m[i].sub(&m[j])?, p, w, DEFAULT_REL_TOL)?.value)
    })?;
    let mut out = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(d) {
        out[i][j] = v;
        out[j][i] = v;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetReport {
    pub eps: f64,
    pub size: usize,
    /// Member indices chosen as centers, in selection order.
    pub centers: Vec<usize>,
    /// Nearest center (as a member index) for every member.
    pub assignment: Vec<usize>,
}

/// Greedy farthest-point cover of a finite metric space.
///
/// The center sequence does not depend on `eps`, so the size is
/// nonincreasing in `eps`.
pub fn greedy_net(dist: &[Vec<f64>], eps: f64) -> NetReport {
    let n = dist.len();
    let mut centers = vec![0usize];
    let mut nearest: Vec<f64> = dist[0].clone();
    let mut owner = vec![0usize; n];
    loop {
        let (far, gap) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        if gap <= eps {
            break;
        }
        centers.push(far);
        for i in 0..n {
            if dist[far][i] < nearest[i] {
                nearest[i] = dist[far][i];
                owner[i] = far;
            }
        }
    }
    NetReport {
        eps,
        size: centers.len(),
        centers,
        assignment: owner,
    }
}

pub fn eps_net_oracle(fam: &FunctionFamily, p: &ExponentField, w: &WeightField, eps: f64) -> Result<NetReport> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps {eps} must be positive")));
    }
    Ok(greedy_net(&distance_matrix(fam, p, w)?, eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RkVerdict {
    ConsistentCompact,
    ConsistentNoncompact,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// Uniform boundedness, clause (i).
    Boundedness,
    /// `q`-equicontinuity, clause (ii).
    Equicontinuity,
    /// Uniform vanishing at infinity, clause (iii).
    Vanishing,
}

/// Knobs for [`classify`]; every `None` resolves to a grid-derived default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RkConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<RadiusSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_threshold_factor")]
    pub threshold_factor: f64,
    #[serde(default = "default_eps_levels")]
    pub eps_levels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cube_depth: Option<u32>,
}

fn default_threshold_factor() -> f64 {
    1e-2
}

fn default_eps_levels() -> usize {
    9
}

impl Default for RkConfig {
    fn default() -> Self {
        RkConfig {
            radii: None,
            tail_radii: None,
            x0: None,
            threshold_factor: default_threshold_factor(),
            eps_levels: default_eps_levels(),
            cube_depth: None,
        }
    }
}

/// Number of tail radii in the default sweep.
pub const DEFAULT_TAIL_RADII: usize = 16;

impl RkConfig {
    /// Fills every unset knob from the grid.
    pub fn resolved(&self, grid: &Grid) -> Result<RkConfig> {
        let x0 = self.x0.clone().unwrap_or_else(|| grid.domain().center());
        let h = grid.min_step();
        let radii = match &self.radii {
            Some(r) => r.clone(),
            None => RadiusSweep::geometric(h, 32.0 * h, 6)?,
        };
        let tail_radii = match &self.tail_radii {
            Some(t) => t.clone(),
            None => {
                let far = grid
                    .domain()
                    .corners()
                    .iter()
                    .map(|c| c.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                    .fold(0.0, f64::max);
                let end = 0.9 * far;
                (0..DEFAULT_TAIL_RADII)
                    .map(|k| end * k as f64 / (DEFAULT_TAIL_RADII - 1) as f64)
                    .collect()
            }
        };
        let cube_depth = self.cube_depth.unwrap_or(if grid.dim() == 1 {
            DEFAULT_CUBE_DEPTH_1D
        } else {
            DEFAULT_CUBE_DEPTH_2D
        });
        Ok(RkConfig {
            radii: Some(radii),
            tail_radii: Some(tail_radii),
            x0: Some(x0),
            threshold_factor: self.threshold_factor,
            eps_levels: self.eps_levels,
            cube_depth: Some(cube_depth),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RkReport {
    pub label: String,
    pub members: usize,
    pub hypothesis_constant: f64,
    pub boundedness: ConditionProfile,
    pub equicontinuity: ConditionProfile,
    pub vanishing: ConditionProfile,
    pub diameter: f64,
    pub eps_ladder: Vec<f64>,
    pub net_sizes: Vec<usize>,
    pub plateau: bool,
    pub grows: bool,
    pub failing_clauses: Vec<Clause>,
    pub verdict: RkVerdict,
    pub config: RkConfig,
}

/// Runs the three profiles and the ε-net ladder.
///
/// "consistent-compact": every profile passes and the last three net sizes
/// agree. "consistent-noncompact": some profile fails and the last net size
/// exceeds the first. Anything else is "inconclusive".
pub fn classify(fam: &FunctionFamily, p: &ExponentField, w: &WeightField, q: f64, config: &RkConfig) -> Result<RkReport> {
    let grid = fam.grid();
    let config = config.resolved(grid)?;
    let cubes = DyadicCubeSet::new(grid.domain().clone(), config.cube_depth.unwrap(), true)?;
    let hypothesis_constant = maximal_hypothesis(p, w, q, &cubes)?;

    let boundedness = uniform_bound_profile(fam, p, w)?;
    let threshold = config.threshold_factor * boundedness.sup_values[0];
    let equicontinuity =
        equicontinuity_profile(fam, p, w, q, config.radii.as_ref().unwrap(), threshold)?;
    let vanishing = vanishing_profile(
        fam,
        p,
        w,
        config.x0.as_ref().unwrap(),
        config.tail_radii.as_ref().unwrap(),
        threshold,
    )?;

    let dist = distance_matrix(fam, p, w)?;
    let diameter = dist.iter().flatten().copied().fold(0.0, f64::max);
    let eps_ladder: Vec<f64> = (0..config.eps_levels.max(1))
        .map(|k| diameter * (-(k as f64)).exp2())
        .collect();
    let net_sizes: Vec<usize> = eps_ladder.iter().map(|&e| greedy_net(&dist, e).size).collect();
    let plateau = net_sizes.len() >= 3 && net_sizes[net_sizes.len() - 3..].windows(2).all(|w| w[0] == w[1]);
    let grows = net_sizes.last() > net_sizes.first();

    let mut failing_clauses = Vec::new();
    for (clause, prof) in [
        (Clause::Boundedness, &boundedness),
        (Clause::Equicontinuity, &equicontinuity),
        (Clause::Vanishing, &vanishing),
    ] {
        if prof.verdict != Verdict::Pass {
            failing_clauses.push(clause);
        }
    }
    let verdict = if failing_clauses.is_empty() && plateau {
        RkVerdict::ConsistentCompact
    } else if !failing_clauses.is_empty() && grows {
        RkVerdict::ConsistentNoncompact
    } else {
        RkVerdict::Inconclusive
    };
    Ok(RkReport {
        label: fam.label().to_string(),
        members: fam.len(),
        hypothesis_constant,
        boundedness,
        equicontinuity,
        vanishing,
        diameter,
        eps_ladder,
        net_sizes,
        plateau,
        grows,
        failing_clauses,
        verdict,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(lo: f64, hi: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::line(lo, hi, n).unwrap())
    }

    fn p2(g: &Grid) -> ExponentField {
        ExponentField::constant(g.domain().clone(), 2.0).unwrap()
    }

    #[test]
    fn uniform_bound_of_gaussian_and_multiples() {
        let g = line(-6.0, 6.0, 4097);
        let base = GridFunction::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
        let w = WeightField::unit(&g);
        let single = FunctionFamily::new(vec![base.clone()], "g").unwrap();
        let v = uniform_bound_profile(&single, &p2(&g), &w).unwrap();
        let exact = (std::f64::consts::PI / 2.0).powf(0.25);
        assert!((v.sup_values[0] - exact).abs() < 1e-6, "{v:?}");
        assert_eq!(v.verdict, Verdict::Pass);
        let mut members: Vec<GridFunction> = (1..=10).map(|c| base.scale(c as f64)).collect();
        members.push(GridFunction::zeros(&g));
        let fam = FunctionFamily::new(members, "multiples").unwrap();
        let v = uniform_bound_profile(&fam, &p2(&g), &w).unwrap().sup_values[0];
        let one = uniform_bound_profile(&single, &p2(&g), &w).unwrap().sup_values[0];
        assert!((v - 10.0 * one).abs() < 1e-9 * v);
    }

    #[test]
    fn constant_family_is_equicontinuous() {
        let g = line(0.0, 1.0, 513);
        let fam = FunctionFamily::new(vec![GridFunction::constant(&g, 2.0)], "c").unwrap();
        let sweep = RadiusSweep::geometric(g.min_step(), 0.1, 4).unwrap();
        let prof = equicontinuity_profile(&fam, &p2(&g), &WeightField::unit(&g), 1.0, &sweep, 1e-3).unwrap();
        assert!(prof.sup_values.iter().all(|&v| v == 0.0));
        assert_eq!(prof.verdict, Verdict::Pass);
        assert!(equicontinuity_profile(&fam, &p2(&g), &WeightField::unit(&g), 2.0, &sweep, 1e-3).is_err());
    }

    #[test]
    fn indicator_translates_do_not_vanish() {
        let g = line(0.0, 10.0, 1001);
        let members = (0..9)
            .map(|k| GridFunction::indicator(&g, &Region::boxed(&[k as f64], &[k as f64 + 1.0])))
            .collect();
        let fam = FunctionFamily::new(members, "translates").unwrap();
        let radii: Vec<f64> = (0..=18).map(|k| 0.5 * k as f64).collect();
        let prof = vanishing_profile(&fam, &p2(&g), &WeightField::unit(&g), &[0.0], &radii, 1e-2).unwrap();
        for (r, v) in radii.iter().zip(&prof.sup_values) {
            if *r < 8.0 {
                assert!((v - 1.0).abs() < 1e-2, "{r} {v}");
            }
        }
        assert!(prof.sup_values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
        assert_eq!(prof.verdict, Verdict::Fail);
    }

    #[test]
    fn compact_support_vanishes() {
        let g = line(-2.0, 2.0, 801);
        let f = FunctionDescriptor::bump(vec![0.0], 0.5).sample(&g).unwrap();
        let fam = FunctionFamily::new(vec![f], "bump").unwrap();
        let prof =
            vanishing_profile(&fam, &p2(&g), &WeightField::unit(&g), &[0.0], &[0.25, 0.5, 1.0, 1.5], 1e-3).unwrap();
        assert!(prof.sup_values[2] == 0.0 && prof.sup_values[3] == 0.0);
        assert_eq!(prof.verdict, Verdict::Pass);
    }

    #[test]
    fn thin_slabs_and_spikes() {
        let g = line(0.0, 1.0, 4097);
        let w = WeightField::unit(&g);
        let smooth = FunctionFamily::new(vec![GridFunction::from_fn(&g, |x| 1.0 + x[0]).unwrap()], "s").unwrap();
        let slabs: Vec<Region> = (1..=8)
            .map(|k| {
                let half = 0.5 * (-(k as f64)).exp2();
                Region::boxed(&[0.5 - half], &[0.5 + half])
            })
            .collect();
        let prof = equi_integrability_measure(&smooth, &p2(&g), &w, &slabs, 0.1).unwrap();
        assert!(prof.sup_values.windows(2).all(|v| v[1] < v[0]));
        assert_eq!(prof.verdict, Verdict::Pass);
        let spikes: Vec<GridFunction> = (1..=8)
            .map(|k| {
                let half = 0.5 * (-(k as f64)).exp2();
                let h = (2.0 * half).powf(-0.5);
                GridFunction::indicator(&g, &Region::boxed(&[0.5 - half], &[0.5 + half])).scale(h)
            })
            .collect();
        let fam = FunctionFamily::new(spikes, "spikes").unwrap();
        let prof = equi_integrability_measure(&fam, &p2(&g), &w, &slabs, 0.1).unwrap();
        assert!(*prof.sup_values.last().unwrap() > 0.9);
        assert_eq!(prof.verdict, Verdict::Fail);
        let zero = FunctionFamily::new(vec![GridFunction::zeros(&g)], "0").unwrap();
        assert_eq!(equi_integrability_measure(&zero, &p2(&g), &w, &slabs, 0.0).unwrap().sup_values[0], 0.0);
    }

    #[test]
    fn greedy_net_examples() {
        let g = line(0.0, 11.0, 1101);
        let w = WeightField::unit(&g);
        let bumps: Vec<GridFunction> = (0..10)
            .map(|k| FunctionDescriptor::bump(vec![0.5 + k as f64], 0.5).sample(&g).unwrap())
            .collect();
        let fam = FunctionFamily::new(bumps.clone(), "t").unwrap();
        let d = distance_matrix(&fam, &p2(&g), &w).unwrap();
        let delta = d.iter().enumerate().flat_map(|(i, r)| r.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, v)| *v)).fold(f64::INFINITY, f64::min);
        assert_eq!(greedy_net(&d, 0.49 * delta).size, 10);
        let copies = FunctionFamily::new(vec![bumps[0].clone(); 10], "copies").unwrap();
        assert_eq!(eps_net_oracle(&copies, &p2(&g), &w, 1e-9).unwrap().size, 1);
        let sizes: Vec<usize> = [4.0, 1.0, 0.5, 0.1].iter().map(|&e| greedy_net(&d, e).size).collect();
        assert!(sizes.windows(2).all(|s| s[0] <= s[1]));
    }

    #[test]
    fn mollifier_preserves_mass_in_the_interior() {
        let g = line(-1.0, 2.0, 3001);
        let chi = GridFunction::indicator(&g, &Region::boxed(&[0.0], &[1.0]));
        let m = mollify(&chi, 0.1).unwrap();
        assert!((m.integral() - chi.integral()).abs() < 1e-9);
        assert!(m.values().iter().all(|&v| (-1e-15..=1.0 + 1e-12).contains(&v)));
        assert!(mollify(&chi, 1e-4).is_err());
    }

    #[test]
    fn family_descriptor_json() {
        let json = r#"{"base":{"kind":"indicator","params":{"lo":[0],"hi":[1]}},
                       "generator":{"kind":"modulate","count":3,"step":1}}"#;
        let d: FamilyDescriptor = serde_json::from_str(json).unwrap();
        let g = line(-0.5, 1.5, 401);
        let fam = d.generate(&g).unwrap();
        assert_eq!(fam.len(), 3);
        let x = 0.3;
        let i = ((x + 0.5) / g.min_step()).round() as usize;
        assert!((fam.members()[2].values()[i] - (4.0 * g.point(i)[0]).sin()).abs() < 1e-12);
        assert_eq!(d.doubled().generator.count, 6);
        assert!(serde_json::from_str::<FamilyDescriptor>(r#"{"base":{"kind":"constant","params":{"value":1}},"generator":{"kind":"spin","count":1,"step":1}}"#).is_err());
    }
}
