use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// Default node count per axis in one dimension.
pub const DEFAULT_RESOLUTION_1D: usize = 4096;
/// Default node count per axis in two dimensions.
pub const DEFAULT_RESOLUTION_2D: usize = 256;

/// Axis-aligned box `[lo_i, hi_i]` in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = BoxDomain { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        BoxDomain {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() > MAX_DIM || self.lo.len() != self.hi.len() {
            return Err(Error::Domain(format!(
                "box needs 1..={MAX_DIM} matching axes, got lo={:?} hi={:?}",
                self.lo, self.hi
            )));
        }
        for (a, b) in self.lo.iter().zip(&self.hi) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Domain(format!("degenerate axis [{a}, {b}]")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// All `2^n` corners.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..(1usize << n))
            .map(|mask| {
                (0..n)
                    .map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] })
                    .collect()
            })
            .collect()
    }
}

/// Uniform tensor grid over a box, nodes at both endpoints of every axis.
///
/// Quadrature is the composite trapezoid rule: every node carries the cell
/// volume `prod (hi_i - lo_i)/(res_i - 1)`, halved once per axis on which the
/// node sits on the boundary. All weights are positive, so every inequality
/// that holds for a general measure holds for the discrete one exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: BoxDomain,
    resolution: Vec<usize>,
    step: Vec<f64>,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(domain: BoxDomain, resolution: Vec<usize>) -> Result<Self> {
        domain.validate()?;
        let n = domain.dim();
        if resolution.len() != n {
            return Err(Error::Domain(format!(
                "resolution has {} axes, box has {n}",
                resolution.len()
            )));
        }
        if resolution.iter().any(|&r| r < 2) {
            return Err(Error::Domain("resolution must be >= 2 per axis".into()));
        }
        let step: Vec<f64> = (0..n)
            .map(|i| (domain.hi[i] - domain.lo[i]) / (resolution[i] - 1) as f64)
            .collect();
        let len: usize = resolution.iter().product();
        let cell: f64 = step.iter().product();
        let mut coords = Vec::with_capacity(len * n);
        let mut weights = Vec::with_capacity(len);
        let mut idx = vec![0usize; n];
        for _ in 0..len {
            let mut w = cell;
            for a in 0..n {
                coords.push(domain.lo[a] + idx[a] as f64 * step[a]);
                if idx[a] == 0 || idx[a] == resolution[a] - 1 {
                    w *= 0.5;
                }
            }
            weights.push(w);
            // last axis fastest
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] < resolution[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(Grid {
            domain,
            resolution,
            step,
            coords,
            weights,
        })
    }

    /// 1-D grid with `res` nodes on `[lo, hi]`.
    pub fn line(lo: f64, hi: f64, res: usize) -> Result<Self> {
        Grid::new(BoxDomain::interval(lo, hi), vec![res])
    }

    /// Square-ish 2-D grid with `res` nodes per axis.
    pub fn plane(lo: [f64; 2], hi: [f64; 2], res: usize) -> Result<Self> {
        Grid::new(BoxDomain::new(lo.to_vec(), hi.to_vec())?, vec![res, res])
    }

    /// Grid with the default resolution for the box dimension.
    pub fn with_default_resolution(domain: BoxDomain) -> Result<Self> {
        let res = match domain.dim() {
            1 => DEFAULT_RESOLUTION_1D,
            _ => DEFAULT_RESOLUTION_2D,
        };
        let n = domain.dim();
        Grid::new(domain, vec![res; n])
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn step(&self) -> &[f64] {
        &self.step
    }

    /// Smallest axis step.
    pub fn min_step(&self) -> f64 {
        self.step.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        self.step.iter().product()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.coords[i * n..(i + 1) * n]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Flat index of the multi-index `idx`.
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.resolution)
            .fold(0, |acc, (&i, &r)| acc * r + i)
    }

    /// Multi-index of flat index `i`.
    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            out[a] = i % self.resolution[a];
            i /= self.resolution[a];
        }
        out
    }

    /// Total quadrature measure of the grid box.
    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same box, `factor` times the cell count per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let res = self
            .resolution
            .iter()
            .map(|&r| (r - 1) * factor + 1)
            .collect();
        Grid::new(self.domain.clone(), res)
    }

    /// Inclusive per-axis index ranges that may contain nodes of the box
    /// `[lo, hi]`; callers still test membership exactly.
    pub(crate) fn index_window(&self, lo: &[f64], hi: &[f64]) -> Option<Vec<(usize, usize)>> {
        let mut out = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let h = self.step[a];
            let start = ((lo[a] - self.domain.lo[a]) / h).floor() - 1.0;
            let end = ((hi[a] - self.domain.lo[a]) / h).ceil() + 1.0;
            let last = (self.resolution[a] - 1) as f64;
            if end < 0.0 || start > last {
                return None;
            }
            out.push((start.max(0.0) as usize, end.min(last) as usize));
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_weights_sum_to_box_volume() {
        let g = Grid::line(0.0, 1.0, 11).unwrap();
        assert!((g.total_measure() - 1.0).abs() < 1e-15);
        let g2 = Grid::plane([0.0, -1.0], [2.0, 1.0], 9).unwrap();
        assert!((g2.total_measure() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn flat_and_multi_index_agree() {
        let g = Grid::new(BoxDomain::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(), vec![3, 5]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(i)), i);
        }
        assert_eq!(g.point(g.flat_index(&[2, 4])), &[1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(Grid::line(0.0, 1.0, 1).is_err());
        assert!(Grid::line(1.0, 0.0, 8).is_err());
    }
}
