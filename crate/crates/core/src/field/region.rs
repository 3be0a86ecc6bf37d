use serde::{Deserialize, Serialize};

use super::grid::{BoxDomain, Grid};
use crate::error::{Error, Result};

/// Integration region; membership is decided per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Closed box.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Closed Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Complement of the open ball, intersected with the grid box.
    Exterior { center: Vec<f64>, radius: f64 },
    /// The whole grid box.
    All,
}

impl Region {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        Region::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn boxed(lo: &[f64], hi: &[f64]) -> Self {
        Region::Box {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *a <= *v && *v <= *b),
            Region::Ball { center, radius } => dist2(x, center) <= radius * radius,
            Region::Exterior { center, radius } => dist2(x, center) >= radius * radius,
            Region::All => true,
        }
    }

    /// Node indices inside the region, ascending.
    pub fn indices(&self, grid: &Grid) -> Vec<usize> {
        let window = match self {
            Region::Box { lo, hi } => grid.index_window(lo, hi),
            Region::Ball { center, radius } => {
                let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
                let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
                grid.index_window(&lo, &hi)
            }
            Region::Exterior { .. } | Region::All => {
                Some(grid.resolution().iter().map(|&r| (0, r - 1)).collect())
            }
        };
        let Some(window) = window else {
            return Vec::new();
        };
        let mut out = Vec::new();
        match window.as_slice() {
            [(a0, a1)] => {
                for i in *a0..=*a1 {
                    if self.contains(grid.point(i)) {
                        out.push(i);
                    }
                }
            }
            [(a0, a1), (b0, b1)] => {
                for i in *a0..=*a1 {
                    for j in *b0..=*b1 {
                        let k = grid.flat_index(&[i, j]);
                        if self.contains(grid.point(k)) {
                            out.push(k);
                        }
                    }
                }
            }
            _ => unreachable!("grid dimension is 1 or 2"),
        }
        out
    }

    /// Quadrature measure of the nodes inside the region.
    pub fn measure(&self, grid: &Grid) -> f64 {
        self.indices(grid).iter().map(|&i| grid.weight(i)).sum()
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Identifier of a cube within a [`DyadicCubeSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeId {
    pub depth: u32,
    pub shifted: bool,
    /// Position along each axis (second entry unused in 1-D).
    pub index: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub id: CubeId,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Cube {
    pub fn region(&self) -> Region {
        Region::boxed(&self.lo, &self.hi)
    }

    /// Geometric volume.
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

/// Dyadic subcubes of a root box up to `max_depth`, optionally with the
/// family translated by half a side at every depth.
///
/// The enumeration is a lower-bound surrogate for a supremum over all cubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicCubeSet {
    pub root: BoxDomain,
    pub max_depth: u32,
    #[serde(default = "default_true")]
    pub shifted: bool,
}

fn default_true() -> bool {
    true
}

impl DyadicCubeSet {
    pub fn new(root: BoxDomain, max_depth: u32, shifted: bool) -> Result<Self> {
        root.validate()?;
        if max_depth > 20 {
            return Err(Error::Domain(format!("cube depth {max_depth} too large")));
        }
        Ok(DyadicCubeSet {
            root,
            max_depth,
            shifted,
        })
    }

    /// Depth-major enumeration; within a depth the unshifted family comes
    /// first, each family in lexicographic corner order.
    pub fn cubes(&self) -> Vec<Cube> {
        let n = self.root.dim();
        let mut out = Vec::new();
        for depth in 0..=self.max_depth {
            let parts = 1u32 << depth;
            for shifted in [false, true] {
                if shifted && !self.shifted {
                    continue;
                }
                let (count, offset) = if shifted {
                    (parts - 1, 0.5)
                } else {
                    (parts, 0.0)
                };
                if count == 0 {
                    continue;
                }
                let side: Vec<f64> = (0..n)
                    .map(|a| (self.root.hi[a] - self.root.lo[a]) / parts as f64)
                    .collect();
                let total = (count as usize).pow(n as u32);
                for flat in 0..total {
                    let mut index = [0u32; 2];
                    let mut rem = flat;
                    for a in (0..n).rev() {
                        index[a] = (rem % count as usize) as u32;
                        rem /= count as usize;
                    }
                    let lo: Vec<f64> = (0..n)
                        .map(|a| self.root.lo[a] + (index[a] as f64 + offset) * side[a])
                        .collect();
                    let hi: Vec<f64> = (0..n)
                        .map(|a| self.root.lo[a] + (index[a] as f64 + offset + 1.0) * side[a])
                        .collect();
                    out.push(Cube {
                        id: CubeId {
                            depth,
                            shifted,
                            index,
                        },
                        lo,
                        hi,
                    });
                }
            }
        }
        out
    }

    /// Number of cubes [`cubes`](Self::cubes) yields.
    pub fn count(&self) -> usize {
        let n = self.root.dim() as u32;
        (0..=self.max_depth)
            .map(|d| {
                let parts = 1usize << d;
                parts.pow(n) + if self.shifted { (parts - 1).pow(n) } else { 0 }
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_one_unshifted_interval() {
        let set = DyadicCubeSet::new(BoxDomain::interval(0.0, 1.0), 1, false).unwrap();
        let cubes = set.cubes();
        let spans: Vec<(f64, f64)> = cubes.iter().map(|c| (c.lo[0], c.hi[0])).collect();
        assert_eq!(spans, vec![(0.0, 1.0), (0.0, 0.5), (0.5, 1.0)]);
    }

    #[test]
    fn two_dimensional_depth_one_has_five_unshifted() {
        let root = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let set = DyadicCubeSet::new(root.clone(), 1, false).unwrap();
        assert_eq!(set.cubes().len(), 1 + 4);
        let shifted = DyadicCubeSet::new(root, 1, true).unwrap();
        // the shifted depth-1 family has a single cube centred in the root
        assert_eq!(shifted.cubes().len(), 1 + 4 + 1);
        assert_eq!(shifted.count(), 6);
    }

    #[test]
    fn depth_three_counts_fifteen() {
        let set = DyadicCubeSet::new(BoxDomain::interval(0.0, 1.0), 3, false).unwrap();
        assert_eq!(set.cubes().len(), 15);
        assert_eq!(set.count(), 15);
    }

    #[test]
    fn cubes_stay_inside_root() {
        let root = BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 3.0]).unwrap();
        let set = DyadicCubeSet::new(root.clone(), 4, true).unwrap();
        for c in set.cubes() {
            assert!(root.contains(&c.lo) && root.contains(&c.hi), "{c:?}");
        }
    }

    #[test]
    fn ball_indices_match_brute_force() {
        let g = Grid::plane([0.0, 0.0], [1.0, 1.0], 21).unwrap();
        let r = Region::ball(&[0.3, 0.55], 0.21);
        let fast = r.indices(&g);
        let slow: Vec<usize> = (0..g.len()).filter(|&i| r.contains(g.point(i))).collect();
        assert_eq!(fast, slow);
    }
}
