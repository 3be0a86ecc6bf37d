//! Random inputs shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use varleb::exponent::{ExponentField, QuadrupleSpec};
use varleb::field::{BoxDomain, DyadicCubeSet, Grid, GridFunction, WeightField};

pub fn line(lo: f64, hi: f64, n: usize) -> Arc<Grid> {
    Arc::new(Grid::line(lo, hi, n).unwrap())
}

pub fn constant(d: &BoxDomain, v: f64) -> ExponentField {
    ExponentField::constant(d.clone(), v).unwrap()
}

pub fn cubes(g: &Grid, depth: u32) -> DyadicCubeSet {
    DyadicCubeSet::new(g.domain().clone(), depth, true).unwrap()
}

/// Exponent with values in `[lo, hi]` on a one-dimensional domain: constant,
/// affine, or log-decaying, chosen at random.
pub fn exponent(rng: &mut impl Rng, d: &BoxDomain, lo: f64, hi: f64) -> ExponentField {
    let a = rng.gen_range(lo..hi);
    let b = rng.gen_range(lo..hi);
    let (x0, x1) = (d.lo[0], d.hi[0]);
    match rng.gen_range(0..3) {
        0 => constant(d, a),
        1 => {
            let slope = (b - a) / (x1 - x0);
            ExponentField::affine(d.clone(), a - slope * x0, vec![slope]).unwrap()
        }
        _ => {
            // limit + amplitude / ln(e + |x - c|) stays between limit and limit + amplitude
            let (lim, top) = (a.min(b), a.max(b));
            let c = rng.gen_range(x0..x1);
            ExponentField::log_decay(d.clone(), lim, top - lim, vec![c]).unwrap()
        }
    }
}

/// Sum of random bumps and plateaus, with a random zero stretch.
pub fn function(rng: &mut impl Rng, g: &Arc<Grid>) -> GridFunction {
    let (x0, x1) = (g.domain().lo[0], g.domain().hi[0]);
    let len = x1 - x0;
    let k = rng.gen_range(1..5);
    let parts: Vec<(u8, f64, f64, f64)> = (0..k)
        .map(|_| {
            (
                rng.gen_range(0..2u8),
                rng.gen_range(x0..x1),
                rng.gen_range(0.02..0.4) * len,
                rng.gen_range(-3.0..3.0),
            )
        })
        .collect();
    let hole = rng.gen_range(x0..x1);
    let hole_w = rng.gen_range(0.0..0.2) * len;
    let mut f = GridFunction::from_fn(g, |x| {
        if (x[0] - hole).abs() < hole_w {
            return 0.0;
        }
        parts
            .iter()
            .map(|&(kind, c, w, a)| {
                let t = (x[0] - c) / w;
                if kind == 0 {
                    a * (-t * t).exp()
                } else if t.abs() < 1.0 {
                    a
                } else {
                    0.0
                }
            })
            .sum()
    })
    .unwrap();
    if f.is_zero() {
        f = GridFunction::constant(g, 1.0);
    }
    f.scale(10f64.powf(rng.gen_range(-2.0..2.0)))
}

/// `|x - c|^a exp(b sin(2π k x))` with `c` drawn away from the grid nodes.
pub fn weight(rng: &mut impl Rng, g: &Arc<Grid>) -> WeightField {
    let (x0, x1) = (g.domain().lo[0], g.domain().hi[0]);
    let h = g.min_step();
    let c = x0 + h * ((rng.gen_range(0.0..(x1 - x0)) / h).floor() + 0.5);
    let a = rng.gen_range(-0.2..0.2);
    let b = rng.gen_range(-0.5..0.5);
    let k = rng.gen_range(1..4) as f64;
    WeightField::from_fn(g, |x| {
        (x[0] - c).abs().powf(a) * (b * (std::f64::consts::TAU * k * x[0]).sin()).exp()
    })
    .unwrap()
}

/// Admissible spec on a one-dimensional domain with shared `r`, `s`, `gamma`.
pub struct SharedParameters {
    pub r: Vec<f64>,
    pub s: f64,
    pub gamma: f64,
}

impl SharedParameters {
    pub fn random(rng: &mut impl Rng, m: usize, finite_s: bool) -> Self {
        let r = (0..m).map(|_| rng.gen_range(0.5..1.5) * m as f64).collect();
        let gamma = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.15) };
        let s = if finite_s { rng.gen_range(12.0..30.0) } else { f64::INFINITY };
        SharedParameters { r, s, gamma }
    }

    /// Draws exponents until the spec is admissible.
    pub fn spec(&self, rng: &mut impl Rng, d: &BoxDomain, variable: bool) -> QuadrupleSpec {
        loop {
            let p: Vec<ExponentField> = self
                .r
                .iter()
                .map(|&r| {
                    let (lo, hi) = (r + 0.3, r + 3.0);
                    if variable {
                        exponent(rng, d, lo, hi)
                    } else {
                        constant(d, rng.gen_range(lo..hi))
                    }
                })
                .collect();
            let Ok(spec) = QuadrupleSpec::with_gamma(p, self.r.clone(), self.s, self.gamma) else {
                continue;
            };
            let v = varleb::exponent::validate_quadruple(&spec, varleb::exponent::GAMMA_TOLERANCE).unwrap();
            if v.admissible() {
                return spec;
            }
        }
    }
}
