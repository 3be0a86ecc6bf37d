use std::sync::Arc;

use super::grid::Grid;
use super::region::Region;
use crate::error::{Error, Result};

/// Real function sampled at the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::range(grid.point(i), "NaN sample"));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        GridFunction::new(grid.clone(), values)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        GridFunction {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        GridFunction::constant(grid, 0.0)
    }

    /// Indicator of a region.
    pub fn indicator(grid: &Arc<Grid>, region: &Region) -> Self {
        let mut values = vec![0.0; grid.len()];
        for i in region.indices(grid) {
            values[i] = 1.0;
        }
        GridFunction {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination; grids must be the same object or equal.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(GridFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::Domain("functions live on different grids".into()))
        }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `f * chi_region`.
    pub fn restrict(&self, region: &Region) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for i in region.indices(&self.grid) {
            values[i] = self.values[i];
        }
        GridFunction {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Trapezoid quadrature over the nodes inside `region`.
    pub fn integrate(&self, region: &Region) -> Result<f64> {
        let idx = region.indices(&self.grid);
        if idx.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok(idx
            .iter()
            .map(|&i| self.grid.weight(i) * self.values[i])
            .sum())
    }

    /// Integral over the whole grid box.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    /// `( (1/|B|) * integral over B(center, radius) of |f|^q )^(1/q)`, with
    /// `|B|` the quadrature measure of the discrete ball.
    pub fn ball_average(&self, center: &[f64], radius: f64, q: f64) -> Result<f64> {
        if !(radius > 0.0) || !(q > 0.0) {
            return Err(Error::Domain(format!(
                "ball average needs radius > 0 and power > 0 (got {radius}, {q})"
            )));
        }
        let idx = Region::ball(center, radius).indices(&self.grid);
        if idx.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok(power_mean(
            idx.iter().map(|&i| (self.grid.weight(i), self.values[i].abs())),
            q,
        ))
    }
}

/// Weighted power mean `(sum w |v|^q / sum w)^(1/q)` of `(weight, value)` pairs.
pub(crate) fn power_mean(pairs: impl Iterator<Item = (f64, f64)>, q: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    if q == 1.0 {
        for (w, v) in pairs {
            num += w * v;
            den += w;
        }
        num / den
    } else {
        for (w, v) in pairs {
            if v != 0.0 {
                num += w * v.powf(q);
            }
            den += w;
        }
        (num / den).powf(1.0 / q)
    }
}

/// Strictly positive, finite function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    base: GridFunction,
}

impl WeightField {
    pub fn new(base: GridFunction) -> Result<Self> {
        if let Some(i) = base
            .values
            .iter()
            .position(|&v| !(v > 0.0 && v.is_finite()))
        {
            return Err(Error::range(
                base.grid.point(i),
                format!("weight must be positive and finite, got {}", base.values[i]),
            ));
        }
        Ok(WeightField { base })
    }

    pub fn unit(grid: &Arc<Grid>) -> Self {
        WeightField {
            base: GridFunction::constant(grid, 1.0),
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        WeightField::new(GridFunction::from_fn(grid, f)?)
    }

    pub fn as_function(&self) -> &GridFunction {
        &self.base
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.base.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.base.values()
    }

    pub fn recip(&self) -> Self {
        WeightField {
            base: self.base.map(f64::recip),
        }
    }

    /// `w^a`; fails if the result under/overflows at some node.
    pub fn pow(&self, a: f64) -> Result<Self> {
        WeightField::new(self.base.map(|v| v.powf(a)))
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        WeightField::new(self.base.scale(c))
    }

    pub fn mul(&self, other: &WeightField) -> Result<Self> {
        WeightField::new(self.base.mul(&other.base)?)
    }

    /// `prod w_j`, the weight carried by the target space.
    pub fn product(ws: &[WeightField]) -> Result<Self> {
        let (first, rest) = ws
            .split_first()
            .ok_or_else(|| Error::Domain("empty weight vector".into()))?;
        rest.iter().try_fold(first.clone(), |acc, w| acc.mul(w))
    }

    /// `w0^(1-theta) * w1^theta`.
    pub fn blend(w0: &WeightField, w1: &WeightField, theta: f64) -> Result<Self> {
        WeightField::new(w0.base.zip_with(&w1.base, |a, b| {
            a.powf(1.0 - theta) * b.powf(theta)
        })?)
    }

    pub fn is_unit(&self) -> bool {
        self.base.values.iter().all(|&v| v == 1.0)
    }
}
