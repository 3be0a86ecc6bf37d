use std::path::Path;

use crate::error::{Error, Result};

/// What a [`SampledTable`] returns outside its node hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outside {
    Zero,
    Clamp,
}

/// Tensor table of samples with multilinear interpolation (n <= 2).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTable {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
    outside: Outside,
}

impl SampledTable {
    /// `values` are row-major with the last axis fastest.
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>, outside: Outside) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::Descriptor("table must have 1 or 2 axes".into()));
        }
        for ax in &axes {
            if ax.len() < 2 || ax.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Descriptor(
                    "table axes need >= 2 strictly increasing coordinates".into(),
                ));
            }
        }
        let len: usize = axes.iter().map(Vec::len).product();
        if values.len() != len {
            return Err(Error::Descriptor(format!(
                "table expects {len} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Descriptor("table values must be finite".into()));
        }
        Ok(SampledTable {
            axes,
            values,
            outside,
        })
    }

    /// Uniform axes from `lo`, `hi` and per-axis counts.
    pub fn uniform(
        lo: &[f64],
        hi: &[f64],
        resolution: &[usize],
        values: Vec<f64>,
        outside: Outside,
    ) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != resolution.len() {
            return Err(Error::Descriptor("table lo/hi/resolution lengths differ".into()));
        }
        let axes = (0..lo.len())
            .map(|a| {
                let r = resolution[a].max(2);
                (0..r)
                    .map(|i| lo[a] + (hi[a] - lo[a]) * i as f64 / (r - 1) as f64)
                    .collect()
            })
            .collect();
        SampledTable::new(axes, values, outside)
    }

    /// Reads `x[,y],value` CSV with a header row.
    pub fn from_csv(path: &Path, outside: Outside) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Descriptor(format!("{}: {e}", path.display())))?;
        SampledTable::parse_csv(&text, outside)
    }

    pub fn parse_csv(text: &str, outside: Outside) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Descriptor("empty CSV".into()))?
            .split(',')
            .map(|s| s.trim().to_ascii_lowercase())
            .collect();
        let dim = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
            ["x", "value"] => 1,
            ["x", "y", "value"] => 2,
            other => {
                return Err(Error::Descriptor(format!(
                    "CSV header must be `x,value` or `x,y,value`, got {other:?}"
                )))
            }
        };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (n, line) in lines.enumerate() {
            let row: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| Error::Descriptor(format!("CSV row {}: {e}", n + 2)))?;
            if row.len() != dim + 1 {
                return Err(Error::Descriptor(format!(
                    "CSV row {} has {} fields, expected {}",
                    n + 2,
                    row.len(),
                    dim + 1
                )));
            }
            rows.push(row);
        }
        let mut axes: Vec<Vec<f64>> = (0..dim)
            .map(|a| {
                let mut v: Vec<f64> = rows.iter().map(|r| r[a]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        for ax in &mut axes {
            ax.dedup();
        }
        let len: usize = axes.iter().map(Vec::len).product();
        if rows.len() != len {
            return Err(Error::Descriptor(format!(
                "CSV has {} rows but the coordinate tensor needs {len}",
                rows.len()
            )));
        }
        let mut values = vec![f64::NAN; len];
        for r in &rows {
            let mut flat = 0;
            for a in 0..dim {
                let i = axes[a]
                    .binary_search_by(|v| v.total_cmp(&r[a]))
                    .expect("coordinate collected above");
                flat = flat * axes[a].len() + i;
            }
            values[flat] = r[dim];
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Descriptor("CSV does not cover a full tensor grid".into()));
        }
        SampledTable::new(axes, values, outside)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut locs = [(0usize, 0.0f64); 2];
        for (a, ax) in self.axes.iter().enumerate() {
            let v = x.get(a).copied().unwrap_or(0.0);
            let (first, last) = (ax[0], ax[ax.len() - 1]);
            let v = if v < first || v > last {
                match self.outside {
                    Outside::Zero => return 0.0,
                    Outside::Clamp => v.clamp(first, last),
                }
            } else {
                v
            };
            let i = match ax.binary_search_by(|p| p.total_cmp(&v)) {
                Ok(i) => i.min(ax.len() - 2),
                Err(i) => i.saturating_sub(1).min(ax.len() - 2),
            };
            let t = (v - ax[i]) / (ax[i + 1] - ax[i]);
            locs[a] = (i, t);
        }
        match self.dim() {
            1 => {
                let (i, t) = locs[0];
                self.values[i] * (1.0 - t) + self.values[i + 1] * t
            }
            _ => {
                let ny = self.axes[1].len();
                let (i, s) = locs[0];
                let (j, t) = locs[1];
                let v = |a: usize, b: usize| self.values[a * ny + b];
                v(i, j) * (1.0 - s) * (1.0 - t)
                    + v(i + 1, j) * s * (1.0 - t)
                    + v(i, j + 1) * (1.0 - s) * t
                    + v(i + 1, j + 1) * s * t
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_dimensional_csv() {
        let csv = "x,y,value\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n";
        let t = SampledTable::parse_csv(csv, Outside::Zero).unwrap();
        assert_eq!(t.eval(&[0.5, 0.5]), 2.5);
        assert_eq!(t.eval(&[1.0, 1.0]), 4.0);
        assert_eq!(t.eval(&[2.0, 0.0]), 0.0);
    }

    #[test]
    fn clamps_outside_when_asked() {
        let t = SampledTable::uniform(&[0.0], &[1.0], &[3], vec![2.0, 3.0, 5.0], Outside::Clamp)
            .unwrap();
        assert_eq!(t.eval(&[-1.0]), 2.0);
        assert_eq!(t.eval(&[0.75]), 4.0);
        assert_eq!(t.eval(&[9.0]), 5.0);
    }

    #[test]
    fn rejects_incomplete_tensor() {
        let csv = "x,y,value\n0,0,1\n0,1,2\n1,0,3\n";
        assert!(SampledTable::parse_csv(csv, Outside::Zero).is_err());
        assert!(SampledTable::parse_csv("a,b\n1,2\n", Outside::Zero).is_err());
    }
}
