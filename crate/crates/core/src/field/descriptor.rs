//! JSON function descriptors: `{"kind": ..., "params": {...}}`.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::function::{GridFunction, WeightField};
use super::grid::Grid;
use super::table::{Outside, SampledTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionDescriptor {
    Constant(ConstantParams),
    Gaussian(GaussianParams),
    Indicator(IndicatorParams),
    Power(PowerParams),
    Bump(BumpParams),
    Sine(SineParams),
    Translate(TranslateParams),
    Dilate(DilateParams),
    Sum(SumParams),
    Product(ProductParams),
    GridCsv(GridCsvParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantParams {
    pub value: f64,
}

/// `amplitude * exp(-|x - center|^2 / width^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianParams {
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

/// Indicator of the closed box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorParams {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
}

/// `amplitude * |x - center|^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerParams {
    #[serde(default)]
    pub center: Vec<f64>,
    pub exponent: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

/// Smooth compactly supported bump, equal to `amplitude` at the center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpParams {
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

/// `amplitude * sin(frequency . x + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineParams {
    pub frequency: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

/// `base(x - shift)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslateParams {
    pub base: Box<FunctionDescriptor>,
    pub shift: Vec<f64>,
}

/// `base(center + (x - center) / factor)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilateParams {
    pub base: Box<FunctionDescriptor>,
    pub factor: f64,
    #[serde(default)]
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumParams {
    pub terms: Vec<FunctionDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductParams {
    pub factors: Vec<FunctionDescriptor>,
}

/// CSV file with header `x[,y],value`; zero outside the sampled hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCsvParams {
    pub path: PathBuf,
}

fn one() -> f64 {
    1.0
}

type Evaluator = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

fn coord(v: &[f64], a: usize) -> f64 {
    v.get(a).copied().unwrap_or(0.0)
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(a, v)| {
            let d = v - coord(c, a);
            d * d
        })
        .sum()
}

impl FunctionDescriptor {
    pub fn constant(value: f64) -> Self {
        FunctionDescriptor::Constant(ConstantParams { value })
    }

    pub fn gaussian(center: Vec<f64>, width: f64) -> Self {
        FunctionDescriptor::Gaussian(GaussianParams {
            center,
            width,
            amplitude: 1.0,
        })
    }

    pub fn indicator(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        FunctionDescriptor::Indicator(IndicatorParams {
            lo,
            hi,
            amplitude: 1.0,
        })
    }

    pub fn power(center: Vec<f64>, exponent: f64) -> Self {
        FunctionDescriptor::Power(PowerParams {
            center,
            exponent,
            amplitude: 1.0,
        })
    }

    pub fn bump(center: Vec<f64>, radius: f64) -> Self {
        FunctionDescriptor::Bump(BumpParams {
            center,
            radius,
            amplitude: 1.0,
        })
    }

    pub fn sine(frequency: Vec<f64>) -> Self {
        FunctionDescriptor::Sine(SineParams {
            frequency,
            phase: 0.0,
            amplitude: 1.0,
        })
    }

    pub fn translate(self, shift: Vec<f64>) -> Self {
        FunctionDescriptor::Translate(TranslateParams {
            base: Box::new(self),
            shift,
        })
    }

    pub fn dilate(self, factor: f64, center: Vec<f64>) -> Self {
        FunctionDescriptor::Dilate(DilateParams {
            base: Box::new(self),
            factor,
            center,
        })
    }

    pub fn times(self, other: FunctionDescriptor) -> Self {
        FunctionDescriptor::Product(ProductParams {
            factors: vec![self, other],
        })
    }

    fn evaluator(&self) -> Result<Evaluator> {
        Ok(match self.clone() {
            FunctionDescriptor::Constant(p) => Box::new(move |_| p.value),
            FunctionDescriptor::Gaussian(p) => {
                if !(p.width > 0.0) {
                    return Err(Error::Descriptor("gaussian width must be > 0".into()));
                }
                let w2 = p.width * p.width;
                Box::new(move |x| p.amplitude * (-dist2(x, &p.center) / w2).exp())
            }
            FunctionDescriptor::Indicator(p) => {
                if p.lo.len() != p.hi.len() || p.lo.is_empty() {
                    return Err(Error::Descriptor("indicator lo/hi mismatch".into()));
                }
                Box::new(move |x| {
                    let inside = x
                        .iter()
                        .enumerate()
                        .all(|(a, v)| a >= p.lo.len() || (p.lo[a] <= *v && *v <= p.hi[a]));
                    if inside {
                        p.amplitude
                    } else {
                        0.0
                    }
                })
            }
            FunctionDescriptor::Power(p) => Box::new(move |x| {
                p.amplitude * dist2(x, &p.center).sqrt().powf(p.exponent)
            }),
            FunctionDescriptor::Bump(p) => {
                if !(p.radius > 0.0) {
                    return Err(Error::Descriptor("bump radius must be > 0".into()));
                }
                let r2 = p.radius * p.radius;
                Box::new(move |x| {
                    let t = dist2(x, &p.center) / r2;
                    if t < 1.0 {
                        p.amplitude * (1.0 - 1.0 / (1.0 - t)).exp()
                    } else {
                        0.0
                    }
                })
            }
            FunctionDescriptor::Sine(p) => Box::new(move |x| {
                let arg: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(a, v)| coord(&p.frequency, a) * v)
                    .sum();
                p.amplitude * (arg + p.phase).sin()
            }),
            FunctionDescriptor::Translate(p) => {
                let base = p.base.evaluator()?;
                Box::new(move |x| {
                    let y: Vec<f64> = x
                        .iter()
                        .enumerate()
                        .map(|(a, v)| v - coord(&p.shift, a))
                        .collect();
                    base(&y)
                })
            }
            FunctionDescriptor::Dilate(p) => {
                if !(p.factor > 0.0) {
                    return Err(Error::Descriptor("dilation factor must be > 0".into()));
                }
                let base = p.base.evaluator()?;
                Box::new(move |x| {
                    let y: Vec<f64> = x
                        .iter()
                        .enumerate()
                        .map(|(a, v)| {
                            let c = coord(&p.center, a);
                            c + (v - c) / p.factor
                        })
                        .collect();
                    base(&y)
                })
            }
            FunctionDescriptor::Sum(p) => {
                let coeffs = match &p.coefficients {
                    Some(c) if c.len() != p.terms.len() => {
                        return Err(Error::Descriptor(
                            "sum coefficients and terms differ in length".into(),
                        ))
                    }
                    Some(c) => c.clone(),
                    None => vec![1.0; p.terms.len()],
                };
                let terms: Vec<Evaluator> =
                    p.terms.iter().map(|t| t.evaluator()).collect::<Result<_>>()?;
                Box::new(move |x| terms.iter().zip(&coeffs).map(|(t, c)| c * t(x)).sum())
            }
            FunctionDescriptor::Product(p) => {
                let factors: Vec<Evaluator> =
                    p.factors.iter().map(|t| t.evaluator()).collect::<Result<_>>()?;
                Box::new(move |x| factors.iter().map(|t| t(x)).product())
            }
            FunctionDescriptor::GridCsv(p) => {
                let table = Arc::new(SampledTable::from_csv(&p.path, Outside::Zero)?);
                Box::new(move |x| table.eval(x))
            }
        })
    }

    /// Samples the descriptor at every node of `grid`.
    pub fn sample(&self, grid: &Arc<Grid>) -> Result<GridFunction> {
        let f = self.evaluator()?;
        let values: Vec<f64> = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::range(grid.point(i), "descriptor is not finite here"));
        }
        GridFunction::new(grid.clone(), values)
    }

    /// Samples and checks strict positivity.
    pub fn sample_weight(&self, grid: &Arc<Grid>) -> Result<WeightField> {
        WeightField::new(self.sample(grid)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_round_trips() {
        let d = FunctionDescriptor::bump(vec![0.5], 0.25).translate(vec![1.0]);
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.starts_with(r#"{"kind":"translate","params":{"base":{"kind":"bump""#), "{s}");
        let back: FunctionDescriptor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"kind":"gaussian","params":{"widht":2.0}}"#;
        assert!(serde_json::from_str::<FunctionDescriptor>(bad).is_err());
        let bad_top = r#"{"kind":"constant","params":{"value":1},"extra":0}"#;
        assert!(serde_json::from_str::<FunctionDescriptor>(bad_top).is_err());
    }

    #[test]
    fn bump_peaks_at_center_and_vanishes_outside() {
        let g = Arc::new(Grid::line(-2.0, 2.0, 401).unwrap());
        let f = FunctionDescriptor::bump(vec![0.0], 1.0).sample(&g).unwrap();
        assert_eq!(f.sup_norm(), 1.0);
        assert_eq!(f.values()[0], 0.0);
        assert_eq!(f.values()[100], 0.0); // x = -1
    }

    #[test]
    fn csv_descriptor_reads_file() {
        let dir = std::env::temp_dir().join(format!("varleb-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        std::fs::write(&path, "x,value\n0,0\n1,2\n").unwrap();
        let d = FunctionDescriptor::GridCsv(GridCsvParams { path });
        let g = Arc::new(Grid::line(0.0, 2.0, 5).unwrap());
        let f = d.sample(&g).unwrap();
        assert_eq!(f.values(), &[0.0, 1.0, 2.0, 0.0, 0.0]);
    }
}
