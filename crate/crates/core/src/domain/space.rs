use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

/// Box-shaped input domain with an independent uniform distribution on each
/// side. All surrogate work happens in the unit hypercube; this type owns the
/// affine map in and out of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpace {
    dims: Vec<Dimension>,
}

impl InputSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpace("at least one dimension is required".into()));
        }
        for (i, d) in dims.iter().enumerate() {
            if !(d.lower.is_finite() && d.upper.is_finite()) {
                return Err(Error::InvalidSpace(format!("dimension {} ({}) has non-finite bounds", i, d.name)));
            }
            if d.lower >= d.upper {
                return Err(Error::InvalidSpace(format!(
                    "dimension {} ({}) needs lower < upper, got [{}, {}]",
                    i, d.name, d.lower, d.upper
                )));
            }
            if dims[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::InvalidSpace(format!("duplicate dimension name {:?}", d.name)));
            }
        }
        Ok(InputSpace { dims })
    }

    /// `[0,1]^d` with dimensions named `x1..xd`.
    pub fn unit(d: usize) -> Result<Self> {
        Self::uniform_box(d, 0.0, 1.0)
    }

    /// The same interval on every axis, dimensions named `x1..xd`.
    pub fn uniform_box(d: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(
            (1..=d)
                .map(|i| Dimension { name: format!("x{}", i), lower, upper })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.dims.iter().map(|d| d.name.as_str())
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.dims)
                .all(|(&v, d)| v >= d.lower && v <= d.upper)
    }

    /// Maps a point of the box onto `[0,1]^d`.
    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        x.iter()
            .zip(&self.dims)
            .enumerate()
            .map(|(i, (&v, d))| {
                if !(v >= d.lower && v <= d.upper) {
                    return Err(Error::OutOfDomain {
                        dim: i,
                        name: d.name.clone(),
                        value: v,
                        lower: d.lower,
                        upper: d.upper,
                    });
                }
                Ok(((v - d.lower) / (d.upper - d.lower)).clamp(0.0, 1.0))
            })
            .collect()
    }

    /// Inverse of [`normalize`](Self::normalize).
    pub fn denormalize(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        u.iter()
            .zip(&self.dims)
            .enumerate()
            .map(|(i, (&v, d))| {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::OutOfDomain {
                        dim: i,
                        name: d.name.clone(),
                        value: v,
                        lower: 0.0,
                        upper: 1.0,
                    });
                }
                Ok((d.lower + v * (d.upper - d.lower)).clamp(d.lower, d.upper))
            })
            .collect()
    }

    /// `(upper - lower)^2` per dimension. Dividing a unit-hypercube DGSM by
    /// this factor gives the DGSM with respect to original coordinates.
    pub fn dgsm_scale(&self) -> Vec<f64> {
        self.dims.iter().map(|d| (d.upper - d.lower).powi(2)).collect()
    }
}
