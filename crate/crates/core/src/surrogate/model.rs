use serde::{Deserialize, Serialize};

use crate::kernels::{KernelSpec, SeparableFactor};
use crate::{Error, Result};

/// `f(u) = offset + sum_i w_i prod_l h(u_l; c_il)` over normalized inputs
/// `u` in `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineTensorSurrogate {
    offset: f64,
    weights: Vec<f64>,
    centers: Vec<Vec<f64>>,
    kernel: KernelSpec,
}

impl AffineTensorSurrogate {
    pub fn new(offset: f64, weights: Vec<f64>, centers: Vec<Vec<f64>>, kernel: KernelSpec) -> Result<Self> {
        if weights.len() != centers.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} centers",
                weights.len(),
                centers.len()
            )));
        }
        let d = centers.first().map(Vec::len).unwrap_or_else(|| match &kernel.lengthscales {
            crate::kernels::Lengthscales::Ard(t) => t.len(),
            crate::kernels::Lengthscales::Shared(_) => 1,
        });
        if d == 0 {
            return Err(Error::InvalidArgument("centers must have at least one coordinate".into()));
        }
        for c in &centers {
            if c.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: c.len() });
            }
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidArgument(format!("center {:?} outside the unit hypercube", c)));
            }
        }
        kernel.validate_dim(d)?;
        if !offset.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("non-finite offset or weight".into()));
        }
        Ok(AffineTensorSurrogate { offset, weights, centers, kernel })
    }

    pub fn dim(&self) -> usize {
        self.centers
            .first()
            .map(Vec::len)
            .unwrap_or_else(|| match &self.kernel.lengthscales {
                crate::kernels::Lengthscales::Ard(t) => t.len(),
                crate::kernels::Lengthscales::Shared(_) => 1,
            })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn predict(&self, u: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (w, c) in self.weights.iter().zip(&self.centers) {
            acc += w * self.kernel.eval(c, u);
        }
        self.offset + acc
    }

    /// Gradient with respect to the normalized inputs.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut grad = vec![0.0; d];
        let mut vals = vec![0.0; d];
        let mut ders = vec![0.0; d];
        for (w, c) in self.weights.iter().zip(&self.centers) {
            for l in 0..d {
                let (h, dh) = self.kernel.factor_and_derivative(l, c[l], u[l]);
                vals[l] = h;
                ders[l] = dh;
            }
            for l in 0..d {
                let others: f64 = (0..d).filter(|&m| m != l).map(|m| vals[m]).product();
                grad[l] += w * ders[l] * others;
            }
        }
        grad
    }

    /// The model of `a * f + b`.
    pub fn affine_transformed(&self, a: f64, b: f64) -> Self {
        AffineTensorSurrogate {
            offset: a * self.offset + b,
            weights: self.weights.iter().map(|w| a * w).collect(),
            centers: self.centers.clone(),
            kernel: self.kernel.clone(),
        }
    }
}
