//! Separable kernels: the full kernel is a product of one-dimensional
//! factors `h(x_l; c_l)`, one per input dimension. The lengthscale parameter
//! `theta` multiplies the distance, so larger values give narrower factors.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelFamily {
    /// `exp(-theta r^2)`
    SquaredExponential,
    /// `(1 + sqrt(3) theta r) exp(-sqrt(3) theta r)`
    Matern32,
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "se" | "rbf" | "gaussian" | "squared-exponential" | "squared_exponential" => {
                Ok(KernelFamily::SquaredExponential)
            }
            "matern32" | "matern-3/2" | "matern3/2" | "matern" => Ok(KernelFamily::Matern32),
            other => Err(Error::Config(format!("unknown kernel family {:?}", other))),
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelFamily::SquaredExponential => write!(f, "se"),
            KernelFamily::Matern32 => write!(f, "matern32"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Lengthscales {
    /// One theta per dimension.
    Ard(Vec<f64>),
    /// A single theta for every dimension.
    Shared(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscales: Lengthscales,
}

/// One-dimensional factor functions of a separable kernel, indexed by
/// dimension. The integral engine only sees this trait.
pub trait SeparableFactor: Sync {
    fn factor(&self, dim: usize, center: f64, x: f64) -> f64;

    fn factor_derivative(&self, dim: usize, center: f64, x: f64) -> f64;

    /// Value and derivative with respect to `x` in one call.
    fn factor_and_derivative(&self, dim: usize, center: f64, x: f64) -> (f64, f64) {
        (self.factor(dim, center, x), self.factor_derivative(dim, center, x))
    }

    /// Distance over which the factor decays by roughly `e^-1`; used to size
    /// quadrature panels. `f64::INFINITY` for flat factors.
    fn decay_length(&self, dim: usize) -> f64;
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscales: Lengthscales) -> Result<Self> {
        let ok = match &lengthscales {
            Lengthscales::Ard(t) => !t.is_empty() && t.iter().all(|&v| v > 0.0 && v.is_finite()),
            Lengthscales::Shared(t) => *t > 0.0 && t.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "lengthscales must be finite and strictly positive: {:?}",
                lengthscales
            )));
        }
        Ok(KernelSpec { family, lengthscales })
    }

    pub fn ard(family: KernelFamily, theta: Vec<f64>) -> Result<Self> {
        Self::new(family, Lengthscales::Ard(theta))
    }

    pub fn shared(family: KernelFamily, theta: f64) -> Result<Self> {
        Self::new(family, Lengthscales::Shared(theta))
    }

    /// Checks the spec against the input dimension.
    pub fn validate_dim(&self, d: usize) -> Result<()> {
        if let Lengthscales::Ard(t) = &self.lengthscales {
            if t.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: t.len() });
            }
        }
        Ok(())
    }

    pub fn is_ard(&self) -> bool {
        matches!(self.lengthscales, Lengthscales::Ard(_))
    }

    #[inline]
    pub fn theta(&self, dim: usize) -> f64 {
        match &self.lengthscales {
            Lengthscales::Ard(t) => t[dim],
            Lengthscales::Shared(t) => *t,
        }
    }

    /// Thetas expanded to `d` entries.
    pub fn thetas(&self, d: usize) -> Vec<f64> {
        (0..d).map(|l| self.theta(l)).collect()
    }

    /// Full kernel `k(center, x)`: product of the factors.
    pub fn eval(&self, center: &[f64], x: &[f64]) -> f64 {
        center
            .iter()
            .zip(x)
            .enumerate()
            .map(|(l, (&c, &v))| self.factor(l, c, v))
            .product()
    }
}

impl SeparableFactor for KernelSpec {
    #[inline]
    fn factor(&self, dim: usize, center: f64, x: f64) -> f64 {
        let theta = self.theta(dim);
        let r = x - center;
        match self.family {
            KernelFamily::SquaredExponential => (-theta * r * r).exp(),
            KernelFamily::Matern32 => {
                let a = SQRT3 * theta * r.abs();
                (1.0 + a) * (-a).exp()
            }
        }
    }

    #[inline]
    fn factor_derivative(&self, dim: usize, center: f64, x: f64) -> f64 {
        self.factor_and_derivative(dim, center, x).1
    }

    #[inline]
    fn factor_and_derivative(&self, dim: usize, center: f64, x: f64) -> (f64, f64) {
        let theta = self.theta(dim);
        let r = x - center;
        match self.family {
            KernelFamily::SquaredExponential => {
                let e = (-theta * r * r).exp();
                (e, -2.0 * theta * r * e)
            }
            KernelFamily::Matern32 => {
                let a = SQRT3 * theta * r.abs();
                let e = (-a).exp();
                ((1.0 + a) * e, -3.0 * theta * theta * r * e)
            }
        }
    }

    fn decay_length(&self, dim: usize) -> f64 {
        let theta = self.theta(dim);
        match self.family {
            KernelFamily::SquaredExponential => 1.0 / theta.sqrt(),
            KernelFamily::Matern32 => 1.0 / (SQRT3 * theta),
        }
    }
}
