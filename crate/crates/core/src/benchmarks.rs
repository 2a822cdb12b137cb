//! Analytic test functions with exact gradients.

use std::f64::consts::PI;

use crate::domain::InputSpace;
use crate::{Error, Result};

pub trait Benchmark: Send + Sync {
    fn name(&self) -> &'static str;

    fn space(&self) -> InputSpace;

    /// Value at `x` in original coordinates.
    fn value(&self, x: &[f64]) -> f64;

    /// Gradient with respect to original coordinates.
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    fn dim(&self) -> usize {
        self.space().dim()
    }
}

/// `sin x1 + 7 sin^2 x2 + 0.1 x3^4 sin x1` on `[-pi, pi]^3`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Ishigami;

impl Ishigami {
    pub const A: f64 = 7.0;
    pub const B: f64 = 0.1;

    /// `a^2/8 + b pi^4/5 + b^2 pi^8/18 + 1/2`
    pub fn variance() -> f64 {
        Self::A * Self::A / 8.0 + Self::B * PI.powi(4) / 5.0 + Self::B * Self::B * PI.powi(8) / 18.0 + 0.5
    }

    pub const MAIN: [f64; 3] = [0.3139, 0.4424, 0.0];
    pub const TOTAL: [f64; 3] = [0.5576, 0.4424, 0.2437];
    /// Unit-hypercube DGSM.
    pub const DGSM: [f64; 3] = [304.8, 967.2, 433.8];
}

impl Benchmark for Ishigami {
    fn name(&self) -> &'static str {
        "ishigami"
    }

    fn space(&self) -> InputSpace {
        InputSpace::uniform_box(3, -PI, PI).expect("valid box")
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s2 = x[1].sin();
        x[0].sin() * (1.0 + Self::B * x[2].powi(4)) + Self::A * s2 * s2
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![
            x[0].cos() * (1.0 + Self::B * x[2].powi(4)),
            2.0 * Self::A * x[1].sin() * x[1].cos(),
            4.0 * Self::B * x[2].powi(3) * x[0].sin(),
        ]
    }
}

/// `prod_i (|4 x_i - 2| + a_i) / (1 + a_i)` with `a_i = (i - 2)/2`, i.e.
/// `a = (-0.5, 0, 0.5)`, on `[0,1]^3`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GFunction;

impl GFunction {
    pub const A: [f64; 3] = [-0.5, 0.0, 0.5];

    fn factor(i: usize, x: f64) -> f64 {
        ((4.0 * x - 2.0).abs() + Self::A[i]) / (1.0 + Self::A[i])
    }

    /// Right-sided derivative at the kink `x = 0.5`.
    fn factor_derivative(i: usize, x: f64) -> f64 {
        let s = if x >= 0.5 { 4.0 } else { -4.0 };
        s / (1.0 + Self::A[i])
    }
}

impl Benchmark for GFunction {
    fn name(&self) -> &'static str {
        "g-function"
    }

    fn space(&self) -> InputSpace {
        InputSpace::unit(3).expect("valid box")
    }

    fn value(&self, x: &[f64]) -> f64 {
        (0..3).map(|i| Self::factor(i, x[i])).product()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..3)
            .map(|i| {
                let others: f64 = (0..3).filter(|&j| j != i).map(|j| Self::factor(j, x[j])).product();
                Self::factor_derivative(i, x[i]) * others
            })
            .collect()
    }
}

/// Dominant terms of the 20-dimensional Moon function on `[0,1]^20`:
/// `-19.71 x1 x18 + 23.72 x1 x19 - 13.34 x19^2 + 28.99 x7 x12`. The remaining
/// small terms are not included.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moon;

impl Benchmark for Moon {
    fn name(&self) -> &'static str {
        "moon"
    }

    fn space(&self) -> InputSpace {
        InputSpace::unit(20).expect("valid box")
    }

    fn value(&self, x: &[f64]) -> f64 {
        -19.71 * x[0] * x[17] + 23.72 * x[0] * x[18] - 13.34 * x[18] * x[18] + 28.99 * x[6] * x[11]
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; 20];
        g[0] = -19.71 * x[17] + 23.72 * x[18];
        g[17] = -19.71 * x[0];
        g[18] = 23.72 * x[0] - 2.0 * 13.34 * x[18];
        g[6] = 28.99 * x[11];
        g[11] = 28.99 * x[6];
        g
    }
}

/// Looks up a built-in benchmark by name.
pub fn builtin(name: &str) -> Result<Box<dyn Benchmark>> {
    match name.to_ascii_lowercase().as_str() {
        "ishigami" => Ok(Box::new(Ishigami)),
        "g-function" | "gfunction" | "g" => Ok(Box::new(GFunction)),
        "moon" => Ok(Box::new(Moon)),
        other => Err(Error::Config(format!("unknown builtin function {:?}", other))),
    }
}

/// The benchmark as a function of unit-hypercube coordinates.
pub fn on_unit<'a>(b: &'a dyn Benchmark) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    let space = b.space();
    move |u: &[f64]| b.value(&space.denormalize(u).expect("unit point"))
}

/// Gradient with respect to unit-hypercube coordinates.
pub fn gradient_on_unit<'a>(b: &'a dyn Benchmark) -> impl Fn(&[f64]) -> Vec<f64> + Sync + 'a {
    let space = b.space();
    move |u: &[f64]| {
        let x = space.denormalize(u).expect("unit point");
        b.gradient(&x)
            .into_iter()
            .zip(space.dims())
            .map(|(g, d)| g * (d.upper - d.lower))
            .collect()
    }
}
