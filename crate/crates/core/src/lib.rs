//! Global sensitivity analysis of expensive black-box functions through
//! sequentially refined tensor-product kernel surrogates.
//!
//! The pipeline grows a design with a sequential sampling strategy, fits a
//! Kriging (or LS-SVM style) surrogate with a separable kernel, and extracts
//! Sobol indices and derivative-based measures (DGSM) from the surrogate in
//! closed form via one-dimensional factor integrals. Sampling stops when the
//! variance of the indices across cross-validation folds drops below a
//! user-supplied threshold.
//!
//! Module map:
//! - [`domain`]: input spaces, design data, reports and traces.
//! - [`kernels`]: separable squared-exponential and Matérn 3/2 factors.
//! - [`quadrature`]: Gauss–Legendre rules.
//! - [`surrogate`]: fitting and evaluating [`surrogate::AffineTensorSurrogate`].
//! - [`analytic`]: closed-form Sobol and DGSM indices.
//! - [`mc_oracle`]: Monte-Carlo estimators used for verification.
//! - [`design`]: Latin hypercube, LOLA-Voronoi and density-based designs.
//! - [`stopping`]: RRSE, BEEQ and fold-variance stopping criteria.
//! - [`benchmarks`]: Ishigami, G-function and Moon test functions.
//! - [`workflow`]: the sequential loop, simulators, config and output files.

pub mod analytic;
pub mod benchmarks;
pub mod design;
pub mod domain;
pub mod error;
pub mod kernels;
mod linalg;
pub mod mc_oracle;
pub mod quadrature;
pub mod rng;
pub mod stopping;
pub mod surrogate;
pub mod workflow;

pub use error::{Error, Result};
