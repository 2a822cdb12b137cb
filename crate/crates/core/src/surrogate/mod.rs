//! Tensor-product kernel surrogates and their fitting.

mod fit;
mod model;
mod simplex;

pub use fit::{
    fit, fit_with_kernel, log_marginal_likelihood, FitConfig, FitMode, FitResult, HyperSearch, StartOutcome,
    ThetaSharing, MAX_RELATIVE_JITTER, SHARED_THETA_DIM,
};
pub use model::AffineTensorSurrogate;
