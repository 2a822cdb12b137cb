use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::AffineTensorSurrogate;
use super::simplex;
use crate::domain::DesignData;
use crate::kernels::{KernelFamily, KernelSpec, Lengthscales};
use crate::linalg;
use crate::stopping::{fold_partition, rrse};
use crate::{Error, Result};

/// At this input dimension and above, `ThetaSharing::Auto` trains a single
/// shared lengthscale instead of one per dimension.
pub const SHARED_THETA_DIM: usize = 20;

/// Largest relative jitter tried before giving up on a factorization.
pub const MAX_RELATIVE_JITTER: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitMode {
    /// Kriging: GLS constant mean, interpolating weights, lengthscales by
    /// maximum profiled likelihood.
    Interpolating,
    /// LS-SVM style ridge fit `(K + I/gamma) w = y - mean(y)`. With `gamma`
    /// unset, gamma and a shared theta are picked on a 7x7 log grid by 10-fold
    /// RRSE.
    Regularized { gamma: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaSharing {
    /// ARD below [`SHARED_THETA_DIM`] inputs, shared at or above it. The
    /// regularized mode always uses a shared theta.
    Auto,
    PerDimension,
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperSearch {
    pub starts: usize,
    pub max_evals: usize,
    pub log10_theta_min: f64,
    pub log10_theta_max: f64,
    pub seed: u64,
    /// Thetas (one per dimension, or a single value) used as the first start.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for HyperSearch {
    fn default() -> Self {
        HyperSearch {
            starts: 8,
            max_evals: 200,
            log10_theta_min: -2.0,
            log10_theta_max: 3.0,
            seed: 0,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub family: KernelFamily,
    pub mode: FitMode,
    pub sharing: ThetaSharing,
    pub search: HyperSearch,
    /// First rung of the jitter ladder, relative to `trace(K)/N`.
    pub jitter_floor: f64,
}

impl FitConfig {
    pub fn kriging(family: KernelFamily) -> Self {
        FitConfig {
            family,
            mode: FitMode::Interpolating,
            sharing: ThetaSharing::Auto,
            search: HyperSearch::default(),
            jitter_floor: 1e-10,
        }
    }

    pub fn ls_svm() -> Self {
        FitConfig {
            family: KernelFamily::SquaredExponential,
            mode: FitMode::Regularized { gamma: None },
            sharing: ThetaSharing::Shared,
            search: HyperSearch::default(),
            jitter_floor: 1e-10,
        }
    }

    fn uses_shared_theta(&self, d: usize) -> bool {
        match self.sharing {
            ThetaSharing::PerDimension => false,
            ThetaSharing::Shared => true,
            ThetaSharing::Auto => {
                matches!(self.mode, FitMode::Regularized { .. }) || d >= SHARED_THETA_DIM
            }
        }
    }
}

/// Outcome of one local search in the hyperparameter optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: Vec<f64>,
    pub theta: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: AffineTensorSurrogate,
    /// Log marginal likelihood (interpolating) or cross-validated RRSE
    /// (regularized). NaN for constant data.
    pub objective: f64,
    /// Absolute jitter added to the diagonal.
    pub jitter: f64,
    pub gamma: Option<f64>,
    pub evaluations: usize,
    pub starts: Vec<StartOutcome>,
}

/// Fits a surrogate to `data`, selecting hyperparameters as configured.
pub fn fit(data: &DesignData, config: &FitConfig) -> Result<FitResult> {
    let d = data.dim();
    let n = data.len();
    if n < d + 2 {
        return Err(Error::TooFewSamples { required: d + 2, got: n });
    }
    let shared = config.uses_shared_theta(d);
    if is_constant(data.responses()) {
        let kernel = if shared {
            KernelSpec::shared(config.family, 1.0)?
        } else {
            KernelSpec::ard(config.family, vec![1.0; d])?
        };
        return constant_fit(data, kernel);
    }
    match config.mode {
        FitMode::Interpolating => fit_max_likelihood(data, config, shared),
        FitMode::Regularized { gamma } => fit_regularized_grid(data, config, shared, gamma),
    }
}

/// Fits the weights for fixed hyperparameters. `Regularized` needs an
/// explicit gamma here.
pub fn fit_with_kernel(
    data: &DesignData,
    kernel: &KernelSpec,
    mode: FitMode,
    jitter_floor: f64,
) -> Result<FitResult> {
    let d = data.dim();
    let n = data.len();
    if n < d + 2 {
        return Err(Error::TooFewSamples { required: d + 2, got: n });
    }
    kernel.validate_dim(d)?;
    if is_constant(data.responses()) {
        return constant_fit(data, kernel.clone());
    }
    let points = data.unit_points();
    let k = correlation_matrix(points, kernel);
    match mode {
        FitMode::Interpolating => {
            let sol = kriging_solve(&k, n, data.responses(), jitter_floor)?;
            let model = AffineTensorSurrogate::new(sol.offset, sol.weights, points.to_vec(), kernel.clone())?;
            Ok(FitResult {
                model,
                objective: sol.log_likelihood,
                jitter: sol.jitter,
                gamma: None,
                evaluations: 1,
                starts: Vec::new(),
            })
        }
        FitMode::Regularized { gamma } => {
            let gamma = gamma.ok_or_else(|| {
                Error::InvalidArgument("fit_with_kernel needs an explicit gamma in regularized mode".into())
            })?;
            let (offset, weights, jitter) = ridge_solve(k, n, data.responses(), gamma, jitter_floor)?;
            let model = AffineTensorSurrogate::new(offset, weights, points.to_vec(), kernel.clone())?;
            Ok(FitResult {
                model,
                objective: f64::NAN,
                jitter,
                gamma: Some(gamma),
                evaluations: 1,
                starts: Vec::new(),
            })
        }
    }
}

/// Profiled log marginal likelihood of the responses under a zero-noise
/// Gaussian process with constant GLS mean and the given correlation kernel;
/// the process variance is replaced by its maximum-likelihood estimate.
pub fn log_marginal_likelihood(data: &DesignData, kernel: &KernelSpec) -> Result<f64> {
    kernel.validate_dim(data.dim())?;
    let n = data.len();
    let k = correlation_matrix(data.unit_points(), kernel);
    Ok(kriging_solve(&k, n, data.responses(), 1e-10)?.log_likelihood)
}

fn is_constant(y: &[f64]) -> bool {
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    hi - lo <= 1e-12 * scale
}

fn constant_fit(data: &DesignData, kernel: KernelSpec) -> Result<FitResult> {
    let y = data.responses();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let model = AffineTensorSurrogate::new(mean, vec![0.0; y.len()], data.unit_points().to_vec(), kernel)?;
    Ok(FitResult {
        model,
        objective: f64::NAN,
        jitter: 0.0,
        gamma: None,
        evaluations: 0,
        starts: Vec::new(),
    })
}

/// Row-major correlation matrix with unit diagonal.
pub(crate) fn correlation_matrix(points: &[Vec<f64>], kernel: &KernelSpec) -> Vec<f64> {
    let n = points.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = kernel.eval(&points[i], &points[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Cholesky of `K + eps I` climbing the jitter ladder.
fn factorize_with_jitter(k: &[f64], n: usize, floor: f64) -> Result<(Vec<f64>, f64)> {
    let scale = (0..n).map(|i| k[i * n + i]).sum::<f64>() / n as f64;
    let mut rel = floor;
    loop {
        let eps = rel * scale;
        let mut a = k.to_vec();
        for i in 0..n {
            a[i * n + i] += eps;
        }
        if linalg::cholesky_in_place(&mut a, n) {
            return Ok((a, eps));
        }
        if rel >= MAX_RELATIVE_JITTER * (1.0 - 1e-9) {
            return Err(Error::SingularKernel { jitter: eps });
        }
        rel = (rel * 10.0).min(MAX_RELATIVE_JITTER);
    }
}

struct KrigingSolution {
    offset: f64,
    weights: Vec<f64>,
    log_likelihood: f64,
    jitter: f64,
}

fn kriging_solve(k: &[f64], n: usize, y: &[f64], floor: f64) -> Result<KrigingSolution> {
    let (l, jitter) = factorize_with_jitter(k, n, floor)?;
    let mut v1 = vec![1.0; n];
    linalg::forward_substitute(&l, n, &mut v1);
    let mut vy = y.to_vec();
    linalg::forward_substitute(&l, n, &mut vy);
    let offset = linalg::dot(&v1, &vy) / linalg::dot(&v1, &v1);
    let mut r: Vec<f64> = vy.iter().zip(&v1).map(|(a, b)| a - offset * b).collect();
    let sigma2 = (linalg::dot(&r, &r) / n as f64).max(f64::MIN_POSITIVE);
    let nf = n as f64;
    let log_likelihood = -0.5 * nf * sigma2.ln()
        - linalg::half_log_det(&l, n)
        - 0.5 * nf * (1.0 + (2.0 * std::f64::consts::PI).ln());
    linalg::backward_substitute(&l, n, &mut r);
    Ok(KrigingSolution { offset, weights: r, log_likelihood, jitter })
}

fn ridge_solve(mut k: Vec<f64>, n: usize, y: &[f64], gamma: f64, floor: f64) -> Result<(f64, Vec<f64>, f64)> {
    for i in 0..n {
        k[i * n + i] += 1.0 / gamma;
    }
    let (l, jitter) = factorize_with_jitter(&k, n, floor)?;
    let offset = y.iter().sum::<f64>() / n as f64;
    let mut w: Vec<f64> = y.iter().map(|v| v - offset).collect();
    linalg::forward_substitute(&l, n, &mut w);
    linalg::backward_substitute(&l, n, &mut w);
    Ok((offset, w, jitter))
}

fn kernel_from_log10(family: KernelFamily, shared: bool, x: &[f64]) -> KernelSpec {
    let thetas: Vec<f64> = x.iter().map(|v| 10f64.powf(*v)).collect();
    let lengthscales = if shared { Lengthscales::Shared(thetas[0]) } else { Lengthscales::Ard(thetas) };
    KernelSpec { family, lengthscales }
}

fn fit_max_likelihood(data: &DesignData, config: &FitConfig, shared: bool) -> Result<FitResult> {
    let d = data.dim();
    let n = data.len();
    let p = if shared { 1 } else { d };
    let search = &config.search;
    let (lo, hi) = (search.log10_theta_min, search.log10_theta_max);
    let mut rng = crate::rng::seeded(search.seed);

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(w) = &search.warm_start {
        let mut s: Vec<f64> = w.iter().map(|t| t.max(f64::MIN_POSITIVE).log10().clamp(lo, hi)).collect();
        if shared && s.len() > 1 {
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            s = vec![mean];
        }
        if s.len() == p {
            starts.push(s);
        }
    }
    while starts.len() < search.starts.max(1) {
        starts.push((0..p).map(|_| rng.gen_range(lo..=hi)).collect());
    }

    let points = data.unit_points();
    let y = data.responses();
    let objective = |x: &[f64]| -> f64 {
        let kernel = kernel_from_log10(config.family, shared, x);
        let k = correlation_matrix(points, &kernel);
        match kriging_solve(&k, n, y, config.jitter_floor) {
            Ok(sol) if sol.log_likelihood.is_finite() => -sol.log_likelihood,
            _ => f64::INFINITY,
        }
    };

    let mut outcomes = Vec::with_capacity(starts.len());
    let mut evaluations = 0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let r = simplex::minimize(objective, s, 0.5, lo, hi, search.max_evals);
        evaluations += r.evaluations;
        outcomes.push(StartOutcome {
            start: s.iter().map(|v| 10f64.powf(*v)).collect(),
            theta: r.x.iter().map(|v| 10f64.powf(*v)).collect(),
            objective: -r.value,
        });
        if best.as_ref().map_or(true, |(_, v)| r.value < *v) {
            best = Some((r.x, r.value));
        }
    }
    let (x, value) = best.expect("at least one start");
    if !value.is_finite() {
        return Err(Error::SingularKernel {
            jitter: MAX_RELATIVE_JITTER,
        });
    }
    let kernel = kernel_from_log10(config.family, shared, &x);
    let mut result = fit_with_kernel(data, &kernel, FitMode::Interpolating, config.jitter_floor)?;
    result.evaluations = evaluations;
    result.starts = outcomes;
    Ok(result)
}

const GRID_POINTS: usize = 7;
const CV_FOLDS: usize = 10;

fn log_grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64))
        .collect()
}

/// Held-out RRSE of a ridge fit with fixed `(kernel, gamma)`.
fn ridge_cv_rrse(data: &DesignData, kernel: &KernelSpec, gamma: f64, folds: &[Vec<usize>], floor: f64) -> f64 {
    let n = data.len();
    let mut predicted = vec![0.0; n];
    for fold in folds {
        let train: Vec<usize> = (0..n).filter(|i| !fold.contains(i)).collect();
        let sub = data.select(&train);
        let k = correlation_matrix(sub.unit_points(), kernel);
        let Ok((offset, w, _)) = ridge_solve(k, train.len(), sub.responses(), gamma, floor) else {
            return f64::INFINITY;
        };
        for &i in fold {
            let u = &data.unit_points()[i];
            predicted[i] = offset
                + w.iter()
                    .zip(sub.unit_points())
                    .map(|(wi, c)| wi * kernel.eval(c, u))
                    .sum::<f64>();
        }
    }
    rrse(data.responses(), &predicted).unwrap_or(f64::INFINITY)
}

fn fit_regularized_grid(
    data: &DesignData,
    config: &FitConfig,
    shared: bool,
    gamma: Option<f64>,
) -> Result<FitResult> {
    let d = data.dim();
    let n = data.len();
    let k = CV_FOLDS.min(n);
    let folds = fold_partition(n, k, config.search.seed);
    let thetas = log_grid(config.search.log10_theta_min, config.search.log10_theta_max);
    let gammas = match gamma {
        Some(g) => vec![g],
        None => log_grid(0.0, 6.0),
    };
    let make_kernel = |t: f64| {
        if shared {
            KernelSpec::shared(config.family, t)
        } else {
            KernelSpec::ard(config.family, vec![t; d])
        }
    };
    let mut best: Option<(f64, f64, f64)> = None;
    let mut evaluations = 0;
    for &t in &thetas {
        let kernel = make_kernel(t)?;
        for &g in &gammas {
            evaluations += 1;
            let score = ridge_cv_rrse(data, &kernel, g, &folds, config.jitter_floor);
            if best.map_or(true, |(_, _, s)| score < s) {
                best = Some((t, g, score));
            }
        }
    }
    let (t, g, score) = best.expect("non-empty grid");
    if !score.is_finite() {
        return Err(Error::SingularKernel { jitter: MAX_RELATIVE_JITTER });
    }
    let kernel = make_kernel(t)?;
    let mut result = fit_with_kernel(data, &kernel, FitMode::Regularized { gamma: Some(g) }, config.jitter_floor)?;
    result.objective = score;
    result.evaluations = evaluations;
    Ok(result)
}
