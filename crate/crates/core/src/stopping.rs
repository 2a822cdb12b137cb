//! Model-accuracy measures and the fold-variance stopping criteria.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, FactorIntegralTable};
use crate::domain::{DesignData, SensitivityReport};
use crate::kernels::KernelSpec;
use crate::surrogate::{self, FitConfig, FitMode};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndexFamily {
    SobolMain,
    SobolTotal,
    Dgsm,
    /// DGSM rescaled to unit sum within each fold.
    DgsmNormalized,
}

impl IndexFamily {
    pub const ALL: [IndexFamily; 4] = [
        IndexFamily::SobolMain,
        IndexFamily::SobolTotal,
        IndexFamily::Dgsm,
        IndexFamily::DgsmNormalized,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IndexFamily::SobolMain => "sobol-main",
            IndexFamily::SobolTotal => "sobol-total",
            IndexFamily::Dgsm => "dgsm",
            IndexFamily::DgsmNormalized => "dgsm-normalized",
        }
    }
}

impl std::fmt::Display for IndexFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for IndexFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndexFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown index family {:?}", s)))
    }
}

fn check_pairs(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), got: yhat.len() });
    }
    if y.len() < 2 {
        return Err(Error::TooFewSamples { required: 2, got: y.len() });
    }
    Ok(y.iter().sum::<f64>() / y.len() as f64)
}

/// Root relative squared error: `sqrt(sum (y - ŷ)^2 / sum (y - ȳ)^2)`.
pub fn rrse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    let mean = check_pairs(y, yhat)?;
    let den: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if den == 0.0 {
        return Err(Error::Degenerate("RRSE is undefined for constant responses".into()));
    }
    let num: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beeq {
    pub value: f64,
    /// Terms skipped because `y_i` equals the mean.
    pub dropped: usize,
}

/// Geometric mean of `|y_i - ŷ_i| / |y_i - ȳ|`, computed in log space.
/// Exact predictions give 0.
pub fn beeq(y: &[f64], yhat: &[f64]) -> Result<Beeq> {
    let mean = check_pairs(y, yhat)?;
    let mut log_sum = 0.0;
    let mut used = 0usize;
    let mut dropped = 0usize;
    for (a, b) in y.iter().zip(yhat) {
        let den = (a - mean).abs();
        if den == 0.0 {
            dropped += 1;
            continue;
        }
        let num = (a - b).abs();
        if num == 0.0 {
            return Ok(Beeq { value: 0.0, dropped });
        }
        log_sum += (num / den).ln();
        used += 1;
    }
    if dropped > 0 {
        log::warn!("BEEQ: dropped {} terms with y equal to the mean", dropped);
    }
    if used == 0 {
        return Err(Error::Degenerate("BEEQ has no usable terms".into()));
    }
    Ok(Beeq { value: (log_sum / used as f64).exp(), dropped })
}

/// Splits `0..n` into `k` folds after a seeded shuffle. Fold sizes differ by
/// at most one; each fold is sorted.
pub fn fold_partition(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = crate::rng::seeded(seed);
    idx.shuffle(&mut rng);
    let mut folds: Vec<Vec<usize>> = (0..k).map(|f| idx.iter().skip(f).step_by(k).copied().collect()).collect();
    folds.iter_mut().for_each(|f| f.sort_unstable());
    folds
}

/// `v / sum(v)`; zero vector stays zero.
pub fn l1_normalized(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().map(|x| x.abs()).sum();
    if s == 0.0 {
        return v.to_vec();
    }
    v.iter().map(|x| x / s).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldCriteria {
    /// Population variance across folds, per dimension.
    pub variances: Vec<f64>,
    /// `sum_i Var_i / d`
    pub mean: f64,
    /// `max_i Var_i / d`, with the division by `d` kept as in the criterion's
    /// definition.
    pub max: f64,
    /// `max_i Var_i`
    pub max_undivided: f64,
}

/// Mean and Max criteria of a `k x d` matrix of fold-wise indices.
pub fn fold_criteria(fold_indices: &[Vec<f64>]) -> Result<FoldCriteria> {
    let k = fold_indices.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {}", k)));
    }
    let d = fold_indices[0].len();
    if d == 0 || fold_indices.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument("fold index rows must share a non-zero length".into()));
    }
    let kf = k as f64;
    let variances: Vec<f64> = (0..d)
        .map(|i| {
            let m = fold_indices.iter().map(|r| r[i]).sum::<f64>() / kf;
            fold_indices.iter().map(|r| (r[i] - m).powi(2)).sum::<f64>() / kf
        })
        .collect();
    let df = d as f64;
    let mean = variances.iter().sum::<f64>() / df;
    let max_undivided = variances.iter().copied().fold(0.0, f64::max);
    Ok(FoldCriteria { variances, mean, max: max_undivided / df, max_undivided })
}

/// How fold surrogates obtain their hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum FoldHyperparameters {
    /// Reuse a fixed kernel (normally the full-data optimum) and refit only
    /// the weights. Lets fold tables be cut out of the full table.
    Fixed { kernel: KernelSpec, mode: FitMode, jitter_floor: f64 },
    /// Full hyperparameter search on every fold.
    Refit(FitConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub folds: Vec<Vec<usize>>,
    pub reports: Vec<SensitivityReport>,
    /// Held-out predictions in design order.
    pub predictions: Vec<f64>,
    pub rrse: f64,
    pub beeq: Beeq,
}

impl CrossValidation {
    /// `k x d` fold-wise indices of one family.
    pub fn fold_indices(&self, family: IndexFamily) -> Vec<Vec<f64>> {
        self.reports.iter().map(|r| r.family(family)).collect()
    }

    pub fn criteria(&self, family: IndexFamily) -> Result<FoldCriteria> {
        fold_criteria(&self.fold_indices(family))
    }
}

/// Fits one surrogate per leave-one-fold-out subset and computes its
/// indices analytically, plus the held-out RRSE and BEEQ.
///
/// `full_table`, when given with fixed hyperparameters, must be the table of
/// the full design's points under that kernel (centers in design order).
pub fn cross_validate(
    data: &DesignData,
    hyper: &FoldHyperparameters,
    k: usize,
    seed: u64,
    quad_order: usize,
    full_table: Option<&FactorIntegralTable>,
) -> Result<CrossValidation> {
    let n = data.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {}", k)));
    }
    if n < 2 * k {
        return Err(Error::TooFewSamples { required: 2 * k, got: n });
    }
    let folds = fold_partition(n, k, seed);
    let mut predictions = vec![0.0; n];
    let mut reports = Vec::with_capacity(k);
    for (f, fold) in folds.iter().enumerate() {
        let wrap = |e: Error| Error::FoldFit { fold: f, source: Box::new(e) };
        let train: Vec<usize> = (0..n).filter(|i| fold.binary_search(i).is_err()).collect();
        let sub = data.select(&train);
        let (model, table) = match hyper {
            FoldHyperparameters::Fixed { kernel, mode, jitter_floor } => {
                let model = surrogate::fit_with_kernel(&sub, kernel, *mode, *jitter_floor).map_err(wrap)?.model;
                let table = match full_table {
                    Some(t) if t.len() == n => t.restrict(&train),
                    _ => analytic::build_integral_table(&model, quad_order, true).map_err(wrap)?,
                };
                (model, table)
            }
            FoldHyperparameters::Refit(config) => {
                let model = surrogate::fit(&sub, config).map_err(wrap)?.model;
                let table = analytic::build_integral_table(&model, quad_order, true).map_err(wrap)?;
                (model, table)
            }
        };
        for &i in fold {
            predictions[i] = model.predict(&data.unit_points()[i]);
        }
        reports.push(analytic::analyze(&model, &table, &[]).map_err(wrap)?);
    }
    let y = data.responses();
    Ok(CrossValidation {
        rrse: rrse(y, &predictions)?,
        beeq: beeq(y, &predictions)?,
        folds,
        reports,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexCv {
    pub fold_indices: Vec<Vec<f64>>,
    pub criteria: FoldCriteria,
}

/// Fold-variance criterion of one index family.
pub fn index_cv(
    data: &DesignData,
    hyper: &FoldHyperparameters,
    k: usize,
    family: IndexFamily,
    seed: u64,
) -> Result<IndexCv> {
    let cv = cross_validate(data, hyper, k, seed, analytic::DEFAULT_QUAD_ORDER, None)?;
    let fold_indices = cv.fold_indices(family);
    let criteria = fold_criteria(&fold_indices)?;
    Ok(IndexCv { fold_indices, criteria })
}
