use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::stopping::IndexFamily;
use crate::{Error, Result};

/// Interaction (ANOVA component) index for an explicitly requested subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetIndex {
    /// Zero-based dimensions.
    pub subset: Vec<usize>,
    pub index: f64,
}

/// Variance- and derivative-based indices of one surrogate.
///
/// DGSM values are with respect to unit-hypercube coordinates. Divide
/// `dgsm[i]` by `dgsm_scale[i]` to obtain the value in original coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub variance: f64,
    pub main: Vec<f64>,
    pub total: Vec<f64>,
    #[serde(default)]
    pub interactions: Vec<SubsetIndex>,
    pub dgsm: Vec<f64>,
    pub dgsm_bound: Vec<f64>,
    pub dgsm_scale: Vec<f64>,
}

impl SensitivityReport {
    pub fn dim(&self) -> usize {
        self.main.len()
    }

    /// Attaches the `(upper - lower)^2` factors of the input box.
    pub fn with_dgsm_scale(mut self, scale: Vec<f64>) -> Self {
        self.dgsm_scale = scale;
        self
    }

    pub fn family(&self, family: IndexFamily) -> Vec<f64> {
        match family {
            IndexFamily::SobolMain => self.main.clone(),
            IndexFamily::SobolTotal => self.total.clone(),
            IndexFamily::Dgsm => self.dgsm.clone(),
            IndexFamily::DgsmNormalized => crate::stopping::l1_normalized(&self.dgsm),
        }
    }
}

/// One pass of the sequential loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub sample_count: usize,
    /// Criterion name to value (`mean`, `max`, `max_undivided`, `rrse`, `beeq`).
    pub criteria: BTreeMap<String, f64>,
    /// `k x d` fold-wise indices for each family.
    pub fold_indices: BTreeMap<IndexFamily, Vec<Vec<f64>>>,
    pub report: SensitivityReport,
    pub lengthscales: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StoppingTrace {
    records: Vec<IterationRecord>,
}

impl StoppingTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: IterationRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.sample_count <= last.sample_count {
                return Err(Error::Consistency(format!(
                    "trace sample count must increase: {} after {}",
                    record.sample_count, last.sample_count
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
