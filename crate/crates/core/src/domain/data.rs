use serde::{Deserialize, Serialize};

use super::InputSpace;
use crate::{Error, Result};

/// Two points closer than this in max-norm (normalized coordinates) are the
/// same point.
pub const DUPLICATE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Initial,
    /// Added by sequential batch `k` (1-based).
    Sequential(usize),
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Initial => write!(f, "initial"),
            Provenance::Sequential(k) => write!(f, "batch-{}", k),
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "initial" {
            return Ok(Provenance::Initial);
        }
        s.strip_prefix("batch-")
            .and_then(|k| k.parse().ok())
            .map(Provenance::Sequential)
            .ok_or_else(|| Error::InvalidData(format!("unknown provenance {:?}", s)))
    }
}

/// Evaluated samples. Points are kept in original coordinates together with
/// their unit-hypercube images.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignData {
    space: InputSpace,
    points: Vec<Vec<f64>>,
    unit: Vec<Vec<f64>>,
    responses: Vec<f64>,
    provenance: Vec<Provenance>,
}

impl DesignData {
    pub fn empty(space: InputSpace) -> Self {
        DesignData {
            space,
            points: Vec::new(),
            unit: Vec::new(),
            responses: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn new(
        space: InputSpace,
        points: Vec<Vec<f64>>,
        responses: Vec<f64>,
        provenance: Vec<Provenance>,
    ) -> Result<Self> {
        Self::empty(space).extended(points, responses, provenance)
    }

    /// Points given in unit-hypercube coordinates, all marked initial.
    pub fn from_unit(space: InputSpace, unit: Vec<Vec<f64>>, responses: Vec<f64>) -> Result<Self> {
        let points = unit
            .iter()
            .map(|u| space.denormalize(u))
            .collect::<Result<Vec<_>>>()?;
        let n = points.len();
        Self::new(space, points, responses, vec![Provenance::Initial; n])
    }

    /// A new value with extra samples appended; the invariants are checked
    /// against the existing points as well as within the batch.
    pub fn extended(
        &self,
        points: Vec<Vec<f64>>,
        responses: Vec<f64>,
        provenance: Vec<Provenance>,
    ) -> Result<Self> {
        if points.len() != responses.len() || points.len() != provenance.len() {
            return Err(Error::InvalidData(format!(
                "{} points, {} responses, {} provenance tags",
                points.len(),
                responses.len(),
                provenance.len()
            )));
        }
        let mut out = self.clone();
        for ((x, y), p) in points.into_iter().zip(responses).zip(provenance) {
            if !y.is_finite() {
                return Err(Error::InvalidData(format!("non-finite response {} at {:?}", y, x)));
            }
            let u = self.space.normalize(&x)?;
            if let Some(j) = out.unit.iter().position(|o| is_duplicate(o, &u)) {
                return Err(Error::InvalidData(format!(
                    "point {:?} duplicates existing point {} ({:?})",
                    x, j, out.points[j]
                )));
            }
            out.points.push(x);
            out.unit.push(u);
            out.responses.push(y);
            out.provenance.push(p);
        }
        Ok(out)
    }

    /// Subset by row indices, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        DesignData {
            space: self.space.clone(),
            points: rows.iter().map(|&r| self.points[r].clone()).collect(),
            unit: rows.iter().map(|&r| self.unit[r].clone()).collect(),
            responses: rows.iter().map(|&r| self.responses[r]).collect(),
            provenance: rows.iter().map(|&r| self.provenance[r]).collect(),
        }
    }

    /// Same points with responses replaced.
    pub fn with_responses(&self, responses: Vec<f64>) -> Result<Self> {
        if responses.len() != self.len() {
            return Err(Error::InvalidData(format!(
                "expected {} responses, got {}",
                self.len(),
                responses.len()
            )));
        }
        let mut out = self.clone();
        out.responses = responses;
        Ok(out)
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn unit_points(&self) -> &[Vec<f64>] {
        &self.unit
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// True when `u` (normalized) coincides with a design point.
    pub fn contains_unit(&self, u: &[f64]) -> bool {
        self.unit.iter().any(|o| is_duplicate(o, u))
    }
}

pub(crate) fn is_duplicate(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < DUPLICATE_TOLERANCE)
}
