//! Initial and sequential experimental designs. All coordinates here are
//! normalized to the unit hypercube.

mod density;
mod lhs;
mod lola;

pub use density::{density_batch, DENSITY_WEIGHT, POOL_PER_POINT};
pub use lhs::{initial_lhs, min_pairwise_distance, random_lhs};
pub use lola::{lola_nonlinearity, lola_voronoi_batch, voronoi_test_size, voronoi_volumes, Nonlinearity};

use serde::{Deserialize, Serialize};

/// Proposed points are at least this far (Euclidean, normalized) from the
/// design and from each other.
pub const MIN_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScore {
    pub exploration: f64,
    pub exploitation: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignProposal {
    pub points: Vec<Vec<f64>>,
    pub scores: Vec<PointScore>,
    /// Design points whose local linear fit was rank deficient and were scored
    /// on Voronoi volume alone.
    pub degenerate_neighborhoods: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequentialDesign {
    LolaVoronoi,
    Density,
}

impl std::str::FromStr for SequentialDesign {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lola-voronoi" | "lola" | "lola_voronoi" => Ok(SequentialDesign::LolaVoronoi),
            "density" => Ok(SequentialDesign::Density),
            other => Err(crate::Error::Config(format!("unknown sequential design {:?}", other))),
        }
    }
}

impl std::fmt::Display for SequentialDesign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SequentialDesign::LolaVoronoi => write!(f, "lola-voronoi"),
            SequentialDesign::Density => write!(f, "density"),
        }
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn far_enough(p: &[f64], others: &[Vec<f64>]) -> bool {
    others.iter().all(|o| sq_dist(p, o) >= MIN_SEPARATION * MIN_SEPARATION)
}
