//! Value types shared across the crate.

mod data;
mod report;
mod space;

pub use data::{DesignData, Provenance, DUPLICATE_TOLERANCE};
pub use report::{IterationRecord, SensitivityReport, StoppingTrace, SubsetIndex};
pub use space::{Dimension, InputSpace};
