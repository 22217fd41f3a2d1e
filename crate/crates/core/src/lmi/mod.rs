//! Symbolic assembly of the observer LMIs as affine functions of the
//! decision matrices.

mod affine;
mod layout;
mod observer;
mod selectors;

pub use affine::{min_eigenvalue, AffineLmi, AffineMatrix, Sign, SparseSym};
pub use layout::{Assignment, DecisionLayout, SlotId, SlotKind, SlotSpec};
pub use observer::{
    assemble_lmi_system, assemble_lmi_system_with_gains, assemble_phi, assemble_phi_vertex,
    evaluate_lmi_system, min_margin, ConstraintMargin, GainMode, LmiSystem, ObserverProblem, Vertex,
    POSITIVITY_SLACK,
};
pub use selectors::{build_interval_blocks, build_selectors, hcat, IntervalBlocks, Selectors, BLOCKS};

#[cfg(test)]
pub(crate) use observer::tests::{example1_problem, example2_problem};

use crate::model::ValidationReport;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LmiError {
    #[error("invalid problem data: {0}")]
    Validation(ValidationReport),
    #[error("assignment dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("decision slot {0} is not part of this layout")]
    MissingSlot(SlotId),
    #[error("unknown decision slot `{0}`")]
    UnknownSlot(String),
    #[error("slot {slot} expects a {}x{} matrix, got {}x{}", expected.0, expected.1, got.0, got.1)]
    SlotShape {
        slot: SlotId,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("gain shapes {got:?} do not match expected {expected:?}")]
    GainShape {
        expected: ((usize, usize), (usize, usize)),
        got: ((usize, usize), (usize, usize)),
    },
    #[error("delay pair ({tau}, {sigma}) is not admissible here")]
    DelayOutOfRange { tau: f64, sigma: f64 },
}
