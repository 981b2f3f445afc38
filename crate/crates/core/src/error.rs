//! Error type shared by every stage of the engine.

use thiserror::Error;

use crate::atlas::ChartId;
use crate::principalize::GuardTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("the zero ideal is not representable")]
    ZeroIdeal,

    #[error("arity mismatch: expected {expected}, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("exponent {value} exceeds the configured cap {cap}")]
    ExponentOverflow { value: u64, cap: u64 },

    #[error("chart {0} is not a leaf")]
    NotLeaf(ChartId),

    #[error("invalid center {center:?} on chart {chart}: {reason}")]
    InvalidCenter {
        chart: ChartId,
        center: Vec<usize>,
        reason: &'static str,
    },

    #[error("chart {0} does not exist")]
    ChartNotFound(ChartId),

    #[error("inconsistent group action: {0}")]
    InconsistentAction(String),

    #[error(
        "collection is not invariant: element {element} sends item {index} outside the collection"
    )]
    NotInvariant { element: usize, index: usize },

    #[error("equivariance broken at step {step}: {reason}")]
    EquivarianceBroken { step: usize, reason: String },

    #[error("every leaf is already locally principal")]
    NothingToDo,

    #[error("termination guard tripped: {} steps spent below chart {} (limit {})", .0.steps_taken, .0.section, .0.max_steps)]
    TerminationGuard(Box<GuardTrace>),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("stage invariant failed at depth {depth} on chart {chart}: subset {subset:?} does not sum to the unit ideal")]
    StageInvariant {
        depth: usize,
        chart: ChartId,
        subset: Vec<usize>,
    },

    #[error("report was produced for a different input (hash {found}, expected {expected})")]
    StaleReport { expected: String, found: String },
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::TerminationGuard(_) => 2,
            Error::NotInvariant { .. }
            | Error::InconsistentAction(_)
            | Error::EquivarianceBroken { .. } => 3,
            _ => 1,
        }
    }
}
