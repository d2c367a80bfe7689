use thiserror::Error;

use crate::dynamics::TrajectoryRecord;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("effective rank undefined for the zero matrix")]
    UndefinedRank,

    #[error("degenerate spectrum: eigengap {gap:e} is zero or below tolerance")]
    DegenerateSpectrum { gap: f64 },

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("no admissible window: {0}")]
    WindowImpossible(String),

    #[error("iteration diverged at k = {iteration}")]
    Divergence {
        iteration: usize,
        /// Records collected before the blow-up.
        partial: Vec<TrajectoryRecord>,
    },
}

impl Error {
    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::OutOfRegime(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
