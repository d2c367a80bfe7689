//! Experiment harness: synthesizes targets from a JSON config, runs the
//! noiseless and noisy simulations, evaluates every window and stability
//! bound, and writes CSV tables, SVG figures and JSON reports.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod runs;
pub mod svg;

use thiserror::Error;

pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("divergence at sweep point {point}: iteration {iteration}")]
    Divergence { point: String, iteration: usize },

    #[error("I/O error: {0}")]
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::OutOfRegime(_) => 3,
            AppError::Divergence { .. } => 4,
            AppError::Io(_) => 5,
        }
    }

    /// Maps a core error raised while processing `point`.
    pub fn from_core(point: &str, e: irlab_core::Error) -> Self {
        use irlab_core::Error as E;
        match e {
            E::Divergence { iteration, .. } => AppError::Divergence { point: point.to_string(), iteration },
            E::InvalidInput(m) => AppError::Config(format!("{point}: {m}")),
            other => AppError::OutOfRegime(format!("{point}: {other}")),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}
