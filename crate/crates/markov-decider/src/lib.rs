//! Deciding whether a channel, a near-channel map, or a family of snapshots
//! is Markovian, i.e. close to `e^L` for a Lindblad generator `L`.
//!
//! The channel decision takes the principal log and branch matrices, fixes a
//! precision budget `δ̃`, minimizes the ccp violation over integer branches
//! and compares the optimum with thresholds derived from `δ̃`. Markovian
//! verdicts carry a witness generator that is checked before returning.

pub mod bounds;
mod decide;
pub mod minimize;

pub use bounds::{exp_continuity_bound, log_continuity_bound, solve_delta_tilde, Thresholds};
pub use decide::{
    clean_generator, decide_channel, decide_family, decide_map, default_box, default_kappa, DeciderConfig, Verdict,
    VerdictKind,
};
pub use minimize::{integer_minimize, integer_minimize_with, Minimum};

use cpt_project::ProjectError;
use lindblad_check::LindbladError;
use log_branches::LogError;
use superop_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecideError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Log(LogError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    #[error("integer search budget exhausted after {} evaluations (incumbent t = {})", .0.evaluations, .0.t_star)]
    Budget(Box<Minimum>),
    #[error("input is not a channel: {0}")]
    NotChannel(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("witness failed verification: {0}")]
    Unsound(String),
}

impl From<LogError> for DecideError {
    fn from(e: LogError) -> Self {
        match e {
            LogError::Degenerate(msg) => DecideError::DegenerateChannel(msg),
            other => DecideError::Log(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, DecideError>;
