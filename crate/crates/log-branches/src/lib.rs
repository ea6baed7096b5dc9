//! Logarithms of a channel: spectral data with conjugate-pair bookkeeping,
//! the principal log `L0`, and the branch matrices `A_c` such that every
//! Hermiticity-preserving log is `L0 + Σ m_c A_c` for integers `m_c`.

mod family;
pub mod spectral;

pub use family::{
    branch_family, branch_generator, branch_matrices, principal_log, verify_lemma3, BranchFamily, Lemma3Report,
    PairInfo,
};
pub use spectral::{spectral, Partner, SpectralData};

use superop_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("degenerate channel: {0}")]
    Degenerate(String),
    #[error("branch cut: {0}")]
    BranchCut(String),
    #[error("expected {expected} branch integers, got {got}")]
    Length { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, LogError>;
