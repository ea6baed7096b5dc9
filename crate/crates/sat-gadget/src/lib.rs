//! Compiles 1-in-3SAT instances into Lindblad-generator instances
//! `(L0, {A_c}, δ)` and verifies them against brute force.
//!
//! The generator has the special form `L0 ≅ Q ⊕ diag P`: `Q` lives on the
//! positions `|i,i⟩⟨j,j|`, `P` on `|i,j⟩⟨i,j|` (i ≠ j), and `A_c ≅ 2πB^c ⊕ 0`.
//! `Q` is a block matrix over `n` slots of size 4 (index `4l + 2x + y`), built
//! so that the Q-matrix conditions on its off-diagonal entries at the
//! "encoding" positions are exactly the clause and boolean inequalities of
//! the instance, while every other entry stays slack.
//!
//! Internally every design quantity is expressed in encoding units, where the
//! clause and boolean constants are the familiar small fractions; the stored
//! matrices are scaled by `scale = π/N` so that each `A_c` has eigenvalues
//! `±2πi`.

pub mod construct;
pub mod delta;
pub mod instance;
pub mod output;
pub mod verify;

pub use construct::{
    build_clause_vectors, build_p, build_s_and_sigma, compile, compile_with_options, ClauseVectors, CompileOptions,
    SlotKind,
};
pub use delta::{compute_delta, DeltaReport};
pub use instance::SatInstance;
pub use output::{GadgetOutput, Provenance};
pub use verify::{
    encoding_feasible_assignments, feasible_assignments, verify_gadget, DecisionOutcome, GadgetReport, VerifyOptions,
};

#[derive(Debug, thiserror::Error)]
pub enum GadgetError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error(transparent)]
    Core(#[from] superop_core::CoreError),
    #[error(transparent)]
    Log(#[from] log_branches::LogError),
}

pub type Result<T> = std::result::Result<T, GadgetError>;
