//! Superoperators on d×d matrices, their Choi form, and the shared numerics
//! every other crate in the workspace builds on.
//!
//! Index convention: a d²-vector is indexed by `(i,j) ↦ i·d + j`, the
//! row-major vectorization of a d×d operator.

pub mod error;
pub mod io;
pub mod linalg;
pub mod omega;
pub mod random;
pub mod superop;
pub mod tol;

pub use error::{CoreError, Result};
pub use io::MatrixDoc;
pub use linalg::{c64, CMat};
pub use omega::OmegaData;
pub use random::random_channel;
pub use superop::{
    flip_operator, flip_vector, gamma_involution, is_cpt, is_hermiticity_preserving, ChoiMatrix, CptReport, SuperOp,
};
pub use tol::Tolerances;
