//! The classical embedding problem: is a stochastic matrix `P` close to
//! `e^Q` for a rate matrix `Q` (off-diagonals ≥ 0, column sums 0)?
//!
//! Columns are the probability vectors, so a stochastic matrix has column
//! sums 1.

mod branches;
mod decide;

pub use branches::{classical_branches, ClassicalBranches};
pub use decide::{decide_embeddable, repair_rates, EmbedKind, EmbedVerdict};

use faer::Mat;
use serde::Serialize;
use superop_core::linalg::{self, c64, CMat};
use superop_core::{CoreError, SuperOp};
use thiserror::Error;

pub type RMat = Mat<f64>;

/// Default entrywise tolerance for stochastic and rate matrices.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("degenerate matrix: {0}")]
    Degenerate(String),
    #[error("branch cut: {0}")]
    BranchCut(String),
    #[error("integer search budget exhausted: box of {points} points exceeds {budget}")]
    Budget { points: f64, budget: usize },
    #[error("witness failed verification: {0}")]
    Unsound(String),
}

pub type Result<T> = std::result::Result<T, EmbedError>;

/// A column-stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    mat: RMat,
}

impl StochasticMatrix {
    /// Checks entries `≥ −tol` and column sums within `tol` of 1.
    pub fn new(mat: RMat, tol: f64) -> Result<Self> {
        let d = mat.nrows();
        if d == 0 || mat.ncols() != d {
            return Err(EmbedError::Invalid(format!("expected a nonempty square matrix, got {}×{}", d, mat.ncols())));
        }
        for j in 0..d {
            let mut sum = 0.0;
            for i in 0..d {
                let x = mat[(i, j)];
                if !x.is_finite() || x < -tol {
                    return Err(EmbedError::Invalid(format!("entry ({i},{j}) = {x} is negative")));
                }
                sum += x;
            }
            if (sum - 1.0).abs() > tol {
                return Err(EmbedError::Invalid(format!("column {j} sums to {sum}")));
            }
        }
        Ok(Self { mat })
    }

    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(EmbedError::Invalid("rows have unequal lengths".into()));
        }
        Self::new(Mat::from_fn(d, d, |i, j| rows[i][j]), tol)
    }

    pub fn d(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &RMat {
        &self.mat
    }

    pub fn det(&self) -> f64 {
        to_complex(&self.mat).determinant().re
    }
}

pub(crate) fn to_complex(a: &RMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

/// `e^{tQ}` of a real matrix.
pub fn expm_real(q: &RMat, t: f64) -> RMat {
    let e = linalg::expm(linalg::scaled(to_complex(q).as_ref(), c64::new(t, 0.0)).as_ref());
    Mat::from_fn(q.nrows(), q.ncols(), |i, j| e[(i, j)].re)
}

pub fn frobenius_real(a: &RMat) -> f64 {
    a.norm_l2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QMatrixReport {
    /// Smallest off-diagonal entry; `+∞` for 1×1.
    pub offdiag_min: f64,
    /// Largest absolute column sum.
    pub colsum_residual: f64,
    pub pass: bool,
}

pub fn check_qmatrix(q: &RMat, tol: f64) -> QMatrixReport {
    let d = q.nrows();
    let mut offdiag_min = f64::INFINITY;
    let mut colsum_residual = 0.0f64;
    for j in 0..d {
        let mut sum = 0.0;
        for i in 0..d {
            sum += q[(i, j)];
            if i != j {
                offdiag_min = offdiag_min.min(q[(i, j)]);
            }
        }
        colsum_residual = colsum_residual.max(sum.abs());
    }
    QMatrixReport { offdiag_min, colsum_residual, pass: offdiag_min >= -tol && colsum_residual <= tol }
}

/// A 2×2 stochastic matrix is embeddable exactly when `det P > 0`, i.e.
/// `P₁₁ + P₂₂ > 1`.
pub fn kingman_2x2(p: &StochasticMatrix) -> Result<bool> {
    if p.d() != 2 {
        return Err(EmbedError::Invalid(format!("expected a 2×2 matrix, got d = {}", p.d())));
    }
    Ok(p.mat[(0, 0)] + p.mat[(1, 1)] > 1.0)
}

/// Completely dephase, then apply `P` to the diagonal:
/// `ρ ↦ Σ_ij P_ij ⟨j|ρ|j⟩ |i⟩⟨i|`.
pub fn lift_stochastic(p: &StochasticMatrix) -> SuperOp {
    let d = p.d();
    let mut m = linalg::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = c64::new(p.mat[(i, j)], 0.0);
        }
    }
    SuperOp::new(d, m).expect("d²×d² by construction")
}
