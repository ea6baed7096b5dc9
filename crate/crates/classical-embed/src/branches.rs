use std::f64::consts::PI;

use faer::Mat;
use superop_core::linalg::{self, c64, CMat};

use crate::{EmbedError, RMat, Result, StochasticMatrix};

const CLUSTER_TOL: f64 = 1e-10;
const SINGULAR_TOL: f64 = 1e-13;
const NOISE_TOL: f64 = 1e-12;
const CONDITION_CAP: f64 = 1e10;
const PAIR_TOL: f64 = 1e-7;

/// Every real logarithm `Q0 + 2π Σ m_c B^c` of a stochastic matrix.
#[derive(Clone, Debug)]
pub struct ClassicalBranches {
    pub q0: RMat,
    /// `B^c = i(P_c − conj P_c)` for the upper member of each conjugate pair;
    /// real, with eigenvalues `±i` and zero column sums.
    pub b: Vec<RMat>,
    pub eigenvalues: Vec<c64>,
    /// False when eigenvalues coincide; logs mixing them are then missed.
    pub complete: bool,
}

impl ClassicalBranches {
    /// `Q0 + 2π Σ m_c B^c`.
    pub fn generator(&self, m: &[i64]) -> Result<RMat> {
        if m.len() != self.b.len() {
            return Err(EmbedError::Invalid(format!("expected {} branch integers, got {}", self.b.len(), m.len())));
        }
        let mut q = self.q0.clone();
        for (mc, bc) in m.iter().zip(&self.b) {
            q += bc * (2.0 * PI * *mc as f64);
        }
        Ok(q)
    }
}

/// Subtracts the column means so every column sums to zero exactly in the
/// sense of the orthogonal projection.
fn zero_column_sums(mut q: RMat) -> RMat {
    let d = q.nrows();
    for j in 0..d {
        let mean = (0..d).map(|i| q[(i, j)]).sum::<f64>() / d as f64;
        for i in 0..d {
            q[(i, j)] -= mean;
        }
    }
    q
}

fn projector(right: &CMat, left: &CMat, k: usize) -> CMat {
    let n = right.nrows();
    Mat::from_fn(n, n, |i, j| right[(i, k)] * left[(k, j)])
}

/// Principal real log and branch matrices of `P`.
///
/// Fails when `P` is singular, ill conditioned, has a complex eigenvalue
/// without a conjugate partner, or has a real eigenvalue on the negative
/// axis ([`EmbedError::BranchCut`]).
pub fn classical_branches(p: &StochasticMatrix) -> Result<ClassicalBranches> {
    let d = p.d();
    let pc = crate::to_complex(p.mat());
    let eig = linalg::eigen_dense(pc.as_ref())?;
    let norm = linalg::frobenius(pc.as_ref());
    let noise = NOISE_TOL * norm;
    let vals = eig.values.clone();
    for lam in &vals {
        if !(lam.norm() > SINGULAR_TOL * norm) {
            return Err(EmbedError::Degenerate(format!("eigenvalue {lam} is numerically zero")));
        }
    }
    if d > 1 {
        let cond = linalg::frobenius(eig.right.as_ref()) * linalg::frobenius(eig.left.as_ref()) / d as f64;
        if !(cond <= CONDITION_CAP) {
            return Err(EmbedError::Degenerate(format!("eigenvector condition number {cond:e} exceeds the cap")));
        }
    }
    let close = |a: c64, b: c64| (a - b).norm() <= (CLUSTER_TOL * a.norm().max(b.norm())).max(noise);
    let mut complete = true;
    for j in 0..d {
        for k in (j + 1)..d {
            if close(vals[j], vals[k]) {
                complete = false;
            }
        }
    }
    // Pair complex eigenvalues with their nearest conjugates.
    let mut partner: Vec<Option<usize>> = vec![None; d];
    let mut is_real = vec![false; d];
    for k in 0..d {
        let lam = vals[k];
        if lam.im.abs() <= (PAIR_TOL * lam.norm()).max(noise) {
            is_real[k] = true;
        }
    }
    for k in 0..d {
        if is_real[k] || partner[k].is_some() {
            continue;
        }
        let target = vals[k].conj();
        let j = (0..d)
            .filter(|&j| j != k && !is_real[j] && partner[j].is_none())
            .min_by(|&a, &b| (vals[a] - target).norm().total_cmp(&(vals[b] - target).norm()));
        match j {
            Some(j) if (vals[j] - target).norm() <= (PAIR_TOL * vals[k].norm()).max(noise) => {
                if !complete && (0..d).any(|i| i != k && close(vals[i], vals[k])) {
                    return Err(EmbedError::Degenerate(format!("complex eigenvalue {} is repeated", vals[k])));
                }
                partner[k] = Some(j);
                partner[j] = Some(k);
            }
            _ => return Err(EmbedError::Degenerate(format!("complex eigenvalue {} has no conjugate partner", vals[k]))),
        }
    }
    let mut q0 = Mat::<f64>::zeros(d, d);
    let mut b = Vec::new();
    for k in 0..d {
        let lam = vals[k];
        let pk = projector(&eig.right, &eig.left, k);
        if is_real[k] {
            if lam.re < 0.0 {
                return Err(EmbedError::BranchCut(format!("real eigenvalue {} lies on the negative axis", lam.re)));
            }
            let l = lam.norm().ln();
            q0 += Mat::from_fn(d, d, |i, j| l * pk[(i, j)].re);
        } else if lam.im > 0.0 {
            // Upper member and its conjugate partner together contribute
            // 2 Re(log λ · P_k).
            let l = lam.ln();
            q0 += Mat::from_fn(d, d, |i, j| 2.0 * (l * pk[(i, j)]).re);
            b.push(zero_column_sums(Mat::from_fn(d, d, |i, j| -2.0 * pk[(i, j)].im)));
        }
    }
    let rec = &eig.right * Mat::from_fn(d, d, |i, j| if i == j { vals[i] } else { c64::new(0.0, 0.0) }) * &eig.left;
    let resid = linalg::frobenius((&rec - &pc).as_ref()) / norm;
    if resid > 1e-8 {
        return Err(EmbedError::Degenerate(format!("eigendecomposition reconstructs P only to {resid:e}")));
    }
    Ok(ClassicalBranches { q0: zero_column_sums(q0), b, eigenvalues: vals, complete })
}
