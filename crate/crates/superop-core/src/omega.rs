//! The maximally entangled vector `|ω⟩ = Σ_i |i,i⟩/√d` and compressions onto
//! its orthogonal complement.
//!
//! The complement basis used throughout is the standard basis on the
//! off-diagonal positions `|i,j⟩, i ≠ j`, plus Helmert vectors on the diagonal
//! positions `|i,i⟩`. Both pieces are real, and the basis respects any block
//! structure in which all diagonal positions share one block, so compressions
//! can be done block by block.

use faer::{Mat, MatRef};

use crate::error::Result;
use crate::linalg::{self, c64, CMat, ZERO};

#[derive(Clone, Debug)]
pub struct OmegaData {
    pub d: usize,
    pub vec: Vec<c64>,
    pub proj: CMat,
    pub complement: CMat,
}

impl OmegaData {
    pub fn new(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let vec: Vec<c64> =
            (0..d * d).map(|r| if r / d == r % d { c64::new(s, 0.0) } else { ZERO }).collect();
        let proj = Mat::from_fn(d * d, d * d, |i, j| vec[i] * vec[j].conj());
        let complement = &linalg::identity(d * d) - &proj;
        Self { d, vec, proj, complement }
    }

    /// `‖1 − ω‖_F = √(d² − 1)`.
    pub fn complement_norm(&self) -> f64 {
        ((self.d * self.d - 1) as f64).sqrt()
    }

    /// Orthonormal basis of the complement, as a d²×(d²−1) real matrix.
    pub fn complement_basis(&self) -> CMat {
        let d = self.d;
        let n = d * d;
        let mut v = linalg::zeros(n, n - 1);
        let mut col = 0;
        for r in 0..n {
            if r / d != r % d {
                v[(r, col)] = linalg::ONE;
                col += 1;
            }
        }
        for h in linalg::helmert_basis(d) {
            for (i, x) in h.iter().enumerate() {
                v[(i * d + i, col)] = c64::new(*x, 0.0);
            }
            col += 1;
        }
        v
    }

    /// `⟨ω|X` as a row vector.
    pub fn bra_times(&self, x: MatRef<'_, c64>) -> Vec<c64> {
        (0..x.ncols()).map(|c| (0..x.nrows()).map(|r| self.vec[r].conj() * x[(r, c)]).sum()).collect()
    }
}

pub fn diag_positions(d: usize) -> Vec<usize> {
    (0..d).map(|i| i * d + i).collect()
}

/// One diagonal block of a compression. `basis` is present for the block
/// holding the `|i,i⟩` positions, where it maps the block's `|idx|`
/// coordinates to the `|idx| − 1` complement coordinates.
#[derive(Clone, Debug)]
pub struct CompressionBlock {
    pub idx: Vec<usize>,
    pub basis: Option<CMat>,
}

impl CompressionBlock {
    pub fn dim(&self) -> usize {
        self.basis.as_ref().map_or(self.idx.len(), |b| b.ncols())
    }

    /// The compressed block `Vᵀ X[idx, idx] V`.
    pub fn compress(&self, x: MatRef<'_, c64>) -> CMat {
        let sub = linalg::submatrix(x, &self.idx);
        match &self.basis {
            None => sub,
            Some(v) => v.adjoint() * &sub * v,
        }
    }
}

/// Blocks of the compression onto the complement of `|ω⟩`, derived from the
/// combined nonzero pattern of `mats`.
pub fn compression_blocks(d: usize, mats: &[MatRef<'_, c64>]) -> Vec<CompressionBlock> {
    let diag = diag_positions(d);
    linalg::pattern_components(d * d, mats, &[&diag])
        .into_iter()
        .map(|idx| {
            if !idx.contains(&0) {
                return CompressionBlock { idx, basis: None };
            }
            let n = idx.len();
            let mut v = linalg::zeros(n, n - 1);
            let mut col = 0;
            let mut diag_local = Vec::with_capacity(d);
            for (p, &r) in idx.iter().enumerate() {
                if r / d == r % d {
                    diag_local.push(p);
                } else {
                    v[(p, col)] = linalg::ONE;
                    col += 1;
                }
            }
            for h in linalg::helmert_basis(d) {
                for (k, &p) in diag_local.iter().enumerate() {
                    v[(p, col)] = c64::new(h[k], 0.0);
                }
                col += 1;
            }
            CompressionBlock { idx, basis: Some(v) }
        })
        .collect()
}

/// Minimum eigenvalue of the Hermitian part of `X` compressed onto the
/// complement of `|ω⟩`. `+∞` when the complement is empty (d = 1).
pub fn compressed_min_eig(d: usize, x: MatRef<'_, c64>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for block in compression_blocks(d, &[x]) {
        if block.dim() == 0 {
            continue;
        }
        let vals = linalg::eigvalsh(block.compress(x).as_ref())?;
        best = best.min(vals[0]);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_projector_properties() {
        let om = OmegaData::new(3);
        let norm: f64 = om.vec.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-15);
        let p2 = &om.proj * &om.proj;
        assert!(linalg::frobenius((&p2 - &om.proj).as_ref()) < 1e-15);
        let v = Mat::from_fn(9, 1, |i, _| om.vec[i]);
        assert!(linalg::frobenius((&om.complement * &v).as_ref()) < 1e-15);
        assert!((linalg::frobenius(om.complement.as_ref()) - om.complement_norm()).abs() < 1e-12);
    }

    #[test]
    fn complement_basis_is_orthonormal_and_spans_complement() {
        let om = OmegaData::new(3);
        let v = om.complement_basis();
        let g = v.adjoint() * &v;
        assert!(linalg::frobenius((&g - &linalg::identity(8)).as_ref()) < 1e-14);
        let p = &v * v.adjoint();
        assert!(linalg::frobenius((&p - &om.complement).as_ref()) < 1e-14);
    }

    #[test]
    fn blockwise_matches_dense_compression() {
        let d = 3;
        let om = OmegaData::new(d);
        let mut x = linalg::zeros(9, 9);
        for i in 0..9 {
            x[(i, i)] = c64::new(i as f64 - 4.0, 0.0);
        }
        x[(0, 4)] = c64::new(2.0, 0.0);
        x[(4, 0)] = c64::new(2.0, 0.0);
        x[(1, 3)] = c64::new(0.0, 1.5);
        x[(3, 1)] = c64::new(0.0, -1.5);
        let v = om.complement_basis();
        let dense = linalg::eigvalsh((v.adjoint() * &x * &v).as_ref()).unwrap()[0];
        let blocked = compressed_min_eig(d, x.as_ref()).unwrap();
        assert!((dense - blocked).abs() < 1e-12);
    }

    #[test]
    fn zero_has_zero_margin() {
        assert_eq!(compressed_min_eig(2, linalg::zeros(4, 4).as_ref()).unwrap(), 0.0);
    }
}
