//! Block-wise eigendecomposition of a superoperator with conjugate pairing.

use faer::Mat;
use serde::Serialize;
use superop_core::linalg::{self, c64, CMat, Eigen, ZERO};
use superop_core::{SuperOp, Tolerances};

use crate::{LogError, Result};

/// Relative distance below which two eigenvalues are treated as one cluster.
pub const CLUSTER_TOL: f64 = 1e-10;
/// Eigenvalues smaller than this fraction of their block's norm count as zero.
pub const SINGULAR_TOL: f64 = 1e-13;
/// Absolute eigenvalue noise floor, as a fraction of the block norm.
pub const NOISE_TOL: f64 = 1e-12;
/// Upper bound on `‖R‖_F ‖R⁻¹‖_F` for the eigenvector matrix of a block.
pub const CONDITION_CAP: f64 = 1e10;

/// What an eigenvalue is paired with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Partner {
    /// Numerically real; its conjugate is itself.
    Real,
    /// Member of a conjugate pair; `upper` marks the member with positive
    /// imaginary part.
    Pair { index: usize, upper: bool },
}

#[derive(Clone, Debug)]
struct EigenBlock {
    idx: Vec<usize>,
    eig: Eigen,
}

/// Eigenvalues and biorthonormal eigenvectors of a superoperator.
///
/// The decomposition is computed independently on each block of the exact
/// nonzero pattern, so every eigenvector is supported on one block.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub d: usize,
    pub eigenvalues: Vec<c64>,
    pub partner: Vec<Partner>,
    /// Groups of numerically equal eigenvalues (singletons included).
    pub clusters: Vec<Vec<usize>>,
    /// Largest per-block `‖R‖_F ‖R⁻¹‖_F`.
    pub condition: f64,
    /// `‖Σ λ_k |r_k⟩⟨l_k| − E‖_F / ‖E‖_F`.
    pub reconstruction_residual: f64,
    /// Absolute accuracy floor of each eigenvalue, from its block's norm.
    pub noise: Vec<f64>,
    blocks: Vec<EigenBlock>,
    /// `(block, local index)` of each eigenvalue.
    location: Vec<(usize, usize)>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// True when some eigenvalue is repeated to working precision.
    pub fn is_degenerate(&self) -> bool {
        self.clusters.iter().any(|c| c.len() > 1)
    }

    pub fn pair_index(&self, k: usize) -> Option<usize> {
        match self.partner[k] {
            Partner::Real => None,
            Partner::Pair { index, .. } => Some(index),
        }
    }

    /// Indices of the upper member of every conjugate pair, ascending.
    pub fn upper_members(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| matches!(self.partner[k], Partner::Pair { upper: true, .. })).collect()
    }

    pub fn cluster_of(&self, k: usize) -> &[usize] {
        self.clusters.iter().find(|c| c.contains(&k)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The block positions and local vectors `(support, r, l)` of eigenvalue `k`.
    pub fn local_vectors(&self, k: usize) -> (&[usize], Vec<c64>, Vec<c64>) {
        let (b, j) = self.location[k];
        let blk = &self.blocks[b];
        let n = blk.idx.len();
        let r = (0..n).map(|i| blk.eig.right[(i, j)]).collect();
        let l = (0..n).map(|i| blk.eig.left[(j, i)]).collect();
        (&blk.idx, r, l)
    }

    pub fn right_vec(&self, k: usize) -> Vec<c64> {
        let (idx, r, _) = self.local_vectors(k);
        let mut out = vec![ZERO; self.d * self.d];
        for (p, &i) in idx.iter().enumerate() {
            out[i] = r[p];
        }
        out
    }

    pub fn left_vec(&self, k: usize) -> Vec<c64> {
        let (idx, _, l) = self.local_vectors(k);
        let mut out = vec![ZERO; self.d * self.d];
        for (p, &i) in idx.iter().enumerate() {
            out[i] = l[p];
        }
        out
    }

    /// Spectral projector `|r_k⟩⟨l_k|` as a dense d²×d² matrix.
    pub fn projector(&self, k: usize) -> CMat {
        let n = self.d * self.d;
        let (idx, r, l) = self.local_vectors(k);
        let mut out = linalg::zeros(n, n);
        for (q, &j) in idx.iter().enumerate() {
            for (p, &i) in idx.iter().enumerate() {
                out[(i, j)] = r[p] * l[q];
            }
        }
        out
    }

    /// `Σ_k f(k) |r_k⟩⟨l_k|`, assembled block by block.
    pub fn functional(&self, f: impl Fn(usize) -> c64) -> CMat {
        let n = self.d * self.d;
        let mut out = linalg::zeros(n, n);
        let mut values: Vec<Vec<c64>> = self.blocks.iter().map(|b| vec![ZERO; b.idx.len()]).collect();
        for (k, &(b, j)) in self.location.iter().enumerate() {
            values[b][j] = f(k);
        }
        for (b, blk) in self.blocks.iter().enumerate() {
            let m = blk.idx.len();
            let scaled = Mat::from_fn(m, m, |i, j| blk.eig.right[(i, j)] * values[b][j]);
            let prod = &scaled * &blk.eig.left;
            linalg::scatter(&mut out, &blk.idx, prod.as_ref());
        }
        out
    }
}

/// Eigendecomposition of `E` with conjugate pairing.
///
/// Fails with [`LogError::Degenerate`] when an eigenvalue is numerically zero,
/// the eigenbasis is too ill conditioned to trust, or a complex eigenvalue has
/// no conjugate partner within `pair_tol`.
pub fn spectral(e: &SuperOp, tol: &Tolerances) -> Result<SpectralData> {
    let n = e.d() * e.d();
    let mat = e.mat();
    let mut blocks = Vec::new();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut location = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    let mut condition = 1.0f64;
    let mut resid_sq = 0.0;
    for idx in linalg::pattern_components(n, &[mat], &[]) {
        let sub = linalg::submatrix(mat, &idx);
        let eig = linalg::eigen_dense(sub.as_ref())?;
        let m = idx.len();
        let norm = linalg::frobenius(sub.as_ref());
        for (j, &lam) in eig.values.iter().enumerate() {
            if !(lam.norm() > SINGULAR_TOL * norm) {
                return Err(LogError::Degenerate(format!("eigenvalue {lam} is numerically zero")));
            }
            eigenvalues.push(lam);
            noise.push(NOISE_TOL * norm);
            location.push((blocks.len(), j));
        }
        if m > 1 {
            let cond = linalg::frobenius(eig.right.as_ref()) * linalg::frobenius(eig.left.as_ref()) / m as f64;
            if !(cond <= CONDITION_CAP) {
                return Err(LogError::Degenerate(format!("eigenvector condition number {cond:e} exceeds the cap")));
            }
            condition = condition.max(cond);
            let scaled = Mat::from_fn(m, m, |i, j| eig.right[(i, j)] * eig.values[j]);
            let rec = &scaled * &eig.left;
            resid_sq += linalg::frobenius((&rec - &sub).as_ref()).powi(2);
        }
        blocks.push(EigenBlock { idx, eig });
    }
    let reconstruction_residual = resid_sq.sqrt() / e.frobenius_norm().max(f64::MIN_POSITIVE);
    if reconstruction_residual > 1e-8 {
        return Err(LogError::Degenerate(format!(
            "eigendecomposition reconstructs E only to {reconstruction_residual:e}"
        )));
    }
    let clusters = cluster(&eigenvalues, &noise);
    let partner = pair_clusters(&eigenvalues, &noise, &clusters, tol.pair_tol)?;
    Ok(SpectralData {
        d: e.d(),
        eigenvalues,
        partner,
        clusters,
        condition,
        reconstruction_residual,
        noise,
        blocks,
        location,
    })
}

fn cluster(vals: &[c64], noise: &[f64]) -> Vec<Vec<usize>> {
    let n = vals.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut x: usize) -> usize {
        while label[x] != x {
            label[x] = label[label[x]];
            x = label[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let tol = (CLUSTER_TOL * vals[i].norm().max(vals[j].norm())).max(noise[i].max(noise[j]));
            if (vals[i] - vals[j]).norm() <= tol {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut label, i);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push(Vec::new());
        }
        out[slot[r]].push(i);
    }
    out
}

fn mean(vals: &[c64], members: &[usize]) -> c64 {
    members.iter().map(|&k| vals[k]).sum::<c64>() / members.len() as f64
}

/// Matches every cluster with the cluster nearest to its conjugate. A cluster
/// matched with itself is real; two mutually matched clusters of equal size
/// form conjugate pairs, member by member in index order.
fn pair_clusters(vals: &[c64], noise: &[f64], clusters: &[Vec<usize>], pair_tol: f64) -> Result<Vec<Partner>> {
    let means: Vec<c64> = clusters.iter().map(|c| mean(vals, c)).collect();
    let nearest = |c: usize| -> usize {
        let target = means[c].conj();
        (0..means.len())
            .min_by(|&a, &b| (means[a] - target).norm().total_cmp(&(means[b] - target).norm()))
            .expect("at least one cluster")
    };
    let mut partner = vec![Partner::Real; vals.len()];
    for (c, members) in clusters.iter().enumerate() {
        let mu = means[c];
        let floor = members.iter().map(|&k| noise[k]).fold(0.0, f64::max);
        let allowed = (pair_tol * mu.norm()).max(floor);
        let other = nearest(c);
        if other == c {
            if mu.im.abs() > allowed {
                return Err(LogError::Degenerate(format!("complex eigenvalue {mu} has no conjugate partner")));
            }
            continue;
        }
        if nearest(other) != c || clusters[other].len() != members.len() {
            return Err(LogError::Degenerate(format!("eigenvalue {mu} has an ambiguous conjugate partner")));
        }
        let gap = (means[other] - mu.conj()).norm();
        if gap > allowed {
            return Err(LogError::Degenerate(format!(
                "eigenvalue {mu} is {gap:e} away from the conjugate of its partner"
            )));
        }
        let upper = mu.im > 0.0;
        for (&k, &j) in members.iter().zip(&clusters[other]) {
            partner[k] = Partner::Pair { index: j, upper };
        }
    }
    Ok(partner)
}

/// Log of each eigenvalue: principal for the upper member of a pair and for
/// real eigenvalues, exact conjugate for the lower member. Real eigenvalues
/// on the negative axis have no Hermiticity-compatible logarithm.
pub(crate) fn pair_consistent_logs(s: &SpectralData) -> Result<Vec<c64>> {
    let mut logs = vec![ZERO; s.len()];
    for k in 0..s.len() {
        let lam = s.eigenvalues[k];
        logs[k] = match s.partner[k] {
            Partner::Real => {
                if lam.re < 0.0 {
                    return Err(LogError::BranchCut(format!("real eigenvalue {lam} lies on the negative axis")));
                }
                c64::new(lam.norm().ln(), 0.0)
            }
            Partner::Pair { upper: true, .. } => lam.ln(),
            Partner::Pair { index, upper: false } => s.eigenvalues[index].ln().conj(),
        };
    }
    Ok(logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use superop_core::random_channel;

    fn rotation(theta: f64) -> SuperOp {
        let u = Mat::from_fn(2, 2, |i, j| {
            if i != j {
                ZERO
            } else {
                c64::from_polar(1.0, if i == 0 { -theta / 2.0 } else { theta / 2.0 })
            }
        });
        SuperOp::from_unitary(u.as_ref()).unwrap()
    }

    #[test]
    fn identity_has_one_real_cluster() {
        let s = spectral(&SuperOp::identity(2), &Tolerances::default()).unwrap();
        assert!(s.eigenvalues.iter().all(|&l| l == c64::new(1.0, 0.0)));
        assert!(s.partner.iter().all(|p| *p == Partner::Real));
        assert_eq!(s.clusters, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn rotation_has_one_pair() {
        let th = PI / 3.0;
        let s = spectral(&rotation(th), &Tolerances::default()).unwrap();
        let ups = s.upper_members();
        assert_eq!(ups.len(), 1);
        let k = ups[0];
        assert!((s.eigenvalues[k] - c64::from_polar(1.0, th)).norm() < 1e-14);
        let j = s.pair_index(k).unwrap();
        assert!((s.eigenvalues[j] - c64::from_polar(1.0, -th)).norm() < 1e-14);
        assert_eq!(s.pair_index(j), Some(k));
    }

    #[test]
    fn random_channel_reconstructs() {
        for seed in 0..10 {
            let e = random_channel(2, seed).unwrap();
            let s = spectral(&e, &Tolerances::default()).unwrap();
            assert!(s.reconstruction_residual <= 1e-8);
            let rec = s.functional(|k| s.eigenvalues[k]);
            assert!(linalg::frobenius((&rec - &e.mat().to_owned()).as_ref()) <= 1e-8 * e.frobenius_norm());
            for k in 0..4 {
                let r = s.right_vec(k);
                let l = s.left_vec(k);
                let dot: c64 = r.iter().zip(&l).map(|(a, b)| a * b).sum();
                assert!((dot - c64::new(1.0, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn singular_channel_rejected() {
        let mut m = linalg::zeros(4, 4);
        m[(0, 0)] = c64::new(1.0, 0.0);
        m[(0, 3)] = c64::new(1.0, 0.0);
        let e = SuperOp::new(2, m).unwrap();
        assert!(matches!(spectral(&e, &Tolerances::default()), Err(LogError::Degenerate(_))));
    }
}
