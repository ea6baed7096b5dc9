use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{self, c64, CMat, ZERO};
use crate::tol::Tolerances;

/// Returns `d` when `n = d²`.
pub fn square_root_dim(n: usize) -> Option<usize> {
    let d = (n as f64).sqrt().round() as usize;
    (d * d == n && d > 0).then_some(d)
}

/// The reshuffle `|i,j⟩⟨k,l| ↦ |i,k⟩⟨j,l|`. Pure index permutation, so it is
/// an exact involution and preserves the Frobenius norm.
pub fn gamma_involution(m: MatRef<'_, c64>) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(CoreError::Dimension(format!("{}×{} is not square", m.nrows(), m.ncols())));
    }
    let d = square_root_dim(m.nrows())
        .ok_or_else(|| CoreError::Dimension(format!("side {} is not a perfect square", m.nrows())))?;
    Ok(gamma_unchecked(m, d))
}

pub(crate) fn gamma_unchecked(m: MatRef<'_, c64>, d: usize) -> CMat {
    // out[(i,k),(j,l)] = in[(i,j),(k,l)]
    Mat::from_fn(d * d, d * d, |r, c| {
        let (i, k) = (r / d, r % d);
        let (j, l) = (c / d, c % d);
        m[(i * d + j, k * d + l)]
    })
}

/// `out(i,j) = conj(in(j,i))` on a vectorized operator, i.e. `X ↦ X†`.
pub fn flip_vector(v: &[c64]) -> Result<Vec<c64>> {
    let d = square_root_dim(v.len())
        .ok_or_else(|| CoreError::Dimension(format!("length {} is not a perfect square", v.len())))?;
    Ok((0..v.len()).map(|idx| v[(idx % d) * d + idx / d].conj()).collect())
}

/// Flip on superoperators, `F(X) = S·conj(X)·S` with `S` the index swap. It
/// sends `|r⟩⟨l|` to `|F r⟩⟨F l|`, and a map preserves Hermiticity exactly
/// when `F(E) = E`.
pub fn flip_operator(x: MatRef<'_, c64>) -> Result<CMat> {
    let d = square_root_dim(x.nrows())
        .filter(|_| x.nrows() == x.ncols())
        .ok_or_else(|| CoreError::Dimension(format!("{}×{} is not d²×d²", x.nrows(), x.ncols())))?;
    let swap = |a: usize| (a % d) * d + a / d;
    Ok(Mat::from_fn(x.nrows(), x.ncols(), |r, c| x[(swap(r), swap(c))].conj()))
}

/// A linear map on d×d operators in the row-major product basis: the entry at
/// row `(i,j)`, column `(k,l)` is the `(i,j)` coefficient of the image of
/// `|k⟩⟨l|`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp {
    d: usize,
    mat: CMat,
}

impl SuperOp {
    pub fn new(d: usize, mat: CMat) -> Result<Self> {
        if d == 0 || mat.nrows() != d * d || mat.ncols() != d * d {
            return Err(CoreError::Dimension(format!(
                "expected {}×{} for d = {d}, got {}×{}",
                d * d,
                d * d,
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { d, mat })
    }

    /// Infers `d` from the side length.
    pub fn from_mat(mat: CMat) -> Result<Self> {
        let d = square_root_dim(mat.nrows())
            .ok_or_else(|| CoreError::Dimension(format!("side {} is not a perfect square", mat.nrows())))?;
        Self::new(d, mat)
    }

    pub fn identity(d: usize) -> Self {
        Self { d, mat: linalg::identity(d * d) }
    }

    pub fn zeros(d: usize) -> Self {
        Self { d, mat: linalg::zeros(d * d, d * d) }
    }

    /// `ρ ↦ U ρ U†`.
    pub fn from_unitary(u: MatRef<'_, c64>) -> Result<Self> {
        Self::from_kraus(&[u.to_owned()])
    }

    /// `ρ ↦ Σ K ρ K†`, i.e. `Σ K ⊗ conj(K)`.
    pub fn from_kraus(kraus: &[CMat]) -> Result<Self> {
        let d = kraus
            .first()
            .map(|k| k.nrows())
            .ok_or_else(|| CoreError::Dimension("empty Kraus list".into()))?;
        let mut mat = linalg::zeros(d * d, d * d);
        for k in kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(CoreError::Dimension("Kraus operators must all be d×d".into()));
            }
            let kc = Mat::from_fn(d, d, |i, j| k[(i, j)].conj());
            mat += linalg::kron(k.as_ref(), kc.as_ref());
        }
        Self::new(d, mat)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mat(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn mat_mut(&mut self) -> &mut CMat {
        &mut self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    pub fn choi(&self) -> ChoiMatrix {
        ChoiMatrix { d: self.d, mat: gamma_unchecked(self.mat.as_ref(), self.d) }
    }

    pub fn flip(&self) -> SuperOp {
        Self { d: self.d, mat: flip_operator(self.mat.as_ref()).expect("shape checked at construction") }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &SuperOp) -> Result<SuperOp> {
        if self.d != other.d {
            return Err(CoreError::Dimension(format!("cannot compose d = {} with d = {}", self.d, other.d)));
        }
        Ok(Self { d: self.d, mat: &self.mat * &other.mat })
    }

    /// Vectorize, multiply, reshape.
    pub fn apply(&self, rho: MatRef<'_, c64>) -> Result<CMat> {
        let d = self.d;
        if rho.nrows() != d || rho.ncols() != d {
            return Err(CoreError::Dimension(format!("state must be {d}×{d}")));
        }
        let v = Mat::from_fn(d * d, 1, |r, _| rho[(r / d, r % d)]);
        let out = &self.mat * &v;
        Ok(Mat::from_fn(d, d, |i, j| out[(i * d + j, 0)]))
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius(self.mat.as_ref())
    }

    pub fn distance(&self, other: &SuperOp) -> f64 {
        linalg::frobenius((&self.mat - &other.mat).as_ref())
    }

    /// `e^{t·self}`.
    pub fn exp(&self, t: f64) -> SuperOp {
        let scaled = linalg::scaled(self.mat.as_ref(), c64::new(t, 0.0));
        Self { d: self.d, mat: linalg::expm(scaled.as_ref()) }
    }

    pub fn scale(&self, s: f64) -> SuperOp {
        Self { d: self.d, mat: linalg::scaled(self.mat.as_ref(), c64::new(s, 0.0)) }
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &SuperOp, s: f64) -> Result<SuperOp> {
        if self.d != other.d {
            return Err(CoreError::Dimension("dimension mismatch in sum".into()));
        }
        let mat = linalg::lincomb(&[(linalg::ONE, self.mat.as_ref()), (c64::new(s, 0.0), other.mat.as_ref())]);
        Ok(Self { d: self.d, mat })
    }
}

/// The reshuffled matrix `Γ(E)`. Rows are `(output, input)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    d: usize,
    mat: CMat,
}

impl ChoiMatrix {
    pub fn new(d: usize, mat: CMat) -> Result<Self> {
        SuperOp::new(d, mat).map(|s| Self { d: s.d, mat: s.mat })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mat(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    pub fn to_superop(&self) -> SuperOp {
        SuperOp { d: self.d, mat: gamma_unchecked(self.mat.as_ref(), self.d) }
    }

    /// Trace over the output factor, a d×d matrix on the input space. Equals
    /// the identity exactly when the map is trace preserving.
    pub fn partial_trace_out(&self) -> CMat {
        partial_trace_out(self.mat.as_ref(), self.d)
    }
}

pub fn partial_trace_out(choi: MatRef<'_, c64>, d: usize) -> CMat {
    Mat::from_fn(d, d, |k, l| (0..d).map(|i| choi[(i * d + k, i * d + l)]).sum())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct CptReport {
    pub cp_margin: f64,
    pub tp_residual: f64,
    pub pass: bool,
}

pub fn is_cpt(e: &SuperOp, tol: &Tolerances) -> CptReport {
    let choi = e.choi();
    let cp_margin = linalg::min_eig_hermitian(choi.mat()).unwrap_or(f64::NEG_INFINITY);
    let tr = choi.partial_trace_out();
    let d = e.d();
    let mut tp_residual = 0.0f64;
    for l in 0..d {
        for k in 0..d {
            let target = if k == l { linalg::ONE } else { ZERO };
            tp_residual = tp_residual.max((tr[(k, l)] - target).norm());
        }
    }
    CptReport { cp_margin, tp_residual, pass: cp_margin >= -tol.psd_tol && tp_residual <= tol.tp_tol }
}

/// True iff `Γ(E)` is Hermitian to `herm_tol` in Frobenius norm.
pub fn is_hermiticity_preserving(e: &SuperOp, tol: &Tolerances) -> bool {
    linalg::antihermitian_residual(e.choi().mat()) <= tol.herm_tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_channel;

    fn loop_gamma(m: &CMat, d: usize) -> CMat {
        let mut out = linalg::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        out[(i * d + k, j * d + l)] = m[(i * d + j, k * d + l)];
                    }
                }
            }
        }
        out
    }

    fn transpose_map(d: usize) -> SuperOp {
        let mut m = linalg::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i * d + j, j * d + i)] = linalg::ONE;
            }
        }
        SuperOp::new(d, m).unwrap()
    }

    #[test]
    fn gamma_rejects_non_square_side() {
        assert!(gamma_involution(linalg::zeros(3, 3).as_ref()).is_err());
        assert!(gamma_involution(linalg::zeros(4, 3).as_ref()).is_err());
    }

    #[test]
    fn gamma_of_scalar_is_fixed() {
        let m = Mat::from_fn(1, 1, |_, _| c64::new(2.0, -1.0));
        assert_eq!(gamma_involution(m.as_ref()).unwrap(), m);
    }

    #[test]
    fn gamma_of_identity() {
        let g = gamma_involution(linalg::identity(4).as_ref()).unwrap();
        // I = Σ |i,j⟩⟨i,j| ↦ Σ |i,i⟩⟨j,j|
        for r in 0..4 {
            for c in 0..4 {
                let expect = if r % 3 == 0 && c % 3 == 0 { 1.0 } else { 0.0 };
                assert_eq!(g[(r, c)].re, expect);
            }
        }
        assert_eq!(gamma_involution(g.as_ref()).unwrap(), linalg::identity(4));
    }

    #[test]
    fn gamma_matches_loop_oracle() {
        let m = Mat::from_fn(9, 9, |i, j| c64::new((i * 7 + j) as f64, (i as f64) - (j as f64) * 0.5));
        assert_eq!(gamma_involution(m.as_ref()).unwrap(), loop_gamma(&m, 3));
    }

    #[test]
    fn flip_vector_basis_action() {
        let mut v = vec![ZERO; 4];
        v[1] = c64::new(0.0, 1.0);
        let f = flip_vector(&v).unwrap();
        assert_eq!(f[2], c64::new(0.0, -1.0));
        assert_eq!(f[1], ZERO);
        let sym = vec![c64::new(1.0, 0.0), c64::new(2.0, 0.0), c64::new(2.0, 0.0), c64::new(3.0, 0.0)];
        assert_eq!(flip_vector(&sym).unwrap(), sym);
    }

    #[test]
    fn flip_maps_eigenvectors_to_conjugate_eigenvectors() {
        for seed in 0..5 {
            let e = random_channel(2, seed).unwrap();
            let eg = linalg::eigen_dense(e.mat()).unwrap();
            for k in 0..4 {
                let r: Vec<c64> = (0..4).map(|i| eg.right[(i, k)]).collect();
                let fr = flip_vector(&r).unwrap();
                let col = Mat::from_fn(4, 1, |i, _| fr[i]);
                let img = e.mat() * &col;
                let lam = eg.values[k].conj();
                let res: f64 = (0..4).map(|i| (img[(i, 0)] - lam * fr[i]).norm_sqr()).sum::<f64>().sqrt();
                assert!(res < 1e-10, "residual {res}");
            }
        }
    }

    #[test]
    fn identity_channel_is_cpt_with_zero_margin() {
        let rep = is_cpt(&SuperOp::identity(2), &Tolerances::default());
        assert!(rep.pass);
        assert!(rep.cp_margin.abs() < 1e-15);
        assert_eq!(rep.tp_residual, 0.0);
    }

    #[test]
    fn depolarizing_choi_is_half_identity() {
        let mut m = linalg::zeros(4, 4);
        for i in 0..2 {
            for k in 0..2 {
                m[(i * 3, k * 3)] = c64::new(0.5, 0.0);
            }
        }
        let e = SuperOp::new(2, m).unwrap();
        let choi = e.choi();
        assert_eq!(choi.mat(), linalg::scaled(linalg::identity(4).as_ref(), c64::new(0.5, 0.0)).as_ref());
        let rep = is_cpt(&e, &Tolerances::default());
        assert!(rep.pass && (rep.cp_margin - 0.5).abs() < 1e-14);
    }

    #[test]
    fn transpose_is_not_cp() {
        let rep = is_cpt(&transpose_map(2), &Tolerances::default());
        assert!(!rep.pass);
        assert!((rep.cp_margin + 1.0).abs() < 1e-12);
        assert!(rep.tp_residual < 1e-15);
    }

    #[test]
    fn hermiticity_preservation() {
        let tol = Tolerances::default();
        assert!(is_hermiticity_preserving(&SuperOp::identity(2), &tol));
        let mut e = SuperOp::identity(2);
        e.mat_mut()[(1, 2)] = c64::new(0.0, 0.3);
        assert!(!is_hermiticity_preserving(&e, &tol));
        assert_eq!(e.flip().flip(), e);
    }

    #[test]
    fn apply_and_compose() {
        let x = Mat::from_fn(2, 2, |i, j| if i != j { linalg::ONE } else { ZERO });
        let e = SuperOp::from_unitary(x.as_ref()).unwrap();
        let rho = Mat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { linalg::ONE } else { ZERO });
        let out = e.apply(rho.as_ref()).unwrap();
        assert_eq!(out[(1, 1)], linalg::ONE);
        assert_eq!(e.compose(&SuperOp::identity(2)).unwrap(), e);
        assert!(e.compose(&e).unwrap().distance(&SuperOp::identity(2)) < 1e-15);
    }
}
