//! Lindblad generators: construction from GKS data, the generator test
//! (Hermiticity, normalization, conditional complete positivity), and the
//! repair that turns a near-generator into a generator.

use faer::{Mat, MatRef};
use rand::Rng;
use serde::{Deserialize, Serialize};
use superop_core::linalg::{self, c64, CMat, ONE, ZERO};
use superop_core::{omega, random, CoreError, OmegaData, SuperOp, Tolerances};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LindbladError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid Lindblad data: {0}")]
    InvalidData(String),
    #[error("precondition violated: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, LindbladError>;

/// Hamiltonian `H`, Kossakowski matrix `G` and jump-operator basis `F`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LindbladData {
    #[serde(rename = "H", with = "superop_core::io::square")]
    pub h: CMat,
    #[serde(rename = "G", with = "superop_core::io::square")]
    pub g: CMat,
    #[serde(rename = "F", with = "superop_core::io::square_list")]
    pub f: Vec<CMat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub herm_residual: f64,
    pub norm_residual: f64,
    pub ccp_margin: f64,
    pub pass: bool,
}

impl LindbladData {
    pub fn d(&self) -> usize {
        self.h.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.h.nrows();
        if d == 0 || self.h.ncols() != d {
            return Err(LindbladError::InvalidData("H must be square and nonempty".into()));
        }
        let r = self.g.nrows();
        if self.g.ncols() != r || self.f.len() != r {
            return Err(LindbladError::InvalidData(format!(
                "G is {}×{} but {} jump operators were given",
                r,
                self.g.ncols(),
                self.f.len()
            )));
        }
        if let Some(k) = self.f.iter().position(|f| f.nrows() != d || f.ncols() != d) {
            return Err(LindbladError::InvalidData(format!("F[{k}] is not {d}×{d}")));
        }
        let h_scale = linalg::frobenius(self.h.as_ref()).max(1.0);
        if linalg::antihermitian_residual(self.h.as_ref()) > 1e-9 * h_scale {
            return Err(LindbladError::InvalidData("H is not Hermitian".into()));
        }
        if r > 0 {
            let g_scale = linalg::frobenius(self.g.as_ref()).max(1.0);
            if linalg::antihermitian_residual(self.g.as_ref()) > 1e-9 * g_scale {
                return Err(LindbladError::InvalidData("G is not Hermitian".into()));
            }
            let lmin = linalg::eigvalsh(self.g.as_ref())?[0];
            if lmin < -1e-9 * g_scale {
                return Err(LindbladError::InvalidData(format!("G is not positive semidefinite (λ_min = {lmin:e})")));
            }
        }
        Ok(())
    }
}

/// The d² matrix units `|i⟩⟨j|`, ordered row-major.
pub fn matrix_unit_basis(d: usize) -> Vec<CMat> {
    (0..d * d)
        .map(|a| Mat::from_fn(d, d, |i, j| if i * d + j == a { ONE } else { ZERO }))
        .collect()
}

fn conj(a: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].conj())
}

fn transpose(a: MatRef<'_, c64>) -> CMat {
    a.transpose().to_owned()
}

/// Superoperator of `ρ ↦ i[ρ,H] + Σ G_ab (F_a ρ F_b† − ½{F_b† F_a, ρ})`.
///
/// With row-major vectorization, `ρ ↦ AρB` is `A ⊗ Bᵀ`.
pub fn build_from_gks(data: &LindbladData) -> Result<SuperOp> {
    data.validate()?;
    let d = data.d();
    let id = linalg::identity(d);
    let i = c64::new(0.0, 1.0);
    let mut l = linalg::lincomb(&[
        (i, linalg::kron(id.as_ref(), transpose(data.h.as_ref()).as_ref()).as_ref()),
        (-i, linalg::kron(data.h.as_ref(), id.as_ref()).as_ref()),
    ]);
    for (a, fa) in data.f.iter().enumerate() {
        for (b, fb) in data.f.iter().enumerate() {
            let gab = data.g[(a, b)];
            if gab == ZERO {
                continue;
            }
            let jump = linalg::kron(fa.as_ref(), conj(fb.as_ref()).as_ref());
            let k = fb.adjoint() * fa;
            let left = linalg::kron(k.as_ref(), id.as_ref());
            let right = linalg::kron(id.as_ref(), transpose(k.as_ref()).as_ref());
            l += linalg::lincomb(&[(gab, jump.as_ref()), (gab * -0.5, left.as_ref()), (gab * -0.5, right.as_ref())]);
        }
    }
    Ok(SuperOp::new(d, l)?)
}

/// Minimum eigenvalue of `Γ(L)` compressed onto the complement of `|ω⟩`.
pub fn ccp_margin(l: &SuperOp) -> f64 {
    omega::compressed_min_eig(l.d(), l.choi().mat()).unwrap_or(f64::NEG_INFINITY)
}

/// `‖Γ(L) − Γ(L)†‖_F`.
pub fn herm_residual(l: &SuperOp) -> f64 {
    linalg::antihermitian_residual(l.choi().mat())
}

/// Euclidean norm of the row vector `⟨ω|L`.
pub fn norm_residual(l: &SuperOp) -> f64 {
    let om = OmegaData::new(l.d());
    om.bra_times(l.mat()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn check_lemma1(l: &SuperOp, tol: &Tolerances) -> Lemma1Report {
    let herm_residual = herm_residual(l);
    let norm_residual = norm_residual(l);
    let ccp_margin = ccp_margin(l);
    let pass = herm_residual <= tol.herm_tol && norm_residual <= tol.tp_tol && ccp_margin >= -tol.psd_tol;
    Lemma1Report { herm_residual, norm_residual, ccp_margin, pass }
}

/// The direction `d·ω − d·1` used by [`repair_generator`]. Its Γ-image
/// compresses to the identity on the complement of `|ω⟩`, and `⟨ω|` kills it.
pub fn repair_direction(d: usize) -> SuperOp {
    let om = OmegaData::new(d);
    let n = d * d;
    let df = d as f64;
    let mat = Mat::from_fn(n, n, |i, j| om.proj[(i, j)] * df - if i == j { c64::new(df, 0.0) } else { ZERO });
    SuperOp::new(d, mat).expect("square by construction")
}

/// `L' = L + ε(d·ω − d·1)`. Raises the ccp margin by exactly `ε` and moves
/// `L` by `ε·d·√(d²−1)` in Frobenius norm.
pub fn repair_generator(l: &SuperOp, eps: f64) -> Result<SuperOp> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(LindbladError::Contract(format!("repair amount must be finite and ≥ 0, got {eps}")));
    }
    let scale = l.frobenius_norm().max(1.0);
    let slack = 1e-9 * scale;
    let h = herm_residual(l);
    if h > slack {
        return Err(LindbladError::Contract(format!("L is not Hermiticity preserving (residual {h:e})")));
    }
    let nr = norm_residual(l);
    if nr > slack {
        return Err(LindbladError::Contract(format!("⟨ω|L ≠ 0 (residual {nr:e})")));
    }
    let m = ccp_margin(l);
    if m < -eps - slack {
        return Err(LindbladError::Contract(format!("ccp margin {m:e} is below −ε = {:e}", -eps)));
    }
    if eps == 0.0 {
        return Ok(l.clone());
    }
    Ok(l.add_scaled(&repair_direction(l.d()), eps)?)
}

/// Random valid GKS data on the matrix-unit basis: Gaussian Hermitian `H` and
/// `G = X X†` with `X` a Ginibre d²×d² matrix, both scaled by `scale`.
pub fn random_lindblad_data<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> LindbladData {
    let h = random::random_hermitian(d, rng);
    let x = random::ginibre(d * d, d * d, rng);
    let g = &x * x.adjoint();
    let s = c64::new(scale, 0.0);
    LindbladData {
        h: linalg::scaled(h.as_ref(), s),
        g: linalg::hermitian_part(linalg::scaled(g.as_ref(), s).as_ref()),
        f: matrix_unit_basis(d),
    }
}

/// A random generator rescaled to Frobenius norm `norm`.
pub fn random_generator<R: Rng + ?Sized>(d: usize, norm: f64, rng: &mut R) -> SuperOp {
    let l = build_from_gks(&random_lindblad_data(d, 1.0, rng)).expect("random data is valid");
    l.scale(norm / l.frobenius_norm())
}
