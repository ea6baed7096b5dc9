use std::f64::consts::PI;

use serde::Serialize;
use superop_core::linalg::{self, c64, CMat};
use superop_core::{flip_operator, OmegaData, SuperOp, Tolerances};

use crate::spectral::{pair_consistent_logs, spectral, SpectralData};
use crate::{LogError, Result};

/// `L0 = Σ_k log(λ_k) |r_k⟩⟨l_k|`, with the lower member of each conjugate
/// pair taking the exact conjugate of its partner's log. Equivalent to the
/// principal log with the branch cut rotated away from every pair.
pub fn principal_log(s: &SpectralData) -> Result<SuperOp> {
    let logs = pair_consistent_logs(s)?;
    Ok(SuperOp::new(s.d, s.functional(|k| logs[k]))?)
}

/// `A_c = 2πi (P_c − F(P_c))` with `P_c = |r_c⟩⟨l_c|` the projector of the
/// upper member of each pair, in ascending index order.
pub fn branch_matrices(s: &SpectralData) -> Vec<SuperOp> {
    s.upper_members().into_iter().map(|k| branch_matrix(&s.projector(k), s.d)).collect()
}

fn branch_matrix(p: &CMat, d: usize) -> SuperOp {
    let fp = flip_operator(p.as_ref()).expect("projector is d²×d²");
    let two_pi_i = c64::new(0.0, 2.0 * PI);
    let mat = linalg::lincomb(&[(two_pi_i, p.as_ref()), (-two_pi_i, fp.as_ref())]);
    SuperOp::new(d, mat).expect("projector is d²×d²")
}

/// One conjugate pair: indices into the spectrum and the upper eigenvalue.
#[derive(Clone, Copy, Debug)]
pub struct PairInfo {
    pub upper: usize,
    pub lower: usize,
    pub lambda: c64,
}

/// Every Hermiticity-compatible logarithm `L0 + Σ m_c A_c` of a channel.
#[derive(Clone, Debug)]
pub struct BranchFamily {
    pub l0: SuperOp,
    pub a: Vec<SuperOp>,
    pub pairs: Vec<PairInfo>,
    /// False when the spectrum is degenerate; the integer family then misses
    /// logarithms that mix degenerate eigenvectors.
    pub complete: bool,
}

impl BranchFamily {
    pub fn from_spectral(s: &SpectralData) -> Result<Self> {
        let l0 = principal_log(s)?;
        let pairs: Vec<PairInfo> = s
            .upper_members()
            .into_iter()
            .map(|k| PairInfo { upper: k, lower: s.pair_index(k).expect("upper member is paired"), lambda: s.eigenvalues[k] })
            .collect();
        let a = branch_matrices(s);
        Ok(Self { l0, a, pairs, complete: !s.is_degenerate() })
    }

    pub fn d(&self) -> usize {
        self.l0.d()
    }

    pub fn num_pairs(&self) -> usize {
        self.a.len()
    }
}

pub fn branch_family(e: &SuperOp, tol: &Tolerances) -> Result<BranchFamily> {
    BranchFamily::from_spectral(&spectral(e, tol)?)
}

/// `L0 + Σ m_c A_c`.
pub fn branch_generator(b: &BranchFamily, m: &[i64]) -> Result<SuperOp> {
    if m.len() != b.a.len() {
        return Err(LogError::Length { expected: b.a.len(), got: m.len() });
    }
    let mut terms = vec![(linalg::ONE, b.l0.mat())];
    for (mc, ac) in m.iter().zip(&b.a) {
        if *mc != 0 {
            terms.push((c64::new(*mc as f64, 0.0), ac.mat()));
        }
    }
    Ok(SuperOp::new(b.d(), linalg::lincomb(&terms))?)
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma3Report {
    /// Largest `‖[L0, A_c]‖_F`, relative to `‖L0‖_F ‖A_c‖_F`.
    pub commutator_l0: f64,
    /// Largest `‖[A_c, A_c']‖_F`, relative to `‖A_c‖_F ‖A_c'‖_F`.
    pub commutator_pairs: f64,
    /// Largest relative deviation of a spectrum of `A_c` from `{±2πi, 0, …}`.
    pub spectrum_deviation: f64,
    /// Largest `‖A_c A_c'‖_F`, relative, over distinct pairs. The branch
    /// matrices are orthogonal as operators (`A_c A_c' = 0`, hence also
    /// `tr(A_c A_c') = 0`); for a non-normal channel they are generally not
    /// orthogonal in the Hilbert-Schmidt sense.
    pub overlap: f64,
    /// Largest `‖⟨ω|X‖` over `X ∈ {L0, A_c}`, relative to `‖X‖_F`.
    pub omega_residual: f64,
    /// Largest `‖Γ(X) − Γ(X)†‖_F`, relative to `‖X‖_F`.
    pub gamma_herm_residual: f64,
    pub pass: bool,
}

fn rel(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        x
    }
}

fn commutator_norm(a: &SuperOp, b: &SuperOp) -> f64 {
    let ab = a.mat() * b.mat();
    let ba = b.mat() * a.mat();
    linalg::frobenius((&ab - &ba).as_ref())
}

/// Checks simultaneous diagonalizability (commutators), the rank-2 `±2πi`
/// spectrum and mutual orthogonality of each `A_c`, `⟨ω|` annihilation, and
/// Hermiticity of the Γ-images. All quantities are relative; `pass` compares
/// them with `tol`.
pub fn verify_lemma3(b: &BranchFamily, tol: f64) -> Result<Lemma3Report> {
    let om = OmegaData::new(b.d());
    let l0n = b.l0.frobenius_norm();
    let mut commutator_l0 = 0.0f64;
    let mut commutator_pairs = 0.0f64;
    let mut spectrum_deviation = 0.0f64;
    let mut overlap = 0.0f64;
    let omega_res = |x: &SuperOp| {
        let v = om.bra_times(x.mat());
        rel(v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(), x.frobenius_norm())
    };
    let herm_res = |x: &SuperOp| rel(linalg::antihermitian_residual(x.choi().mat()), x.frobenius_norm());
    let mut omega_residual = omega_res(&b.l0);
    let mut gamma_herm_residual = herm_res(&b.l0);
    let two_pi = 2.0 * PI;
    for (c, ac) in b.a.iter().enumerate() {
        let an = ac.frobenius_norm();
        commutator_l0 = commutator_l0.max(rel(commutator_norm(&b.l0, ac), l0n * an));
        for ac2 in &b.a[c + 1..] {
            let an2 = ac2.frobenius_norm();
            commutator_pairs = commutator_pairs.max(rel(commutator_norm(ac, ac2), an * an2));
            let prod = ac.mat() * ac2.mat();
            overlap = overlap.max(rel(linalg::frobenius(prod.as_ref()), an * an2));
        }
        let mut vals = linalg::eigvals_blockwise(ac.mat())?;
        vals.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
        let (mut plus, mut minus) = (f64::INFINITY, f64::INFINITY);
        for v in vals.iter().take(2) {
            plus = plus.min((v - c64::new(0.0, two_pi)).norm());
            minus = minus.min((v - c64::new(0.0, -two_pi)).norm());
        }
        let rest = vals.iter().skip(2).map(|v| v.norm()).fold(0.0, f64::max);
        spectrum_deviation = spectrum_deviation.max(plus.max(minus).max(rest) / two_pi);
        omega_residual = omega_residual.max(omega_res(ac));
        gamma_herm_residual = gamma_herm_residual.max(herm_res(ac));
    }
    let pass = [commutator_l0, commutator_pairs, spectrum_deviation, overlap, omega_residual, gamma_herm_residual]
        .iter()
        .all(|&x| x <= tol);
    Ok(Lemma3Report {
        commutator_l0,
        commutator_pairs,
        spectrum_deviation,
        overlap,
        omega_residual,
        gamma_herm_residual,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;
    use superop_core::linalg::ZERO;
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
    fn identity_log_is_zero_and_no_pairs() {
        let b = branch_family(&SuperOp::identity(2), &Tolerances::default()).unwrap();
        assert_eq!(b.l0, SuperOp::zeros(2));
        assert!(b.a.is_empty());
        assert!(!b.complete);
    }

    #[test]
    fn scalar_log() {
        let mut m = linalg::identity(4);
        m[(1, 1)] = c64::new((-1.0f64).exp(), 0.0);
        m[(2, 2)] = c64::new((-1.0f64).exp(), 0.0);
        let b = branch_family(&SuperOp::new(2, m).unwrap(), &Tolerances::default()).unwrap();
        assert!((b.l0.mat()[(1, 1)].re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_branch_matrix_spectrum() {
        let b = branch_family(&rotation(PI / 3.0), &Tolerances::default()).unwrap();
        assert_eq!(b.a.len(), 1);
        let mut v = linalg::eigvals_blockwise(b.a[0].mat()).unwrap();
        v.sort_by(|x, y| x.im.total_cmp(&y.im));
        assert!((v[0] - c64::new(0.0, -2.0 * PI)).norm() < 1e-12);
        assert!((v[3] - c64::new(0.0, 2.0 * PI)).norm() < 1e-12);
        assert!(v[1].norm() < 1e-12 && v[2].norm() < 1e-12);
        let rep = verify_lemma3(&b, 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn generator_length_checked_and_linear() {
        let b = branch_family(&rotation(1.0), &Tolerances::default()).unwrap();
        assert!(matches!(branch_generator(&b, &[]), Err(LogError::Length { .. })));
        assert_eq!(branch_generator(&b, &[0]).unwrap(), b.l0);
        let g2 = branch_generator(&b, &[2]).unwrap();
        let g1 = branch_generator(&b, &[-1]).unwrap();
        let diff = g2.add_scaled(&g1, -1.0).unwrap();
        assert!(diff.distance(&b.a[0].scale(3.0)) < 1e-12);
    }

    #[test]
    fn tampered_family_flagged() {
        let mut b = (0..)
            .find_map(|seed| branch_family(&random_channel(2, seed).unwrap(), &Tolerances::default()).ok())
            .unwrap();
        let rep = verify_lemma3(&b, 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
        if let Some(a) = b.a.first_mut() {
            a.mat_mut()[(0, 1)] += c64::new(1.0, 0.0);
        } else {
            b.l0.mat_mut()[(0, 0)] += c64::new(1.0, 0.0);
        }
        let rep = verify_lemma3(&b, 1e-8).unwrap();
        assert!(!rep.pass && rep.omega_residual > 1e-3);
    }
}
