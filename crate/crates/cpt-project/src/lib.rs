//! Nearest CPT map in Frobenius norm.
//!
//! In Choi form the CPT maps are the intersection of the PSD cone with the
//! affine set `{σ : Tr_out σ = 1}`. Both have closed-form projections, so the
//! nearest point is found by Dykstra's alternating projections. Γ is a
//! permutation of entries, so Choi-space distances equal superoperator
//! distances.

use faer::Mat;
use serde::Serialize;
use superop_core::linalg::{self, CMat};
use superop_core::{is_cpt, ChoiMatrix, CoreError, CptReport, SuperOp, Tolerances};
use thiserror::Error;

pub use superop_core::random::{normalize_choi, random_channel};

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("input is not Hermitian (residual {0:e})")]
    NotHermitian(f64),
}

pub type Result<T> = std::result::Result<T, ProjectError>;

pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionResult {
    #[serde(skip)]
    pub projected: SuperOp,
    pub distance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub feasibility: CptReport,
    /// Dual objective after every sweep. Nondecreasing, and bounded above by
    /// half the squared optimal distance.
    #[serde(skip)]
    pub dual_objective: Vec<f64>,
}

/// Orthogonal projection onto `{σ : Tr_out σ = 1}`:
/// `σ ↦ σ + (1/d)·1 ⊗ (1 − Tr_out σ)`.
pub fn project_tp(choi: &ChoiMatrix) -> ChoiMatrix {
    let d = choi.d();
    ChoiMatrix::new(d, tp_step(choi.mat().to_owned(), d)).expect("shape preserved")
}

fn tp_step(mut sigma: CMat, d: usize) -> CMat {
    let tr = superop_core::superop::partial_trace_out(sigma.as_ref(), d);
    let inv_d = 1.0 / d as f64;
    for i in 0..d {
        for k in 0..d {
            for l in 0..d {
                let delta = if k == l { linalg::ONE } else { linalg::ZERO } - tr[(k, l)];
                sigma[(i * d + k, i * d + l)] += delta * inv_d;
            }
        }
    }
    sigma
}

/// Nearest PSD matrix: eigenvalues clipped at zero. The input must be
/// Hermitian to `herm_tol` (relative to its norm); it is symmetrized first.
pub fn project_psd(choi: &ChoiMatrix, tol: &Tolerances) -> Result<ChoiMatrix> {
    let res = linalg::antihermitian_residual(choi.mat());
    if res > tol.herm_tol * linalg::frobenius(choi.mat()).max(1.0) {
        return Err(ProjectError::NotHermitian(res));
    }
    let d = choi.d();
    Ok(ChoiMatrix::new(d, psd_step(&linalg::hermitian_part(choi.mat()))?).expect("shape preserved"))
}

fn psd_step(h: &CMat) -> Result<CMat> {
    let (w, u) = linalg::eigh(h.as_ref())?;
    if w[0] >= 0.0 {
        return Ok(h.clone());
    }
    let n = w.len();
    let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * w[j].max(0.0));
    Ok(linalg::hermitian_part((&scaled * u.adjoint()).as_ref()))
}

fn inner(a: &CMat, b: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += (a[(i, j)].conj() * b[(i, j)]).re;
        }
    }
    s
}

fn norm(a: &CMat) -> f64 {
    linalg::frobenius(a.as_ref())
}

/// Dykstra iteration between the PSD cone and the trace-preserving affine set.
///
/// Writing `x = x0 − (p + q)` with `p` and `q` the two correction terms, each
/// sweep is an exact coordinate ascent step on the dual
/// `D(p,q) = ⟨p+q, x0⟩ − ½‖p+q‖² − Re tr(q)/d`, which is recorded.
pub fn nearest_cpt(e: &SuperOp, max_iter: usize, tol: f64) -> Result<ProjectionResult> {
    let d = e.d();
    let x0 = linalg::hermitian_part(e.choi().mat());
    let n = x0.nrows();
    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut p = linalg::zeros(n, n);
    let mut q = linalg::zeros(n, n);
    let mut dual_objective = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let y_new = psd_step(&(&x + &p))?;
        p = &(&x + &p) - &y_new;
        let x_new = tp_step(&y_new + &q, d);
        q = &(&y_new + &q) - &x_new;
        let change = norm(&(&x_new - &x)).max(norm(&(&y_new - &y)));
        x = x_new;
        y = y_new;
        let pq = &p + &q;
        let tr_q: f64 = (0..n).map(|i| q[(i, i)].re).sum();
        dual_objective.push(inner(&pq, &x0) - 0.5 * norm(&pq).powi(2) - tr_q / d as f64);
        if change < tol {
            converged = true;
            break;
        }
    }
    let projected = ChoiMatrix::new(d, x)?.to_superop();
    let distance = projected.distance(e);
    let feasibility = is_cpt(&projected, &Tolerances::default());
    Ok(ProjectionResult { projected, distance, iterations, converged, feasibility, dual_objective })
}

/// [`nearest_cpt`] with the default budget and tolerance.
pub fn nearest_cpt_default(e: &SuperOp) -> Result<ProjectionResult> {
    nearest_cpt(e, DEFAULT_MAX_ITER, DEFAULT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use superop_core::linalg::{c64, ONE};

    fn transpose_map() -> SuperOp {
        let mut m = linalg::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                m[(i * 2 + j, j * 2 + i)] = ONE;
            }
        }
        SuperOp::new(2, m).unwrap()
    }

    #[test]
    fn tp_projection_fixes_channels_and_offsets_zero() {
        let e = random_channel(2, 1).unwrap();
        let c = e.choi();
        let back = project_tp(&c);
        assert!(linalg::frobenius((&back.into_mat() - &c.mat().to_owned()).as_ref()) < 1e-14);
        let z = project_tp(&ChoiMatrix::new(2, linalg::zeros(4, 4)).unwrap());
        let expect = linalg::scaled(linalg::identity(4).as_ref(), c64::new(0.5, 0.0));
        assert_eq!(z.mat(), expect.as_ref());
        let tr = z.partial_trace_out();
        assert_eq!(tr, linalg::identity(2));
    }

    #[test]
    fn tp_projection_is_idempotent_on_hermitian() {
        let mut rng = superop_core::random::rng_from_seed(2);
        let h = superop_core::random::random_hermitian(9, &mut rng);
        let once = project_tp(&ChoiMatrix::new(3, h).unwrap());
        let tr = once.partial_trace_out();
        assert!(linalg::frobenius((&tr - &linalg::identity(3)).as_ref()) < 1e-12);
        let twice = project_tp(&once);
        assert!(linalg::frobenius((&twice.into_mat() - &once.mat().to_owned()).as_ref()) < 1e-14);
    }

    #[test]
    fn psd_clipping() {
        let tol = Tolerances::default();
        let mut m = linalg::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 1)] = c64::new(-1.0, 0.0);
        let out = project_psd(&ChoiMatrix::new(2, m).unwrap(), &tol).unwrap();
        assert!((out.mat()[(0, 0)] - ONE).norm() < 1e-15);
        assert!(out.mat()[(1, 1)].norm() < 1e-15);
        let psd = random_channel(2, 3).unwrap().choi();
        let same = project_psd(&psd, &tol).unwrap();
        assert!(linalg::frobenius((&same.into_mat() - &psd.mat().to_owned()).as_ref()) < 1e-14);
        let mut bad = linalg::zeros(4, 4);
        bad[(0, 1)] = ONE;
        assert!(matches!(project_psd(&ChoiMatrix::new(2, bad).unwrap(), &tol), Err(ProjectError::NotHermitian(_))));
    }

    #[test]
    fn channels_are_fixed_points() {
        for seed in 0..5 {
            let e = random_channel(2, seed).unwrap();
            let r = nearest_cpt_default(&e).unwrap();
            assert!(r.converged && r.iterations <= 2, "{r:?}");
            assert!(r.distance <= 1e-9);
        }
    }

    #[test]
    fn transpose_distance_matches_symmetric_ansatz() {
        // Covariance reduces the problem to a·P_sym + b·P_anti with
        // 1.5a + 0.5b = 1, a, b ≥ 0; the optimum is a = 2/3, b = 0.
        let r = nearest_cpt_default(&transpose_map()).unwrap();
        assert!(r.converged);
        assert!((r.distance - 2.0 / 3f64.sqrt()).abs() < 1e-8, "{}", r.distance);
        assert!(r.feasibility.cp_margin >= -1e-8 && r.feasibility.tp_residual < 1e-12);
    }

    #[test]
    fn dual_objective_is_monotone_and_bounded() {
        let r = nearest_cpt_default(&transpose_map()).unwrap();
        let bound = 0.5 * r.distance * r.distance;
        for w in r.dual_objective.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        assert!(*r.dual_objective.last().unwrap() <= bound + 1e-9);
        assert!((r.dual_objective.last().unwrap() - bound).abs() < 1e-6);
    }
}
