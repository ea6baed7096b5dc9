use faer::Mat;
use markov_decider::{default_box, default_kappa, solve_delta_tilde};
use serde::Serialize;

use crate::branches::{classical_branches, ClassicalBranches};
use crate::{check_qmatrix, expm_real, frobenius_real, EmbedError, RMat, Result, StochasticMatrix, DEFAULT_TOL};

/// Largest number of box points scanned before giving up.
const BOX_BUDGET: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EmbedKind {
    Embeddable,
    NotEmbeddable,
}

/// Outcome of the embedding decision. `t_star` is the smallest violation
/// `−min offdiag(Q_m)` over the box; non-finite numbers serialize as `null`.
#[derive(Clone, Debug, Serialize)]
pub struct EmbedVerdict {
    pub kind: EmbedKind,
    pub t_star: f64,
    pub m_star: Vec<i64>,
    pub delta_tilde: f64,
    pub box_limited: bool,
    pub reason: String,
    pub epsilon: f64,
    pub box_bound: u32,
    /// `δ̃/(6d√(d−1))`: violations up to this are treated as boundary cases.
    pub threshold: f64,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_distance: Option<f64>,
    #[serde(skip)]
    pub witness: Option<RMat>,
}

impl EmbedVerdict {
    pub fn is_embeddable(&self) -> bool {
        self.kind == EmbedKind::Embeddable
    }
}

/// `Q + τ(J − d·1)` with `J` the all-ones matrix: off-diagonal entries rise
/// by `τ`, column sums are unchanged, and `Q` moves by `τ·d·√(d−1)`.
pub fn repair_rates(q: &RMat, tau: f64) -> RMat {
    let d = q.nrows();
    let shift = Mat::from_fn(d, d, |i, j| if i == j { tau * (1.0 - d as f64) } else { tau });
    q + &shift
}

fn violation(q: &RMat) -> f64 {
    -check_qmatrix(q, DEFAULT_TOL).offdiag_min
}

fn scan_order(m: i64) -> Vec<i64> {
    let mut v = vec![0];
    for k in 1..=m {
        v.push(-k);
        v.push(k);
    }
    v
}

/// Exhaustive scan of the box in the order `0, −1, 1, …` per coordinate;
/// the first minimizer found wins ties.
fn minimize(br: &ClassicalBranches, m: u32) -> Result<(f64, Vec<i64>)> {
    let k = br.b.len();
    let order = scan_order(m as i64);
    let points = (order.len() as f64).powi(k as i32);
    if points > BOX_BUDGET as f64 {
        return Err(EmbedError::Budget { points, budget: BOX_BUDGET });
    }
    let mut idx = vec![0usize; k];
    let mut best: Option<(f64, Vec<i64>)> = None;
    loop {
        let point: Vec<i64> = idx.iter().map(|&i| order[i]).collect();
        let t = violation(&br.generator(&point)?);
        if best.as_ref().map_or(true, |b| t < b.0) {
            best = Some((t, point));
        }
        let mut c = k;
        loop {
            if c == 0 {
                return Ok(best.expect("at least one point"));
            }
            c -= 1;
            idx[c] += 1;
            if idx[c] < order.len() {
                break;
            }
            idx[c] = 0;
        }
    }
}

/// Decides whether `P` is within `ε` (Frobenius) of an embeddable matrix.
///
/// Mirrors the channel decision with `‖1−ω‖` replaced by `√(d−1)`: with
/// `a = δ̃/(6d√(d−1))`, a best violation `t ≤ a` is embeddable (repaired by
/// `δ̃/(2d√(d−1))` when `t > 0`) and `t > a` is not. A simple real eigenvalue
/// on the negative axis rules out every real logarithm. `m = None` selects
/// the default box bound.
pub fn decide_embeddable(p: &StochasticMatrix, epsilon: f64, m: Option<u32>) -> Result<EmbedVerdict> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(EmbedError::Invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if m == Some(0) {
        return Err(EmbedError::Invalid("box bound M must be at least 1".into()));
    }
    let d = p.d();
    let mut v = EmbedVerdict {
        kind: EmbedKind::NotEmbeddable,
        t_star: f64::INFINITY,
        m_star: Vec::new(),
        delta_tilde: f64::NAN,
        box_limited: false,
        reason: String::new(),
        epsilon,
        box_bound: m.unwrap_or(0),
        threshold: f64::NAN,
        complete: true,
        witness_distance: None,
        witness: None,
    };
    let br = match classical_branches(p) {
        Ok(b) => b,
        Err(EmbedError::BranchCut(msg)) => {
            let negatives: Vec<f64> = {
                let pc = crate::to_complex(p.mat());
                superop_core::linalg::eigen_dense(pc.as_ref())?
                    .values
                    .iter()
                    .filter(|l| l.re < 0.0 && l.im.abs() <= 1e-7 * l.norm())
                    .map(|l| l.re)
                    .collect()
            };
            let simple = negatives.iter().any(|x| negatives.iter().filter(|y| (*y - x).abs() <= 1e-10).count() == 1);
            if simple {
                v.reason = "negative-eigenvalue".into();
                return Ok(v);
            }
            return Err(EmbedError::Degenerate(msg));
        }
        Err(e) => return Err(e),
    };
    let norm_q0 = frobenius_real(&br.q0);
    let two_pi = 2.0 * std::f64::consts::PI;
    let sum_b: f64 = br.b.iter().map(|b| two_pi * frobenius_real(b)).sum();
    let m = m.unwrap_or_else(|| default_box(norm_q0));
    let kappa = default_kappa(epsilon, m, d);
    let delta_tilde = solve_delta_tilde(norm_q0, sum_b, m as f64, kappa, d, epsilon);
    let scale = d as f64 * ((d as f64) - 1.0).sqrt().max(1.0);
    let a = delta_tilde / (6.0 * scale);
    let (t, m_star) = minimize(&br, m)?;
    v.t_star = t;
    v.box_limited = m_star.iter().any(|x| x.unsigned_abs() == m as u64);
    v.m_star = m_star;
    v.delta_tilde = delta_tilde;
    v.box_bound = m;
    v.threshold = a;
    v.complete = br.complete;
    if t > a {
        if !br.complete {
            return Err(EmbedError::Degenerate(format!(
                "no branch with violation ≤ {a:e} (best {t:e}), but eigenvalues coincide"
            )));
        }
        v.reason = "negative-rate".into();
        return Ok(v);
    }
    let qm = br.generator(&v.m_star)?;
    let witness = if t > 0.0 {
        v.reason = "boundary-repair".into();
        repair_rates(&qm, delta_tilde / (2.0 * scale))
    } else {
        v.reason = if t > -a { "boundary" } else { "rate-margin" }.into();
        qm
    };
    let report = check_qmatrix(&witness, DEFAULT_TOL);
    let dist = frobenius_real(&(&expm_real(&witness, 1.0) - p.mat()));
    if !report.pass || !(dist <= epsilon) {
        return Err(EmbedError::Unsound(format!("witness check {report:?}, distance {dist:e}")));
    }
    v.kind = EmbedKind::Embeddable;
    v.witness = Some(witness);
    v.witness_distance = Some(dist);
    Ok(v)
}
