//! Continuity bounds for the matrix exponential and logarithm, the precision
//! budget `δ̃`, and the thresholds derived from it.

use std::f64::consts::PI;

use serde::Serialize;

/// `‖e^A − e^B‖ ≤ exp(‖A‖)·exp(‖A − B‖)·‖A − B‖`.
pub fn exp_continuity_bound(norm_a: f64, norm_amb: f64) -> f64 {
    if norm_amb == 0.0 {
        return 0.0;
    }
    (norm_a + norm_amb).exp() * norm_amb
}

/// The rescaling factor `k` of the logarithm bound. With
/// `g = 134²(1+M²)²‖A−B‖² − ‖A‖²`, any `k ≤ 1` with `k²g < 1` is admissible,
/// so `k = 1` when `g ≤ 0` and `k = min(1, g^{-1/2})` otherwise.
pub fn log_rescaling(norm_a: f64, norm_amb: f64, m_resolvent: f64) -> f64 {
    let c = 134.0 * (1.0 + m_resolvent * m_resolvent);
    let guard = (c * norm_amb).powi(2) - norm_a * norm_a;
    if guard <= 0.0 {
        1.0
    } else {
        guard.sqrt().recip().min(1.0)
    }
}

/// `‖log A − log B‖ ≤ 134k(1+M²)(1 + k‖A‖ + k‖A−B‖(1 + k²‖A‖²)^{1/2})‖A−B‖`
/// for `kA, kB` whose resolvents satisfy `(1−λ)‖R(λ,·)‖ ≤ M` on `λ ≤ 0`.
/// Invalid arguments (negative, non-finite, or `M ≤ 0`) give `+∞`.
pub fn log_continuity_bound(norm_a: f64, norm_amb: f64, m_resolvent: f64) -> f64 {
    let valid = norm_a.is_finite() && norm_amb.is_finite() && m_resolvent.is_finite();
    if !valid || norm_a < 0.0 || norm_amb < 0.0 || m_resolvent <= 0.0 {
        return f64::INFINITY;
    }
    if norm_amb == 0.0 {
        return 0.0;
    }
    let k = log_rescaling(norm_a, norm_amb, m_resolvent);
    let c = 134.0 * (1.0 + m_resolvent * m_resolvent);
    c * k * (1.0 + k * norm_a + k * norm_amb * (1.0 + k * k * norm_a * norm_a).sqrt()) * norm_amb
}

/// `ln C` for the prefactor `C = exp(‖L0‖ + M Σ‖A_c‖)·exp(κ + Mdκ/2)`.
pub fn log_prefactor(norm_l0: f64, sum_norm_ac: f64, m: f64, kappa: f64, d: usize) -> f64 {
    norm_l0 + m * sum_norm_ac + kappa + m * d as f64 * kappa / 2.0
}

/// The unique `δ̃ > 0` with `C·δ̃·e^{δ̃} = ε`.
///
/// Solved for `u = ln δ̃` from `u + e^u = ln ε − ln C`, which is strictly
/// increasing and bracketed by `[r − e^r, r]` (or `[0, r]` for `r > 1`), so
/// the result stays accurate when `δ̃` is far below the smallest double and
/// underflows to 0. Invalid inputs give NaN.
pub fn solve_delta_tilde(norm_l0: f64, sum_norm_ac: f64, m: f64, kappa: f64, d: usize, epsilon: f64) -> f64 {
    let args = [norm_l0, sum_norm_ac, m, kappa];
    if !(epsilon > 0.0 && epsilon.is_finite()) || args.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || d == 0 {
        return f64::NAN;
    }
    let r = epsilon.ln() - log_prefactor(norm_l0, sum_norm_ac, m, kappa, d);
    let g = |u: f64| u + u.exp() - r;
    let (mut lo, mut hi) = if r > 1.0 { (0.0, r) } else { (r - r.exp(), r) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..3 {
        let step = g(u) / (1.0 + u.exp());
        if !step.is_finite() || step == 0.0 {
            break;
        }
        u -= step;
    }
    u.exp()
}

/// Every precision target and decision threshold, as pure functions of
/// `(δ̃, d, M)` and the log-spectrum gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    /// Target accuracy of `Σ λ̃_i |r̃_i⟩⟨l̃_i|`: `δ̃/(12d‖1−ω‖³)`.
    pub log_precision: f64,
    /// Target accuracy of each eigenprojector: `δ̃/(24πMd²‖1−ω‖³)`.
    pub projector_precision: f64,
    /// A quarter of the smallest gap between distinct eigenvalue logs.
    pub quarter_gap: f64,
    /// `a = δ̃/(6d‖1−ω‖)`: `t ≤ −a` is Markovian, `t > a` is not.
    pub decision: f64,
    /// `δ̃/(3d‖1−ω‖)`, shadowed by `decision` and reported only.
    pub boundary: f64,
    /// Repair amount in the boundary case, `δ̃/(2d‖1−ω‖)`.
    pub repair: f64,
}

impl Thresholds {
    pub fn new(delta_tilde: f64, d: usize, m: f64, quarter_gap: f64) -> Self {
        let df = d as f64;
        let n = (df * df - 1.0).sqrt();
        Self {
            log_precision: delta_tilde / (12.0 * df * n.powi(3)),
            projector_precision: delta_tilde / (24.0 * PI * m * df * df * n.powi(3)),
            quarter_gap,
            decision: delta_tilde / (6.0 * df * n),
            boundary: delta_tilde / (3.0 * df * n),
            repair: delta_tilde / (2.0 * df * n),
        }
    }
}
