//! The perturbation radius `δ` within which every generator near `L0` has
//! the same answer. All quantities here are in encoding units.

use serde::{Deserialize, Serialize};

use crate::instance::SatInstance;
use crate::{GadgetError, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaReport {
    /// Final radius, the minimum of every bound below.
    pub delta: f64,
    /// Constants of the inequalities: `min[1/(18(n_v+1)), 5/(18(2n_v+1))]`.
    pub constants: f64,
    /// Coefficients, through eigenprojector perturbation: `constants/(2K)`.
    pub coefficients: f64,
    /// Requirements of the eigenspace perturbation lemma: just below
    /// `1/(9d²)`, and `gap/(4d)`.
    pub separation: f64,
    /// Diagonal dominance of the perturbed generators: `1/(18d)` and
    /// `1/(32 K n_v d)`.
    pub dominance: f64,
    /// Eigenprojector constant at the final radius.
    pub k: f64,
    pub iterations: usize,
}

/// `K = 4(d‖E‖ + √(d−1)Δ)/(Δ² − 4‖E‖²)` with `Δ = gap − 2‖E‖`, the
/// separation left after the diagonal blocks of the perturbation.
pub fn projector_constant(d: usize, gap: f64, e: f64) -> f64 {
    let df = d as f64;
    let big_delta = gap - 2.0 * e;
    let den = big_delta * big_delta - 4.0 * e * e;
    if big_delta <= 0.0 || den <= 0.0 {
        return f64::INFINITY;
    }
    4.0 * (df * e + (df - 1.0).sqrt() * big_delta) / den
}

/// Starts at the `K`-free bounds and shrinks `δ` to the coefficient and
/// dominance bounds with `K` evaluated at the current `δ`. Each step is
/// valid by itself since `K` grows with `δ`; the loop stops when `δ` is
/// stable.
pub fn compute_delta(inst: &SatInstance, d: usize, gap: f64) -> Result<DeltaReport> {
    let nv = inst.n_v as f64;
    let df = d as f64;
    let constants = (1.0 / (18.0 * (nv + 1.0))).min(5.0 / (18.0 * (2.0 * nv + 1.0)));
    let separation = (1.0 / (9.0 * df * df) * (1.0 - 1e-9)).min(gap / (4.0 * df));
    let dominance_free = 1.0 / (18.0 * df);
    let mut delta = constants.min(separation).min(dominance_free);
    for it in 1..=100 {
        let k = projector_constant(d, gap, delta);
        let coefficients = constants / (2.0 * k);
        let dominance = dominance_free.min(1.0 / (32.0 * k * nv * df));
        let next = delta.min(coefficients).min(dominance);
        if !(next > 0.0) {
            break;
        }
        if next >= delta * (1.0 - 1e-13) {
            let k = projector_constant(d, gap, next);
            return Ok(DeltaReport {
                delta: next,
                constants,
                coefficients: constants / (2.0 * k),
                separation,
                dominance: dominance_free.min(1.0 / (32.0 * k * nv * df)),
                k,
                iterations: it,
            });
        }
        delta = next;
    }
    Err(GadgetError::Construction("δ fixed point did not stabilize".into()))
}
