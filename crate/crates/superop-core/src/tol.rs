use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm_tol: f64,
    pub psd_tol: f64,
    pub tp_tol: f64,
    /// Radius within which two eigenvalues count as a conjugate pair.
    pub pair_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { herm_tol: 1e-9, psd_tol: 1e-9, tp_tol: 1e-9, pair_tol: 1e-7 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.herm_tol, self.psd_tol, self.tp_tol, self.pair_tol];
        if all.iter().all(|t| t.is_finite() && *t >= 0.0) {
            Ok(())
        } else {
            Err(CoreError::Invalid(format!("tolerances must be finite and nonnegative: {self:?}")))
        }
    }

    /// Every tolerance multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            herm_tol: self.herm_tol * k,
            psd_tol: self.psd_tol * k,
            tp_tol: self.tp_tol * k,
            pair_tol: self.pair_tol * k,
        }
    }
}
