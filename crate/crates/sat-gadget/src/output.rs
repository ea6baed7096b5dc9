//! The compiled gadget and its serialized form.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};
use superop_core::linalg::{self, c64};
use superop_core::SuperOp;

use crate::construct::{RMat, SlotKind};
use crate::delta::DeltaReport;
use crate::instance::SatInstance;
use crate::Result;

/// Construction record: every design constant and lift multiple used.
/// `sigma`, `k`, `alpha` and `delta` are in the scale of the stored
/// matrices; everything else is in encoding units.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub sigma: f64,
    pub k: f64,
    pub alpha: f64,
    pub delta: f64,
    pub delta_encoding: f64,
    pub delta_report: DeltaReport,
    /// Stored matrices are `scale ×` their encoding-unit versions.
    pub scale: f64,
    pub beta: f64,
    pub slack: f64,
    pub column_sum: f64,
    pub nudge: f64,
    pub theta: Vec<f64>,
    pub t_multiples: Vec<i64>,
    pub e_multiples: Vec<i64>,
    pub lift_step: f64,
    pub max_lift: f64,
    pub min_gap: f64,
    pub gap_target: f64,
}

/// `L0 ≅ Q ⊕ diag P` (plus the coupling between `|i,j⟩` and `|j,i⟩`) and
/// `A_c ≅ 2πB^c ⊕ 0`, with the ground-truth label of the instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GadgetOutput {
    pub instance: SatInstance,
    pub satisfiable: bool,
    pub n: usize,
    pub d: usize,
    pub kinds: Vec<SlotKind>,
    pub norm_sq: f64,
    pub vectors: Vec<Vec<f64>>,
    #[serde(rename = "S", with = "real_mat")]
    pub s: RMat,
    #[serde(rename = "Q", with = "real_mat")]
    pub q: RMat,
    /// `Q` before the degeneracy lift.
    #[serde(rename = "Q_raw", with = "real_mat")]
    pub q_raw: RMat,
    #[serde(rename = "B", with = "real_mat_list")]
    pub b: Vec<RMat>,
    #[serde(rename = "P", with = "real_mat")]
    pub p: RMat,
    pub coupling: f64,
    pub delta: f64,
    pub provenance: Provenance,
}

impl GadgetOutput {
    pub fn n_v(&self) -> usize {
        self.instance.n_v
    }

    /// The generator as a d²×d² superoperator.
    pub fn l0(&self) -> Result<SuperOp> {
        let d = self.d;
        let mut m = linalg::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i * d + i, j * d + j)] = c64::new(self.q[(i, j)], 0.0);
                if i != j {
                    m[(i * d + j, i * d + j)] = c64::new(self.p[(i, j)], 0.0);
                    m[(i * d + j, j * d + i)] = c64::new(self.coupling, 0.0);
                }
            }
        }
        Ok(SuperOp::new(d, m)?)
    }

    /// The branch matrices `A_c` as d²×d² superoperators.
    pub fn a_ops(&self) -> Result<Vec<SuperOp>> {
        let d = self.d;
        self.b
            .iter()
            .map(|b| {
                let mut m = linalg::zeros(d * d, d * d);
                for i in 0..d {
                    for j in 0..d {
                        m[(i * d + i, j * d + j)] = c64::new(2.0 * PI * b[(i, j)], 0.0);
                    }
                }
                Ok(SuperOp::new(d, m)?)
            })
            .collect()
    }

    /// `Q_m = Q + 2π Σ_c m_c B^c`.
    pub fn q_m(&self, m: &[i64]) -> RMat {
        let mut q = self.q.clone();
        for (mc, b) in m.iter().zip(&self.b) {
            if *mc != 0 {
                q += b * (2.0 * PI * *mc as f64);
            }
        }
        q
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("gadget serializes")
    }
}

fn to_rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn from_rows(rows: Vec<Vec<f64>>) -> RMat {
    Mat::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
}

mod real_mat {
    use super::*;
    use serde::{Deserializer, Serializer};
    use superop_core::io::{real_matrix_doc, MatrixDoc};

    pub fn serialize<S: Serializer>(m: &RMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        real_matrix_doc(&to_rows(m)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<RMat, D::Error> {
        let doc = MatrixDoc::deserialize(de)?;
        doc.into_real().map(from_rows).map_err(serde::de::Error::custom)
    }
}

mod real_mat_list {
    use super::*;
    use serde::{Deserializer, Serializer};
    use superop_core::io::{real_matrix_doc, MatrixDoc};

    pub fn serialize<S: Serializer>(ms: &[RMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let docs: Vec<MatrixDoc> = ms.iter().map(|m| real_matrix_doc(&to_rows(m))).collect();
        docs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<RMat>, D::Error> {
        let docs = Vec::<MatrixDoc>::deserialize(de)?;
        docs.into_iter().map(|d| d.into_real().map(from_rows).map_err(serde::de::Error::custom)).collect()
    }
}
