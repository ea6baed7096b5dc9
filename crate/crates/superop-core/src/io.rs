//! Matrix interchange documents: `{"d": int, "rows": [[entry, ...], ...]}`
//! where an entry is `[re, im]` or a plain real number.
//!
//! For superoperators `d` is the Hilbert-space dimension and the matrix is
//! d²×d². For every other matrix (states, Hamiltonians, stochastic matrices)
//! `d` is the side length.

use faer::Mat;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{CoreError, Result};
use crate::linalg::{c64, CMat};
use crate::superop::SuperOp;

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixDoc {
    pub d: usize,
    pub mat: CMat,
}

fn parse_number(v: &Value) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| CoreError::Format(format!("expected a number, got {v}")))?;
    if !x.is_finite() {
        return Err(CoreError::Format("non-finite entry".into()));
    }
    Ok(x)
}

fn parse_entry(v: &Value) -> Result<c64> {
    match v {
        Value::Array(parts) if parts.len() == 2 => Ok(c64::new(parse_number(&parts[0])?, parse_number(&parts[1])?)),
        Value::Array(_) => Err(CoreError::Format("complex entries must be [re, im]".into())),
        other => Ok(c64::new(parse_number(other)?, 0.0)),
    }
}

impl MatrixDoc {
    pub fn from_value(v: &Value) -> Result<Self> {
        let d = v
            .get("d")
            .and_then(Value::as_u64)
            .ok_or_else(|| CoreError::Format("missing or invalid field \"d\"".into()))? as usize;
        let rows = v
            .get("rows")
            .and_then(Value::as_array)
            .ok_or_else(|| CoreError::Format("missing field \"rows\"".into()))?;
        let n = rows.len();
        if d == 0 || (n != d && n != d * d) {
            return Err(CoreError::Format(format!("{n} rows do not fit d = {d}")));
        }
        let mut mat = Mat::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_array().ok_or_else(|| CoreError::Format(format!("row {i} is not a list")))?;
            if row.len() != n {
                return Err(CoreError::Format(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, e) in row.iter().enumerate() {
                mat[(i, j)] = parse_entry(e)?;
            }
        }
        Ok(Self { d, mat })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| CoreError::Format(e.to_string()))?;
        Self::from_value(&v)
    }

    /// Writes plain numbers when every imaginary part is exactly zero.
    pub fn to_value(&self) -> Value {
        let real = self.mat.col_iter().all(|c| c.iter().all(|z| z.im == 0.0));
        let rows: Vec<Value> = (0..self.mat.nrows())
            .map(|i| {
                Value::Array(
                    (0..self.mat.ncols())
                        .map(|j| {
                            let z = self.mat[(i, j)];
                            if real {
                                json!(z.re)
                            } else {
                                json!([z.re, z.im])
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        json!({ "d": self.d, "rows": rows })
    }

    pub fn square(mat: CMat) -> Self {
        Self { d: mat.nrows(), mat }
    }

    pub fn into_superop(self) -> Result<SuperOp> {
        SuperOp::new(self.d, self.mat)
    }

    /// Real parts of a d×d document, rejecting any nonzero imaginary part.
    pub fn into_real(self) -> Result<Vec<Vec<f64>>> {
        let n = self.mat.nrows();
        if n != self.d {
            return Err(CoreError::Format(format!("expected a {0}×{0} matrix", self.d)));
        }
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                let z = self.mat[(i, j)];
                if z.im != 0.0 {
                    return Err(CoreError::Format(format!("entry ({i},{j}) is not real")));
                }
                *x = z.re;
            }
        }
        Ok(out)
    }
}

impl From<&SuperOp> for MatrixDoc {
    fn from(e: &SuperOp) -> Self {
        Self { d: e.d(), mat: e.mat().to_owned() }
    }
}

pub fn real_matrix_doc(rows: &[Vec<f64>]) -> MatrixDoc {
    let n = rows.len();
    MatrixDoc::square(Mat::from_fn(n, n, |i, j| c64::new(rows[i][j], 0.0)))
}

impl Serialize for MatrixDoc {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixDoc {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(de)?;
        MatrixDoc::from_value(&v).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "...")]` helper for square matrices stored with `d` equal
/// to the side length.
pub mod square {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixDoc::square(m.clone()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<CMat, D::Error> {
        let doc = MatrixDoc::deserialize(de)?;
        if doc.mat.nrows() != doc.d {
            return Err(D::Error::custom(format!("expected a {0}×{0} matrix", doc.d)));
        }
        Ok(doc.mat)
    }
}

/// Like [`square`] for a list of matrices.
pub mod square_list {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let docs: Vec<MatrixDoc> = ms.iter().map(|m| MatrixDoc::square(m.clone())).collect();
        docs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<CMat>, D::Error> {
        let docs = Vec::<MatrixDoc>::deserialize(de)?;
        docs.into_iter()
            .map(|doc| {
                if doc.mat.nrows() == doc.d {
                    Ok(doc.mat)
                } else {
                    Err(D::Error::custom(format!("expected a {0}×{0} matrix", doc.d)))
                }
            })
            .collect()
    }
}
