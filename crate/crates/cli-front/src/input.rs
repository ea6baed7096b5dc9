//! File loading: matrix documents, bare row arrays, SAT text, GKS data.

use serde_json::Value;
use superop_core::io::MatrixDoc;
use superop_core::superop::square_root_dim;
use superop_core::SuperOp;

use crate::{CliError, Result};

pub fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("malformed JSON: {e}")))
}

/// A matrix document, or a bare array of rows whose `d` is inferred.
fn matrix_doc(v: &Value, superop: bool) -> Result<MatrixDoc> {
    if !v.is_array() {
        return Ok(MatrixDoc::from_value(v)?);
    }
    let n = v.as_array().map_or(0, Vec::len);
    let d = if superop {
        square_root_dim(n).ok_or_else(|| CliError::Invalid(format!("{n} rows is not a square number")))?
    } else {
        n
    };
    Ok(MatrixDoc::from_value(&serde_json::json!({ "d": d, "rows": v }))?)
}

pub fn superop(path: &str) -> Result<SuperOp> {
    let v = parse_json(&read(path)?)?;
    Ok(matrix_doc(&v, true)?.into_superop()?)
}

pub fn real_rows(path: &str) -> Result<Vec<Vec<f64>>> {
    let v = parse_json(&read(path)?)?;
    Ok(matrix_doc(&v, false)?.into_real()?)
}

pub fn sat(path: &str) -> Result<sat_gadget::SatInstance> {
    Ok(read(path)?.parse()?)
}

pub fn lindblad(path: &str) -> Result<lindblad_check::LindbladData> {
    let data: lindblad_check::LindbladData =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::Invalid(format!("malformed Lindblad data: {e}")))?;
    data.validate()?;
    Ok(data)
}

/// Serializable form of a superoperator.
pub fn superop_doc(e: &SuperOp) -> MatrixDoc {
    MatrixDoc { d: e.d(), mat: e.clone().into_mat() }
}
