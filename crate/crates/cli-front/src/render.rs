//! Report rendering. JSON is the default; the text form lists one
//! `key: value` line per scalar field.

use markov_decider::Verdict;
use serde::Serialize;
use serde_json::Value;

use crate::commands::JitterInfo;
use crate::{CliError, Format};

pub fn json<T: Serialize>(x: &T) -> String {
    let mut s = serde_json::to_string_pretty(x).expect("reports serialize");
    s.push('\n');
    s
}

pub fn report<T: Serialize>(x: &T, format: Format) -> String {
    match format {
        Format::Json => json(x),
        Format::Text => {
            let v = serde_json::to_value(x).expect("reports serialize");
            let mut out = String::new();
            flatten("", &v, &mut out);
            out
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => out.push_str(&format!("{prefix}: {other}\n")),
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "n/a".into()
    } else {
        format!("{x:.6e}")
    }
}

/// Audit layout: the precision budget, the thresholds derived from it, the
/// integer minimum and the comparison that produced the verdict.
pub fn verdict_text(v: &Verdict, jitter: Option<&JitterInfo>) -> String {
    let mut s = String::new();
    s.push_str(&format!("verdict: {:?}\nreason: {}\n", v.kind, v.reason));
    if let Some(j) = jitter {
        s.push_str(&format!(
            "[input] jitter norm {} (seed {}, mixing weight {}), epsilon {} -> {}\n",
            num(j.norm),
            j.seed,
            num(j.mixing_weight),
            num(j.epsilon_requested),
            num(j.epsilon_used)
        ));
    }
    if let Some(d) = v.distance_to_cpt {
        s.push_str(&format!("[input] distance to nearest channel: {}\n", num(d)));
    }
    s.push_str(&format!(
        "[budget] epsilon {}, box M = {}, kappa {}, delta-tilde {}\n",
        num(v.epsilon),
        v.box_bound,
        num(v.kappa),
        num(v.delta_tilde)
    ));
    if let Some(t) = &v.thresholds {
        s.push_str(&format!("[precision] log target {}\n", num(t.log_precision)));
        s.push_str(&format!("[precision] eigenprojector target {}\n", num(t.projector_precision)));
        s.push_str(&format!("[precision] quarter eigenvalue-log gap {}\n", num(t.quarter_gap)));
        s.push_str(&format!("[minimize] t* = {} at m* = {:?}, box limited: {}\n", num(v.t_star), v.m_star, v.box_limited));
        s.push_str(&format!(
            "[decide] a = {}, 2a = {}: t* <= -a Markovian, t* > a non-Markovian, otherwise repair by {}\n",
            num(t.decision),
            num(t.boundary),
            num(t.repair)
        ));
    } else if v.t_star.is_infinite() {
        s.push_str("[minimize] t* = +inf\n");
    }
    if let Some(w) = v.witness_distance {
        s.push_str(&format!("[witness] distance from exp(witness) to input: {}\n", num(w)));
    }
    s.push_str(&format!("complete branch family: {}\n", v.complete));
    s
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    kind: &'static str,
    category: &'static str,
    message: &'a str,
}

pub fn error(e: &CliError, format: Format) -> String {
    let message = e.to_string();
    report(&ErrorReport { kind: "Error", category: e.category(), message: &message }, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_flattens_nested_objects() {
        let v = serde_json::json!({ "a": 1, "b": { "c": [1, 2], "d": "x" } });
        assert_eq!(report(&v, Format::Text), "a: 1\nb.c: [1,2]\nb.d: \"x\"\n");
    }

    #[test]
    fn error_report_carries_category() {
        let e = CliError::Budget("stuck".into());
        let v: Value = serde_json::from_str(&error(&e, Format::Json)).unwrap();
        assert_eq!(v["category"], "budget-or-degeneracy");
        assert_eq!(e.exit_code(), crate::EXIT_BUDGET);
    }
}
