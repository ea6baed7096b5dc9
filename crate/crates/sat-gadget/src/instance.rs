use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{GadgetError, Result};

/// A 1-in-3SAT instance: every clause lists three distinct variables
/// (1-indexed) and is satisfied when exactly one of them is true.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatInstance {
    pub n_v: usize,
    pub clauses: Vec<[usize; 3]>,
}

impl SatInstance {
    pub fn new(n_v: usize, clauses: Vec<[usize; 3]>) -> Result<Self> {
        let inst = Self { n_v, clauses };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_v == 0 {
            return Err(GadgetError::Invalid("an instance needs at least one variable".into()));
        }
        for (c, cl) in self.clauses.iter().enumerate() {
            if cl.iter().any(|&x| x == 0 || x > self.n_v) {
                return Err(GadgetError::Invalid(format!(
                    "clause {} = {cl:?} uses a variable outside 1..={}",
                    c + 1,
                    self.n_v
                )));
            }
            if cl[0] == cl[1] || cl[0] == cl[2] || cl[1] == cl[2] {
                return Err(GadgetError::Invalid(format!("clause {} = {cl:?} repeats a variable", c + 1)));
            }
        }
        Ok(())
    }

    pub fn n_c(&self) -> usize {
        self.clauses.len()
    }

    /// True when every clause has exactly one true variable; `m[c]` is the
    /// value of variable `c + 1`.
    pub fn satisfied_by(&self, m: &[i64]) -> bool {
        m.len() == self.n_v
            && m.iter().all(|&x| x == 0 || x == 1)
            && self.clauses.iter().all(|cl| cl.iter().map(|&x| m[x - 1]).sum::<i64>() == 1)
    }

    /// Every satisfying assignment, by enumeration of `{0,1}^{n_v}` in
    /// binary counting order.
    pub fn satisfying_assignments(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        for bits in 0u64..(1u64 << self.n_v) {
            let m: Vec<i64> = (0..self.n_v).map(|c| ((bits >> c) & 1) as i64).collect();
            if self.satisfied_by(&m) {
                out.push(m);
            }
        }
        out
    }

    pub fn is_satisfiable(&self) -> bool {
        !self.satisfying_assignments().is_empty()
    }
}

impl FromStr for SatInstance {
    type Err = GadgetError;

    /// Parses `p 1in3 n_v n_C` followed by one `i j k` line per clause.
    /// Lines starting with `c` are comments; a trailing `0` on a clause line
    /// is accepted.
    fn from_str(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let bad = |what: &str| GadgetError::Parse(format!("line {}: {what}: {line:?}", no + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields[0] == "p" {
                if header.is_some() {
                    return Err(bad("second header"));
                }
                if fields.len() != 4 || fields[1] != "1in3" {
                    return Err(bad("expected `p 1in3 n_v n_C`"));
                }
                let nv = fields[2].parse().map_err(|_| bad("bad n_v"))?;
                let nc = fields[3].parse().map_err(|_| bad("bad n_C"))?;
                header = Some((nv, nc));
                continue;
            }
            if header.is_none() {
                return Err(bad("clause before the header"));
            }
            let nums: Vec<usize> = fields
                .iter()
                .map(|f| f.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("expected three variable indices"))?;
            let nums = match nums.as_slice() {
                [a, b, c] | [a, b, c, 0] => [*a, *b, *c],
                _ => return Err(bad("expected three variable indices")),
            };
            clauses.push(nums);
        }
        let (n_v, n_c) = header.ok_or_else(|| GadgetError::Parse("missing `p 1in3 n_v n_C` header".into()))?;
        if clauses.len() != n_c {
            return Err(GadgetError::Parse(format!("header announces {n_c} clauses, found {}", clauses.len())));
        }
        Self::new(n_v, clauses)
    }
}

impl fmt::Display for SatInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p 1in3 {} {}", self.n_v, self.n_c())?;
        for [a, b, c] in &self.clauses {
            writeln!(f, "{a} {b} {c}")?;
        }
        Ok(())
    }
}
