//! The integer program over branches: minimize
//! `t(m) = −λ_min((1−ω) Γ(L0 + Σ m_c A_c) (1−ω))` over `‖m‖_∞ ≤ M`.
//!
//! The compression splits into blocks along the joint sparsity pattern. Each
//! block depends on a subset of the `m_c`; variables that share no block are
//! optimized independently. Within a group of coupled variables the search is
//! a depth-first scan in the order `0, −1, 1, −2, 2, …` per variable, so the
//! first minimizer found is the least one in that order. A block is evaluated
//! as soon as all its variables are fixed, and a subtree is cut once the
//! blocks already decided reach the incumbent. Groups with more than
//! [`EXHAUSTIVE_VARS`] variables additionally prune on Weyl and diagonal
//! bounds for blocks that are still open.

use serde::Serialize;
use superop_core::linalg::{self, c64, CMat};
use superop_core::omega::compression_blocks;
use superop_core::SuperOp;

use crate::{DecideError, Result};

/// Default limit on block eigenvalue evaluations.
pub const DEFAULT_BUDGET: usize = 5_000_000;
/// Up to this many coupled variables, only exact pruning is used.
pub const EXHAUSTIVE_VARS: usize = 6;
/// Compressed branch blocks below this fraction of `‖A_c‖_F` are dropped.
const ZERO_BLOCK_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Minimum {
    pub t_star: f64,
    pub m_star: Vec<i64>,
    /// Some `|m_c|` of the minimizer equals the box bound.
    pub box_limited: bool,
    /// False when the budget ran out; the minimizer is then the incumbent.
    pub optimal: bool,
    pub evaluations: usize,
}

struct Block {
    base: CMat,
    /// Group-local positions of the variables this block depends on.
    pos: Vec<usize>,
    terms: Vec<CMat>,
    term_norms: Vec<f64>,
    last: usize,
}

impl Block {
    fn assemble(&self, m: &[i64], upto: usize) -> CMat {
        let mut terms = vec![(linalg::ONE, self.base.as_ref())];
        for (p, c) in self.pos.iter().zip(&self.terms) {
            if *p <= upto && m[*p] != 0 {
                terms.push((c64::new(m[*p] as f64, 0.0), c.as_ref()));
            }
        }
        linalg::lincomb(&terms)
    }
}

fn neg_min_eig(x: &CMat) -> Result<f64> {
    Ok(-linalg::eigvalsh(x.as_ref())?[0])
}

/// `0, −1, 1, …, −M, M`.
fn scan_order(m: i64) -> Vec<i64> {
    let mut v = vec![0];
    for k in 1..=m {
        v.push(-k);
        v.push(k);
    }
    v
}

struct Search<'a> {
    blocks: &'a [Block],
    /// Blocks completed at each depth.
    closing: Vec<Vec<usize>>,
    order: Vec<i64>,
    bound_m: f64,
    prune_open: bool,
    scale: f64,
    budget: usize,
    evaluations: usize,
    exhausted: bool,
    current: Vec<i64>,
    best: Option<(f64, Vec<i64>)>,
}

impl Search<'_> {
    fn incumbent(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.0)
    }

    /// Lower bound on the open blocks' contribution after fixing `0..=depth`.
    fn open_bound(&mut self, depth: usize) -> Result<f64> {
        let mut lb = f64::NEG_INFINITY;
        for b in self.blocks.iter().filter(|b| b.last > depth) {
            let partial = b.assemble(&self.current, depth);
            let free: Vec<usize> = (0..b.pos.len()).filter(|&i| b.pos[i] > depth).collect();
            let n = partial.nrows();
            let diag = (0..n)
                .map(|i| {
                    let slack: f64 = free.iter().map(|&k| b.terms[k][(i, i)].re.abs()).sum();
                    -partial[(i, i)].re - self.bound_m * slack
                })
                .fold(f64::NEG_INFINITY, f64::max);
            lb = lb.max(diag);
            if lb >= self.incumbent() {
                return Ok(lb);
            }
            self.evaluations += 1;
            let slack: f64 = free.iter().map(|&k| b.term_norms[k]).sum();
            lb = lb.max(neg_min_eig(&partial)? - self.bound_m * slack);
        }
        Ok(lb)
    }

    fn visit(&mut self, depth: usize, decided: f64) -> Result<()> {
        let n = self.current.len();
        for vi in 0..self.order.len() {
            if self.exhausted {
                return Ok(());
            }
            if self.best.is_some() && self.evaluations >= self.budget {
                self.exhausted = true;
                return Ok(());
            }
            self.current[depth] = self.order[vi];
            let mut t = decided;
            for &bi in &self.closing[depth] {
                self.evaluations += 1;
                t = t.max(neg_min_eig(&self.blocks[bi].assemble(&self.current, depth))?);
                if t >= self.incumbent() {
                    break;
                }
            }
            if t >= self.incumbent() {
                continue;
            }
            if depth + 1 == n {
                self.best = Some((t, self.current.clone()));
                continue;
            }
            if self.prune_open {
                let lb = self.open_bound(depth)?;
                if lb - 1e-12 * self.scale >= self.incumbent() {
                    continue;
                }
            }
            self.visit(depth + 1, t)?;
        }
        self.current[depth] = 0;
        Ok(())
    }
}

fn hermitian_choi(x: &SuperOp) -> CMat {
    linalg::hermitian_part(x.choi().mat())
}

/// [`integer_minimize_with`] and the default budget.
pub fn integer_minimize(l0: &SuperOp, a: &[SuperOp], m: u32) -> Result<Minimum> {
    integer_minimize_with(l0, a, m, DEFAULT_BUDGET)
}

/// Exact minimization over the box `‖m‖_∞ ≤ M`, or
/// [`DecideError::Budget`] with the incumbent once `budget` block
/// evaluations are spent.
pub fn integer_minimize_with(l0: &SuperOp, a: &[SuperOp], m: u32, budget: usize) -> Result<Minimum> {
    let d = l0.d();
    if let Some(bad) = a.iter().find(|x| x.d() != d) {
        return Err(DecideError::Config(format!("branch matrix has d = {}, expected {d}", bad.d())));
    }
    let g0 = hermitian_choi(l0);
    let ga: Vec<CMat> = a.iter().map(hermitian_choi).collect();
    let mut refs = vec![g0.as_ref()];
    refs.extend(ga.iter().map(|g| g.as_ref()));
    let comp = compression_blocks(d, &refs);

    // Per block: base, and the variables with a nonzero compressed term.
    let mut raw: Vec<(CMat, Vec<(usize, CMat)>)> = Vec::new();
    for blk in comp.iter().filter(|b| b.dim() > 0) {
        let base = linalg::hermitian_part(blk.compress(g0.as_ref()).as_ref());
        let mut terms = Vec::new();
        for (c, g) in ga.iter().enumerate() {
            let t = linalg::hermitian_part(blk.compress(g.as_ref()).as_ref());
            if linalg::frobenius(t.as_ref()) > ZERO_BLOCK_TOL * a[c].frobenius_norm() {
                terms.push((c, t));
            }
        }
        raw.push((base, terms));
    }

    // Union-find over variables coupled through a block.
    let nv = a.len();
    let mut parent: Vec<usize> = (0..nv).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (_, terms) in &raw {
        for w in terms.windows(2) {
            let (x, y) = (root(&mut parent, w[0].0), root(&mut parent, w[1].0));
            parent[x.max(y)] = x.min(y);
        }
    }

    let mut evaluations = 0;
    let mut t_star = f64::NEG_INFINITY;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of = vec![usize::MAX; nv];
    let mut group_blocks: Vec<Vec<(CMat, Vec<(usize, CMat)>)>> = Vec::new();
    for (base, terms) in raw {
        if terms.is_empty() {
            evaluations += 1;
            t_star = t_star.max(neg_min_eig(&base)?);
            continue;
        }
        let r = root(&mut parent, terms[0].0);
        if group_of[r] == usize::MAX {
            group_of[r] = groups.len();
            groups.push((0..nv).filter(|&v| root(&mut parent, v) == r).collect());
            group_blocks.push(Vec::new());
        }
        group_blocks[group_of[r]].push((base, terms));
    }

    let mut m_star = vec![0i64; nv];
    let mut optimal = true;
    let scale = l0.frobenius_norm() + m as f64 * a.iter().map(|x| x.frobenius_norm()).sum::<f64>();
    for (vars, gblocks) in groups.iter().zip(group_blocks) {
        let local = |c: usize| vars.binary_search(&c).expect("variable belongs to its group");
        let blocks: Vec<Block> = gblocks
            .into_iter()
            .map(|(base, terms)| {
                let pos: Vec<usize> = terms.iter().map(|(c, _)| local(*c)).collect();
                let last = *pos.iter().max().expect("nonempty");
                let term_norms = terms.iter().map(|(_, t)| linalg::spectral_norm(t.as_ref())).collect();
                Block { base, pos, terms: terms.into_iter().map(|(_, t)| t).collect(), term_norms, last }
            })
            .collect();
        let mut closing = vec![Vec::new(); vars.len()];
        for (i, b) in blocks.iter().enumerate() {
            closing[b.last].push(i);
        }
        let mut search = Search {
            blocks: &blocks,
            closing,
            order: scan_order(m as i64),
            bound_m: m as f64,
            prune_open: vars.len() > EXHAUSTIVE_VARS,
            scale,
            budget: budget.saturating_sub(evaluations),
            evaluations: 0,
            exhausted: false,
            current: vec![0; vars.len()],
            best: None,
        };
        search.visit(0, f64::NEG_INFINITY)?;
        evaluations += search.evaluations;
        optimal &= !search.exhausted;
        let (t, best) = search.best.expect("the all-zero point is always evaluated");
        t_star = t_star.max(t);
        for (p, &c) in vars.iter().enumerate() {
            m_star[c] = best[p];
        }
    }
    let box_limited = m > 0 && m_star.iter().any(|x| x.unsigned_abs() == m as u64);
    let result = Minimum { t_star, m_star, box_limited, optimal, evaluations };
    if optimal {
        Ok(result)
    } else {
        Err(DecideError::Budget(Box::new(result)))
    }
}

/// Plain enumeration of the whole box, for cross-checking small instances.
pub fn brute_force_minimize(l0: &SuperOp, a: &[SuperOp], m: u32) -> Result<(f64, Vec<i64>)> {
    let d = l0.d();
    let order = scan_order(m as i64);
    let mut idx = vec![0usize; a.len()];
    let mut best: Option<(f64, Vec<i64>)> = None;
    loop {
        let point: Vec<i64> = idx.iter().map(|&i| order[i]).collect();
        let mut terms = vec![(linalg::ONE, l0.mat())];
        for (mc, ac) in point.iter().zip(a) {
            terms.push((c64::new(*mc as f64, 0.0), ac.mat()));
        }
        let l = SuperOp::new(d, linalg::lincomb(&terms))?;
        let t = -superop_core::omega::compressed_min_eig(d, hermitian_choi(&l).as_ref())?;
        if best.as_ref().map_or(true, |b| t < b.0) {
            best = Some((t, point));
        }
        let mut k = a.len();
        loop {
            if k == 0 {
                return Ok(best.expect("at least one point"));
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < order.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_centered() {
        assert_eq!(scan_order(2), vec![0, -1, 1, -2, 2]);
        assert_eq!(scan_order(0), vec![0]);
    }

    #[test]
    fn no_pairs_gives_negative_margin() {
        let l = SuperOp::identity(2).scale(-1.0);
        let r = integer_minimize(&l, &[], 3).unwrap();
        let margin = superop_core::omega::compressed_min_eig(2, l.choi().mat()).unwrap();
        assert!((r.t_star + margin).abs() < 1e-14);
        assert!(r.m_star.is_empty() && r.optimal && !r.box_limited);
    }
}
