//! The construction: clause vectors, the slack matrix `S`, the lifted `Q`
//! and `B^c`, and the population block `P`.

use std::f64::consts::PI;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};
use superop_core::linalg::{self, c64};

use crate::delta::compute_delta;
use crate::instance::SatInstance;
use crate::output::{GadgetOutput, Provenance};
use crate::{GadgetError, Result};

pub type RMat = Mat<f64>;

/// Block patterns on the 4-dimensional slot space, indexed `2x + y`.
/// `RHO = J'⊗R` carries the encoding ("black squares", `y ≠ y'`), `TP = J⊗J'`
/// and `ZP = J'⊗Z` carry the degeneracy lifts.
pub(crate) const RHO: [[f64; 4]; 4] =
    [[0.0, -1.0, 0.0, 1.0], [1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0], [-1.0, 0.0, 1.0, 0.0]];
pub(crate) const TP: [[f64; 4]; 4] =
    [[1.0, -1.0, 1.0, -1.0], [-1.0, 1.0, -1.0, 1.0], [1.0, -1.0, 1.0, -1.0], [-1.0, 1.0, -1.0, 1.0]];
pub(crate) const ZP: [[f64; 4]; 4] =
    [[1.0, 0.0, -1.0, 0.0], [0.0, -1.0, 0.0, 1.0], [-1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, -1.0]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    Clause,
    Boolean,
    Fill,
}

/// Tunable constants of the construction, in encoding units.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CompileOptions {
    /// Clause-band entry of `v_c`; clause inequalities are read in units of `β²`.
    pub beta: f64,
    /// Minimum slack of every non-encoding inequality.
    pub slack: f64,
    /// Spacing of lifted eigenvalues, in units of the target gap `2/(9d)`.
    pub step: f64,
    /// Cap on any entry change made by the degeneracy lift.
    pub lift_cap: f64,
    /// Largest accepted Hilbert-space dimension `d = 4n`.
    pub max_dim: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { beta: 1.0 / 3.0, slack: 1.0 / 36.0, step: 1.1, lift_cap: 1.0 / 18.0, max_dim: 64 }
    }
}

/// Mutually orthogonal clause vectors of equal squared norm `N`.
#[derive(Clone, Debug)]
pub struct ClauseVectors {
    pub n_c: usize,
    pub n_v: usize,
    pub n: usize,
    pub norm_sq: f64,
    /// `n × n_v`, column `c` is `v_c`.
    pub vectors: RMat,
    /// `n × (n − n_v)`, an orthogonal basis of the complement, also of
    /// squared norm `N` per column.
    pub complement: RMat,
    pub kinds: Vec<SlotKind>,
}

impl ClauseVectors {
    pub fn vector(&self, c: usize) -> Vec<f64> {
        (0..self.n).map(|l| self.vectors[(l, c)]).collect()
    }

    pub fn gram(&self) -> RMat {
        self.vectors.transpose() * &self.vectors
    }
}

/// Ascending eigenvalues and orthonormal eigenvectors of a real symmetric
/// matrix.
pub(crate) fn sym_eigen(a: &RMat) -> Result<(Vec<f64>, RMat)> {
    let n = a.nrows();
    if n == 1 {
        return Ok((vec![a[(0, 0)]], Mat::identity(1, 1)));
    }
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| GadgetError::Construction("symmetric eigensolver did not converge".into()))?;
    Ok((e.S().column_vector().iter().copied().collect(), e.U().to_owned()))
}

/// Makes the first clearly nonzero entry positive, so eigenvector signs are
/// reproducible.
fn fix_sign(v: &mut [f64]) {
    if let Some(x) = v.iter().copied().find(|x| x.abs() > 1e-12) {
        if x < 0.0 {
            v.iter_mut().for_each(|y| *y = -*y);
        }
    }
}

/// Clause band (entry `β` per member variable), boolean band (identity),
/// then extension rows that make the columns orthogonal with a common norm:
/// for each eigenpair `(w, x)` of the Gram matrix below its top eigenvalue
/// `N`, a row `√(N − w)·x`. A zero fill row is appended when no extension
/// row was needed and `n ≥ 2`, so that column sums can be equalized.
pub fn build_clause_vectors(inst: &SatInstance, beta: f64) -> Result<ClauseVectors> {
    inst.validate()?;
    let (n_c, n_v) = (inst.n_c(), inst.n_v);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_c + 2 * n_v);
    for cl in &inst.clauses {
        let mut r = vec![0.0; n_v];
        for &x in cl {
            r[x - 1] = beta;
        }
        rows.push(r);
    }
    for c in 0..n_v {
        let mut r = vec![0.0; n_v];
        r[c] = 1.0;
        rows.push(r);
    }
    let m0 = Mat::from_fn(rows.len(), n_v, |i, j| rows[i][j]);
    let gram = m0.transpose() * &m0;
    let (w, x) = sym_eigen(&gram)?;
    let norm_sq = w[n_v - 1];
    for (i, &wi) in w.iter().enumerate() {
        if norm_sq - wi > 1e-9 * norm_sq {
            let mut r: Vec<f64> = (0..n_v).map(|j| x[(j, i)]).collect();
            fix_sign(&mut r);
            let s = (norm_sq - wi).sqrt();
            rows.push(r.into_iter().map(|y| y * s).collect());
        }
    }
    if rows.len() >= 2 && rows.len() == n_c + n_v {
        rows.push(vec![0.0; n_v]);
    }
    let n = rows.len();
    let vectors = Mat::from_fn(n, n_v, |i, j| rows[i][j]);
    let proj = Mat::from_fn(n, n, |i, j| {
        let vv: f64 = (0..n_v).map(|c| vectors[(i, c)] * vectors[(j, c)]).sum();
        f64::from(u8::from(i == j)) - vv / norm_sq
    });
    let (pw, pv) = sym_eigen(&proj)?;
    let cols: Vec<Vec<f64>> = (0..n)
        .filter(|&i| pw[i] > 0.5)
        .map(|i| {
            let mut v: Vec<f64> = (0..n).map(|l| pv[(l, i)]).collect();
            fix_sign(&mut v);
            v.into_iter().map(|y| y * norm_sq.sqrt()).collect()
        })
        .collect();
    let complement = Mat::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let kinds = (0..n)
        .map(|l| {
            if l < n_c {
                SlotKind::Clause
            } else if l < n_c + n_v {
                SlotKind::Boolean
            } else {
                SlotKind::Fill
            }
        })
        .collect();
    Ok(ClauseVectors { n_c, n_v, n, norm_sq, vectors, complement, kinds })
}

/// Everything the construction of `S` needs besides the vectors.
#[derive(Clone, Debug)]
pub(crate) struct Budget {
    pub step: f64,
    /// Largest `|T_ll|` the window placement may use.
    pub t_max: f64,
    /// Largest entry of `|Esym|`, per unit of `|C Cᵀ|`.
    pub e_max: f64,
    /// Lifted encoding coefficients `θ_c ≥ 1/3`.
    pub theta: Vec<f64>,
}

/// `A = Σ_c θ_c v_c v_cᵀ`, with `θ_c = 1/3 + η(c+1)` distinct and the
/// largest entry change capped at half the lift budget.
fn lifted_encoding(cv: &ClauseVectors, gap: f64, cap: f64) -> (RMat, Vec<f64>) {
    let n = cv.n;
    let outer = |c: usize| Mat::from_fn(n, n, |i, j| cv.vectors[(i, c)] * cv.vectors[(j, c)]);
    let mut weighted = Mat::<f64>::zeros(n, n);
    for c in 0..cv.n_v {
        weighted += outer(c) * (c as f64 + 1.0);
    }
    let wmax = weighted.col_iter().flat_map(|c| c.iter().map(|x| x.abs()).collect::<Vec<_>>()).fold(0.0, f64::max);
    let eta = if wmax * gap > cap / 2.0 { cap / 2.0 / wmax } else { gap };
    let theta: Vec<f64> = (0..cv.n_v).map(|c| 1.0 / 3.0 + eta * (c as f64 + 1.0)).collect();
    let mut a = Mat::<f64>::zeros(n, n);
    for (c, t) in theta.iter().enumerate() {
        a += outer(c) * *t;
    }
    (a, theta)
}

/// Sum over `c` of `|C_c C_cᵀ|`, entrywise.
fn abs_complement_outer(cv: &ClauseVectors) -> RMat {
    let n = cv.n;
    Mat::from_fn(n, n, |i, j| {
        (0..cv.complement.ncols()).map(|c| (cv.complement[(i, c)] * cv.complement[(j, c)]).abs()).sum()
    })
}

/// True for the positions whose Q-matrix condition is one of the instance's
/// inequalities: black squares of the diagonal block of a clause or boolean
/// slot.
pub(crate) fn is_encoding(kind: SlotKind, a: usize, b: usize) -> bool {
    kind != SlotKind::Fill && RHO[a][b] != 0.0
}

/// Smallest value each `S_ll'` must take so that every non-encoding entry of
/// `Q_m` stays at least `slack` above zero for all `m ∈ {0,1}^{n_v}`, under any
/// lift within the budget.
fn slack_requirements(cv: &ClauseVectors, a_enc: &RMat, budget: &Budget, slack: f64) -> RMat {
    let n = cv.n;
    let abs_c = abs_complement_outer(cv);
    Mat::from_fn(n, n, |l, lp| {
        let (mut lo, mut hi) = (a_enc[(l, lp)], a_enc[(l, lp)]);
        for c in 0..cv.n_v {
            let w = cv.vectors[(l, c)] * cv.vectors[(lp, c)];
            if w > 0.0 {
                lo -= w;
            } else {
                hi -= w;
            }
        }
        let mut worst = 0.0f64;
        for a in 0..4 {
            for b in 0..4 {
                if l == lp && (a == b || is_encoding(cv.kinds[l], a, b)) {
                    continue;
                }
                let coef = (-RHO[a][b] * lo).max(-RHO[a][b] * hi);
                let t = if l == lp { budget.t_max } else { 0.0 };
                worst = worst.max(coef + t + budget.e_max * abs_c[(l, lp)] * ZP[a][b].abs());
            }
        }
        worst + slack
    })
}

fn separated(values: &[f64], step: f64) -> bool {
    values.windows(2).all(|w| w[1] - w[0] >= step)
}

/// Result of [`build_s_and_sigma`].
#[derive(Clone, Debug)]
pub struct SlackMatrix {
    pub s: RMat,
    /// Common column sum of `S ⊗ J ⊗ J`, i.e. `4·colsum(S)`.
    pub sigma: f64,
    /// Scale of the off-diagonal symmetry-breaking nudge that was needed.
    pub nudge: f64,
    /// Minimum requirement for each entry.
    pub need: RMat,
}

/// Builds `S`: off-diagonals at their slack requirement plus a distinct
/// nudge per pair, diagonals `β²/2` (clause), `5/6` (boolean) and a nudged
/// requirement (fill), then a symmetric off-diagonal correction that makes
/// every column sum equal. The nudge grows by 4× until the spectrum of `S`
/// below its top eigenvalue is spaced by at least `step/4`.
pub(crate) fn build_s(cv: &ClauseVectors, need: &RMat, beta: f64, gap: f64, step: f64) -> Result<SlackMatrix> {
    let n = cv.n;
    if n == 2 {
        return Err(GadgetError::Construction("two slots cannot be column-equalized".into()));
    }
    let pairs = (n * (n - 1) / 2).max(1) as f64;
    let mut nudge = 1.0;
    for _ in 0..16 {
        let mut s = need.clone();
        for l in 0..n {
            s[(l, l)] = match cv.kinds[l] {
                SlotKind::Clause => beta * beta / 2.0,
                SlotKind::Boolean => 5.0 / 6.0,
                SlotKind::Fill => need[(l, l)] + gap * (l as f64 + 1.0) / n as f64,
            };
        }
        let mut q = 0.0;
        for l in 0..n {
            for lp in l + 1..n {
                q += 1.0;
                let x = s[(l, lp)] + gap * nudge * q * q / (pairs * pairs);
                s[(l, lp)] = x;
                s[(lp, l)] = x;
            }
        }
        if n >= 3 {
            product_fill(&mut s);
            equalize_columns(&mut s, need);
        }
        for l in 0..n {
            for lp in 0..n {
                if l != lp && s[(l, lp)] < need[(l, lp)] - 1e-12 {
                    return Err(GadgetError::Construction(format!("equalization undercut S[{l},{lp}]")));
                }
            }
        }
        let (w, _) = sym_eigen(&s)?;
        let w1: Vec<f64> = w[..n - 1].iter().map(|x| 4.0 * x).collect();
        if separated(&w1, step) {
            let sigma = 4.0 * (0..n).map(|l| s[(l, 0)]).sum::<f64>();
            return Ok(SlackMatrix { s, sigma, nudge, need: need.clone() });
        }
        nudge *= 4.0;
    }
    Err(GadgetError::Construction("could not separate the spectrum of S".into()))
}

/// Raises every column sum towards a common `c` with a symmetric
/// nonnegative product addition `x_l x_l'`, `x_l (Σx − x_l) = c − r_l`.
/// Returns false when no such `x` is found.
fn product_fill(s: &mut RMat) -> bool {
    let n = s.nrows();
    let r: Vec<f64> = (0..n).map(|j| (0..n).map(|i| s[(i, j)]).sum()).collect();
    let total: f64 = r.iter().sum();
    let rmax = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rmin = r.iter().copied().fold(f64::INFINITY, f64::min);
    let c = rmax.max((total - 2.0 * rmin) / (n as f64 - 2.0)) * (1.0 + 1e-3);
    let b: Vec<f64> = r.iter().map(|x| c - x).collect();
    let bmax = b.iter().copied().fold(0.0, f64::max);
    // x_l(t) is the smaller root of x² − t x + b_l; find t = Σ x_l(t).
    let xs = |t: f64| -> Vec<f64> { b.iter().map(|&bl| (t - (t * t - 4.0 * bl).max(0.0).sqrt()) / 2.0).collect() };
    let f = |t: f64| xs(t).iter().sum::<f64>() - t;
    let mut lo = 2.0 * bmax.sqrt();
    if f(lo) < 0.0 {
        return false;
    }
    let mut hi = lo.max(1.0);
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return false;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = xs(0.5 * (lo + hi));
    for l in 0..n {
        for lp in 0..n {
            if l != lp {
                s[(l, lp)] += x[l] * x[lp];
            }
        }
    }
    true
}

/// Adds `z_l + z_l'` to each off-diagonal pair so that every column sums to
/// a common `c`, the smallest value that keeps every off-diagonal entry at or
/// above `floor`. Entries may move down as well as up.
fn equalize_columns(s: &mut RMat, floor: &RMat) {
    let n = s.nrows();
    let nf = n as f64;
    let r: Vec<f64> = (0..n).map(|j| (0..n).map(|i| s[(i, j)]).sum()).collect();
    // z_l(c) = z0_l + c/(2n-2), where z0 is the solution at c = 0.
    let zs0 = -r.iter().sum::<f64>() / (2.0 * nf - 2.0);
    let z0: Vec<f64> = r.iter().map(|x| (-x - zs0) / (nf - 2.0)).collect();
    let mut c = f64::NEG_INFINITY;
    for l in 0..n {
        for lp in l + 1..n {
            let lo = floor[(l, lp)].max(floor[(lp, l)]);
            c = c.max((lo - s[(l, lp)] - z0[l] - z0[lp]) * (nf - 1.0));
        }
    }
    let z: Vec<f64> = z0.iter().map(|x| x + c / (2.0 * nf - 2.0)).collect();
    for l in 0..n {
        for lp in 0..n {
            if l != lp {
                s[(l, lp)] += z[l] + z[lp];
            }
        }
    }
}

/// `S` and `σ` with the default options; `σ` is in encoding units.
pub fn build_s_and_sigma(inst: &SatInstance, cv: &ClauseVectors) -> Result<SlackMatrix> {
    let opts = CompileOptions::default();
    let d = 4 * cv.n;
    let gap = 2.0 / (9.0 * d as f64);
    let budget = lift_budget(cv, gap, &opts);
    let (a_enc, _) = lifted_encoding(cv, gap, opts.lift_cap);
    let need = slack_requirements(cv, &a_enc, &budget, opts.slack);
    let _ = inst;
    build_s(cv, &need, opts.beta, gap, budget.step)
}

fn lift_budget(cv: &ClauseVectors, gap: f64, opts: &CompileOptions) -> Budget {
    let step = opts.step * gap;
    let ncp = cv.complement.ncols();
    let window = step * (2 * (cv.n + ncp) + 4) as f64;
    Budget { step, t_max: window / 4.0, e_max: window / (2.0 * cv.norm_sq), theta: Vec::new() }
}

/// `P = α(1 − wwᵀ) + α(1 − d)wwᵀ = α·1 − α·J`: zero diagonal, `−α` elsewhere.
pub fn build_p(sigma: f64, alpha: f64, d: usize) -> Result<RMat> {
    if !(alpha >= sigma) || !alpha.is_finite() {
        return Err(GadgetError::Contract(format!("build_P needs α ≥ σ, got α = {alpha}, σ = {sigma}")));
    }
    Ok(Mat::from_fn(d, d, |i, j| if i == j { 0.0 } else { -alpha }))
}

/// Orthonormal basis (columns) of the complement of `(1,…,1)` in `R^d`.
pub(crate) fn ones_complement(d: usize) -> RMat {
    let h = linalg::helmert_basis(d);
    Mat::from_fn(d, d - 1, |i, j| h[j][i])
}

/// Smallest eigenvalue of `Cᵀ X C` with `C` spanning the complement of the
/// all-ones direction; `+∞` when `d = 1`.
pub(crate) fn compressed_min(x: &RMat) -> Result<f64> {
    let d = x.nrows();
    if d < 2 {
        return Ok(f64::INFINITY);
    }
    let c = ones_complement(d);
    let k = c.transpose() * x * &c;
    let sym = Mat::from_fn(d - 1, d - 1, |i, j| 0.5 * (k[(i, j)] + k[(j, i)]));
    Ok(sym_eigen(&sym)?.0[0])
}

pub(crate) fn complex_eigenvalues(x: &RMat) -> Result<Vec<c64>> {
    let z = Mat::from_fn(x.nrows(), x.ncols(), |i, j| c64::new(x[(i, j)], 0.0));
    Ok(linalg::eigvals_blockwise(z.as_ref())?)
}

/// Pairs `i < j` in row-major order, the index set of the population block.
pub(crate) fn pair_list(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect()
}

/// Places the lift eigenvalues on a grid of spacing `step` around 0
/// (relative to `k`), avoiding the spectrum `w1` of `S ⊗ J ⊗ J`. Returns
/// grid multiples for the complement lifts (each occupying `±x`) and for the
/// slot lifts.
fn place_windows(w1: &[f64], ncp: usize, n: usize, step: f64) -> Result<(Vec<i64>, Vec<i64>)> {
    let mut used: Vec<f64> = w1.to_vec();
    let free = |used: &[f64], x: f64| used.iter().all(|y| (x - y).abs() >= step * (1.0 - 1e-9));
    let mut e_mult = Vec::with_capacity(ncp);
    let mut t_mult = Vec::with_capacity(n);
    for j in 1..400i64 {
        if e_mult.len() == ncp {
            break;
        }
        let x = step * j as f64;
        if free(&used, x) && free(&used, -x) {
            e_mult.push(j);
            used.extend([x, -x]);
        }
    }
    for j in 1..400i64 {
        for s in [1i64, -1] {
            let x = step * (s * j) as f64;
            if t_mult.len() < n && free(&used, x) {
                t_mult.push(s * j);
                used.push(x);
            }
        }
        if t_mult.len() == n {
            break;
        }
    }
    if e_mult.len() < ncp || t_mult.len() < n {
        return Err(GadgetError::Construction("lift window exhausted".into()));
    }
    Ok((e_mult, t_mult))
}

pub(crate) fn kron_block(n: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> RMat {
    Mat::from_fn(4 * n, 4 * n, |i, j| f(i / 4, j / 4, i % 4, j % 4))
}

pub(crate) fn max_abs(x: &RMat) -> f64 {
    x.col_iter().flat_map(|c| c.iter().map(|v| v.abs()).collect::<Vec<_>>()).fold(0.0, f64::max)
}

/// Smallest distance between distinct members of a list of eigenvalues.
pub(crate) fn min_separation(values: &[c64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            best = best.min((a - b).norm());
        }
    }
    best
}

pub fn compile(inst: &SatInstance) -> Result<GadgetOutput> {
    compile_with_options(inst, &CompileOptions::default())
}

/// Assembles `L0 ≅ Q ⊕ diag P` and `A_c ≅ 2πB^c ⊕ 0`, with the degeneracy
/// lift applied and `δ` computed.
pub fn compile_with_options(inst: &SatInstance, opts: &CompileOptions) -> Result<GadgetOutput> {
    let cv = build_clause_vectors(inst, opts.beta)?;
    let n = cv.n;
    let d = 4 * n;
    if d > opts.max_dim {
        return Err(GadgetError::Budget(format!("d = {d} exceeds the limit {}", opts.max_dim)));
    }
    let gap = 2.0 / (9.0 * d as f64);
    let mut budget = lift_budget(&cv, gap, opts);
    let (a_enc, theta) = lifted_encoding(&cv, gap, opts.lift_cap);
    budget.theta = theta.clone();
    let need = slack_requirements(&cv, &a_enc, &budget, opts.slack);
    let sm = build_s(&cv, &need, opts.beta, gap, budget.step)?;
    let s = &sm.s;
    let c = sm.sigma / 4.0;
    let k = -sm.sigma;

    let (w, _) = sym_eigen(s)?;
    let w1: Vec<f64> = w[..n - 1].iter().map(|x| 4.0 * x).collect();
    let ncp = cv.complement.ncols();
    let (e_mult, t_mult) = place_windows(&w1, ncp, n, budget.step)?;
    let t_diag: Vec<f64> = t_mult.iter().map(|&j| budget.step * j as f64 / 4.0).collect();
    let eps: Vec<f64> = e_mult.iter().map(|&j| budget.step * j as f64 / (2.0 * cv.norm_sq)).collect();
    let esym = Mat::from_fn(n, n, |i, j| {
        (0..ncp).map(|q| eps[q] * cv.complement[(i, q)] * cv.complement[(j, q)]).sum::<f64>()
    });
    let vv = cv.vectors.clone() * cv.vectors.transpose();

    let q_enc = kron_block(n, |l, lp, a, b| {
        let diag = if l == lp && a == b { k } else { 0.0 };
        let t = if l == lp { t_diag[l] * TP[a][b] } else { 0.0 };
        diag + s[(l, lp)] + a_enc[(l, lp)] * RHO[a][b] + t + esym[(l, lp)] * ZP[a][b]
    });
    let q_raw_enc =
        kron_block(n, |l, lp, a, b| if l == lp && a == b { k } else { 0.0 } + s[(l, lp)] + vv[(l, lp)] / 3.0 * RHO[a][b]);
    let lift = max_abs(&(&q_enc - &q_raw_enc));
    if lift > opts.lift_cap + 1e-12 {
        return Err(GadgetError::Construction(format!("degeneracy lift changed an entry by {lift}")));
    }

    // Population block: a distinct offset per pair plus a small symmetric
    // coupling between |i,j⟩ and |j,i⟩ keep its eigenvalues simple.
    let pairs = pair_list(d);
    let np = pairs.len() as f64;
    let mut rho = Mat::<f64>::zeros(d, d);
    for (q, &(i, j)) in pairs.iter().enumerate() {
        let r = (q as f64 - (np - 1.0) / 2.0) * 4.0 * gap;
        rho[(i, j)] = r;
        rho[(j, i)] = r;
    }
    let rho_max = pairs.iter().map(|&(i, j)| rho[(i, j)]).fold(0.0, f64::max);
    let diag_q = Mat::from_fn(d, d, |i, j| if i == j { q_enc[(i, i)] } else { 0.0 });
    let lmin = compressed_min(&(&diag_q + &rho))?;
    let q_eigs = complex_eigenvalues(&q_enc)?;
    let min_re = q_eigs.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let alpha = (2.0 * sm.sigma).max(sm.sigma - lmin).max(-min_re + rho_max + 2.0 * gap);
    let p_enc = &build_p(sm.sigma, alpha, d)? + &rho;

    let mut all = q_eigs.clone();
    for &(i, j) in &pairs {
        all.push(c64::new(p_enc[(i, j)] + gap, 0.0));
        all.push(c64::new(p_enc[(i, j)] - gap, 0.0));
    }
    let min_gap = min_separation(&all);
    if min_gap < gap - 1e-10 {
        return Err(GadgetError::Construction(format!("eigenvalue gap {min_gap} below {gap}")));
    }

    let scale = PI / cv.norm_sq;
    let b: Vec<RMat> = (0..cv.n_v)
        .map(|c| {
            kron_block(n, |l, lp, a, bb| {
                -cv.vectors[(l, c)] * cv.vectors[(lp, c)] * RHO[a][bb] / (2.0 * cv.norm_sq)
            })
        })
        .collect();
    let delta = compute_delta(inst, d, gap)?;
    let provenance = Provenance {
        sigma: scale * sm.sigma,
        k: scale * k,
        alpha: scale * alpha,
        delta: scale * delta.delta,
        delta_encoding: delta.delta,
        delta_report: delta,
        scale,
        beta: opts.beta,
        slack: opts.slack,
        column_sum: c,
        nudge: sm.nudge,
        theta,
        t_multiples: t_mult,
        e_multiples: e_mult,
        lift_step: budget.step,
        max_lift: lift,
        min_gap,
        gap_target: gap,
    };
    Ok(GadgetOutput {
        instance: inst.clone(),
        satisfiable: inst.is_satisfiable(),
        n,
        d,
        kinds: cv.kinds.clone(),
        norm_sq: cv.norm_sq,
        vectors: (0..cv.n_v).map(|c| cv.vector(c)).collect(),
        s: sm.s.clone(),
        q: q_enc * scale,
        q_raw: q_raw_enc * scale,
        b,
        p: p_enc * scale,
        coupling: scale * gap,
        delta: scale * provenance.delta_encoding,
        provenance,
    })
}
