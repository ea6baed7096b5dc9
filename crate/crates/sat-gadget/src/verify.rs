//! Ground-truth verification of a compiled gadget at desk scale.

use std::f64::consts::PI;

use faer::Mat;
use log_branches::{branch_family, verify_lemma3, BranchFamily, Lemma3Report};
use markov_decider::{decide_channel, DecideError, DeciderConfig, VerdictKind};
use serde::Serialize;
use superop_core::linalg::c64;
use superop_core::Tolerances;

use crate::construct::{
    build_p, complex_eigenvalues, compressed_min, is_encoding, max_abs, min_separation, pair_list, RMat, SlotKind,
    RHO,
};
use crate::instance::SatInstance;
use crate::output::GadgetOutput;
use crate::{GadgetError, Result};

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Box `‖m‖_∞ ≤ box_bound` of the feasible-m scans.
    pub box_bound: i64,
    /// Run the decider on `e^{L0}`.
    pub decide: bool,
    pub epsilon: f64,
    pub decider_box: u32,
    /// Also run the full superoperator Lemma-3 check when `d` is at most this.
    pub full_lemma3_max_d: usize,
    /// Absolute tolerance for exact readbacks.
    pub tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { box_bound: 3, decide: true, epsilon: 1e-3, decider_box: 3, full_lemma3_max_d: 12, tol: 1e-9 }
    }
}

/// Structural properties of `L0` and `A_c`, checked on the blocks `Q`, `B^c`
/// and `P` they are assembled from.
#[derive(Clone, Debug, Serialize)]
pub struct CompactLemma3 {
    /// Largest `|Σ_i Q_ij|` relative to `‖Q‖_F`: `wᵀQ = 0`.
    pub q_colsum: f64,
    pub b_colsum: f64,
    /// Largest `‖[Q, B^c]‖_F`, relative.
    pub commutator_q: f64,
    /// Largest `‖[B^c, B^c']‖_F`, relative.
    pub commutator_pairs: f64,
    /// Largest `‖B^c B^c'‖_F`, relative.
    pub overlap: f64,
    /// Largest deviation of the spectrum of `2πB^c` from `{±2πi, 0, …}`,
    /// relative to `2π`.
    pub spectrum_deviation: f64,
    /// `‖P − Pᵀ‖` plus `max |P_ii|`: the population block is symmetric with
    /// zero diagonal, so `Γ(L0)` is Hermitian.
    pub p_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full: Option<Lemma3Report>,
    pub pass: bool,
}

/// Inequality readback at the encoding positions.
#[derive(Clone, Debug, Serialize)]
pub struct EncodingReport {
    /// Distinct constants of the clause inequalities, in units of `β²`.
    pub clause_constants: Vec<f64>,
    /// Distinct constants of the boolean inequalities.
    pub boolean_constants: Vec<f64>,
    /// Largest deviation of a constant from its expected value.
    pub constant_error: f64,
    /// Largest deviation of a coefficient from `∓1` on the inequality's
    /// variables and 0 elsewhere.
    pub coefficient_error: f64,
    /// Largest deviation of `B^c` from `−v_c v_cᵀ ⊗ RHO/(2N)` and of the
    /// vectors from their required bands, orthogonality and norm.
    pub structure_error: f64,
    /// Largest entry change of the degeneracy lift, in encoding units.
    pub max_lift: f64,
    /// Smallest distance between eigenvalues of `L0`, in encoding units.
    pub min_gap: f64,
    pub gap_target: f64,
    /// Smallest non-encoding entry of `Q_m` over `m ∈ {0,1}^{n_v}`, in
    /// encoding units.
    pub min_nonencoding_slack: f64,
    /// The encoding inequalities of the lifted `Q` admit exactly the
    /// satisfying assignments in the box.
    pub encoding_matches_sat: bool,
    pub pass: bool,
}

/// `(1 − wwᵀ)(D + P)(1 − wwᵀ) ⪰ 0` via `build_P`.
#[derive(Clone, Debug, Serialize)]
pub struct PopulationReport {
    /// `max |P_ii|`, zero by construction.
    pub diag_max: f64,
    /// Off-diagonal deviation of `P` from `build_P(σ, α, d)` plus the
    /// recorded per-pair offsets, relative to `α`.
    pub build_p_residual: f64,
    pub compressed_min: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(tag = "kind", content = "detail")]
pub enum DecisionOutcome {
    Markovian,
    NonMarkovian,
    /// `e^{L0}` fails the channel check: the promise is not met, which only
    /// happens for unsatisfiable instances.
    NotChannel(String),
    Error(String),
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct AgreementReport {
    pub sat_assignments: Vec<Vec<i64>>,
    pub feasible_assignments: Vec<Vec<i64>>,
    pub decision: DecisionOutcome,
    /// Minimizing branch of the decider, translated to variables.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decider_assignment: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decider_t_star: Option<f64>,
    pub agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GadgetReport {
    pub lemma3: CompactLemma3,
    pub encoding: EncodingReport,
    pub population: PopulationReport,
    pub agreement: AgreementReport,
    pub diagnostics: Vec<String>,
    pub pass: bool,
}

fn frob(x: &RMat) -> f64 {
    x.norm_l2()
}

fn rel(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        x
    }
}

fn col_sums_max(x: &RMat) -> f64 {
    (0..x.ncols()).map(|j| (0..x.nrows()).map(|i| x[(i, j)]).sum::<f64>().abs()).fold(0.0, f64::max)
}

fn compact_lemma3(g: &GadgetOutput, opts: &VerifyOptions) -> Result<CompactLemma3> {
    let qn = frob(&g.q);
    let q_colsum = rel(col_sums_max(&g.q), qn);
    let mut b_colsum = 0.0f64;
    let mut commutator_q = 0.0f64;
    let mut commutator_pairs = 0.0f64;
    let mut overlap = 0.0f64;
    let mut spectrum_deviation = 0.0f64;
    let two_pi = 2.0 * PI;
    for (c, b) in g.b.iter().enumerate() {
        let bn = frob(b);
        b_colsum = b_colsum.max(rel(col_sums_max(b), bn));
        commutator_q = commutator_q.max(rel(frob(&(&g.q * b - b * &g.q)), qn * bn));
        for b2 in &g.b[c + 1..] {
            let bn2 = frob(b2);
            commutator_pairs = commutator_pairs.max(rel(frob(&(b * b2 - b2 * b)), bn * bn2));
            overlap = overlap.max(rel(frob(&(b * b2)), bn * bn2));
        }
        let mut vals = complex_eigenvalues(&(b * two_pi))?;
        vals.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
        let (mut plus, mut minus) = (f64::INFINITY, f64::INFINITY);
        for v in vals.iter().take(2) {
            plus = plus.min((v - c64::new(0.0, two_pi)).norm());
            minus = minus.min((v - c64::new(0.0, -two_pi)).norm());
        }
        let rest = vals.iter().skip(2).map(|v| v.norm()).fold(0.0, f64::max);
        spectrum_deviation = spectrum_deviation.max(plus.max(minus).max(rest) / two_pi);
    }
    let p_residual = max_abs(&(&g.p - g.p.transpose())) + (0..g.d).map(|i| g.p[(i, i)].abs()).fold(0.0, f64::max);
    let full = if g.d <= opts.full_lemma3_max_d {
        let family = BranchFamily { l0: g.l0()?, a: g.a_ops()?, pairs: Vec::new(), complete: true };
        Some(verify_lemma3(&family, 1e-8)?)
    } else {
        None
    };
    let tol = 1e-8;
    let pass = [q_colsum, b_colsum, commutator_q, commutator_pairs, overlap, spectrum_deviation].iter().all(|&x| x <= tol)
        && p_residual == 0.0
        && full.as_ref().is_none_or(|r| r.pass);
    Ok(CompactLemma3 {
        q_colsum,
        b_colsum,
        commutator_q,
        commutator_pairs,
        overlap,
        spectrum_deviation,
        p_residual,
        full,
        pass,
    })
}

/// Slot kind of each slot as implied by the instance alone.
fn slot_kinds(inst: &SatInstance, n: usize) -> Vec<SlotKind> {
    (0..n)
        .map(|l| {
            if l < inst.n_c() {
                SlotKind::Clause
            } else if l < inst.n_c() + inst.n_v {
                SlotKind::Boolean
            } else {
                SlotKind::Fill
            }
        })
        .collect()
}

fn push_distinct(list: &mut Vec<f64>, x: f64) {
    if !list.iter().any(|y| (x - y).abs() < 1e-6) {
        list.push(x);
        list.sort_by(f64::total_cmp);
    }
}

/// Sum of `m_c` times the lifted encoding entries, for each slot; `true`
/// when every encoding entry of `Q_m` is nonnegative.
fn encoding_holds(g: &GadgetOutput, kinds: &[SlotKind], m: &[i64]) -> bool {
    for (l, &kind) in kinds.iter().enumerate() {
        for a in 0..4 {
            for b in 0..4 {
                if !is_encoding(kind, a, b) {
                    continue;
                }
                let (i, j) = (4 * l + a, 4 * l + b);
                let mut x = g.q[(i, j)];
                for (mc, bc) in m.iter().zip(&g.b) {
                    x += 2.0 * PI * *mc as f64 * bc[(i, j)];
                }
                if x < 0.0 {
                    return false;
                }
            }
        }
    }
    true
}

fn same_set(a: &[Vec<i64>], b: &[Vec<i64>]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

/// Every `m` in `[−r, r]^{n}`, in lexicographic order.
fn box_points(n: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|p| (-r..=r).map(move |x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

fn binary_points(n: usize) -> Vec<Vec<i64>> {
    (0u64..1 << n).map(|bits| (0..n).map(|c| ((bits >> c) & 1) as i64).collect()).collect()
}

/// Runs `keep` over the points on all available cores; the result keeps the
/// input order.
fn parallel_filter(points: Vec<Vec<i64>>, keep: impl Fn(&[i64]) -> bool + Sync) -> Vec<Vec<i64>> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let chunk = points.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|part| {
                let keep = &keep;
                s.spawn(move || part.iter().filter(|m| keep(m)).cloned().collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("scan worker panicked")).collect()
    })
}

/// Assignments in the box satisfying the encoding inequalities only.
pub fn encoding_feasible_assignments(g: &GadgetOutput, box_bound: i64) -> Vec<Vec<i64>> {
    let kinds = slot_kinds(&g.instance, g.n);
    parallel_filter(box_points(g.n_v(), box_bound), |m| encoding_holds(g, &kinds, m))
}

/// `min` over `i < j` of the smallest eigenvalue of
/// `[[Q_m(i,j), a], [a, Q_m(j,i)]]`: the off-diagonal part of the ccp
/// condition for the generator `L_m`.
fn pair_margin(g: &GadgetOutput, m: &[i64]) -> f64 {
    let q = g.q_m(m);
    let a = g.coupling;
    let mut best = f64::INFINITY;
    for (i, j) in pair_list(g.d) {
        let (x, y) = (q[(i, j)], q[(j, i)]);
        best = best.min(0.5 * (x + y) - (0.25 * (x - y) * (x - y) + a * a).sqrt());
    }
    best
}

fn population_margin(g: &GadgetOutput, m: &[i64]) -> Result<f64> {
    let q = g.q_m(m);
    let dp = Mat::from_fn(g.d, g.d, |i, j| if i == j { q[(i, i)] } else { g.p[(i, j)] });
    compressed_min(&dp)
}

/// Assignments in the box for which `L0 + Σ m_c A_c` is a Lindblad
/// generator.
pub fn feasible_assignments(g: &GadgetOutput, box_bound: i64) -> Result<Vec<Vec<i64>>> {
    let diag_free = g.b.iter().all(|b| (0..g.d).all(|i| b[(i, i)] == 0.0));
    let zero = vec![0; g.n_v()];
    let pop0 = population_margin(g, &zero)?;
    let points = box_points(g.n_v(), box_bound);
    if diag_free {
        if pop0 < 0.0 {
            return Ok(Vec::new());
        }
        return Ok(parallel_filter(points, |m| pair_margin(g, m) >= 0.0));
    }
    Ok(parallel_filter(points, |m| {
        pair_margin(g, m) >= 0.0 && population_margin(g, m).is_ok_and(|x| x >= 0.0)
    }))
}

fn encoding_report(g: &GadgetOutput, opts: &VerifyOptions, diagnostics: &mut Vec<String>) -> Result<EncodingReport> {
    let inst = &g.instance;
    let u = g.provenance.scale;
    let beta = g.provenance.beta;
    let kinds = slot_kinds(inst, g.n);
    let mut clause_constants = Vec::new();
    let mut boolean_constants = Vec::new();
    let mut constant_error = 0.0f64;
    let mut coefficient_error = 0.0f64;
    for (l, &kind) in kinds.iter().enumerate() {
        let unit = match kind {
            SlotKind::Clause => u * beta * beta,
            SlotKind::Boolean => u,
            SlotKind::Fill => continue,
        };
        for a in 0..4 {
            for b in 0..4 {
                if !is_encoding(kind, a, b) {
                    continue;
                }
                let (i, j) = (4 * l + a, 4 * l + b);
                let constant = g.q_raw[(i, j)] / unit;
                let sign = RHO[a][b];
                let expected = match (kind, sign > 0.0) {
                    (SlotKind::Clause, true) => 1.5,
                    (SlotKind::Clause, false) => -0.5,
                    (_, true) => 7.0 / 6.0,
                    (_, false) => 0.5,
                };
                constant_error = constant_error.max((constant - expected).abs());
                match kind {
                    SlotKind::Clause => push_distinct(&mut clause_constants, constant),
                    _ => push_distinct(&mut boolean_constants, constant),
                }
                for (c, bc) in g.b.iter().enumerate() {
                    let member = match kind {
                        SlotKind::Clause => inst.clauses[l].contains(&(c + 1)),
                        _ => l - inst.n_c() == c,
                    };
                    let want = if member { -sign } else { 0.0 };
                    let got = 2.0 * PI * bc[(i, j)] / unit;
                    let err = (got - want).abs();
                    if err > opts.tol && coefficient_error <= opts.tol {
                        diagnostics.push(format!("slot {l} position ({a},{b}): coefficient of m_{} is {got}, expected {want}", c + 1));
                    }
                    coefficient_error = coefficient_error.max(err);
                }
            }
        }
    }
    if constant_error > opts.tol {
        diagnostics.push(format!("encoding constants deviate by {constant_error}"));
    }

    // Vectors: required bands, orthogonality, common norm; B^c from them.
    let mut structure_error = 0.0f64;
    let nv = g.n_v();
    for c in 0..nv {
        let v = &g.vectors[c];
        for (l, &kind) in kinds.iter().enumerate() {
            let want = match kind {
                SlotKind::Clause if inst.clauses[l].contains(&(c + 1)) => Some(beta),
                SlotKind::Clause => Some(0.0),
                SlotKind::Boolean => Some(if l - inst.n_c() == c { 1.0 } else { 0.0 }),
                SlotKind::Fill => None,
            };
            if let Some(w) = want {
                structure_error = structure_error.max((v[l] - w).abs());
            }
        }
        for c2 in 0..nv {
            let dot: f64 = v.iter().zip(&g.vectors[c2]).map(|(x, y)| x * y).sum();
            let want = if c == c2 { g.norm_sq } else { 0.0 };
            structure_error = structure_error.max((dot - want).abs());
        }
        let want = crate::construct::kron_block(g.n, |l, lp, a, b| -v[l] * v[lp] * RHO[a][b] / (2.0 * g.norm_sq));
        let err = max_abs(&(&g.b[c] - &want));
        if err > opts.tol {
            diagnostics.push(format!("B^{} deviates from its clause-vector form by {err}", c + 1));
        }
        structure_error = structure_error.max(err);
    }
    if (u - PI / g.norm_sq).abs() > 1e-12 * u {
        structure_error = structure_error.max((u - PI / g.norm_sq).abs());
    }

    let max_lift = max_abs(&(&g.q - &g.q_raw)) / u;
    let gap_target = 2.0 / (9.0 * g.d as f64);
    let mut eigs: Vec<c64> = complex_eigenvalues(&g.q)?.into_iter().map(|z| z / u).collect();
    for (i, j) in pair_list(g.d) {
        eigs.push(c64::new((g.p[(i, j)] + g.coupling) / u, 0.0));
        eigs.push(c64::new((g.p[(i, j)] - g.coupling) / u, 0.0));
    }
    let min_gap = min_separation(&eigs);

    let mut min_nonencoding_slack = f64::INFINITY;
    for m in binary_points(nv) {
        let q = g.q_m(&m);
        for i in 0..g.d {
            for j in 0..g.d {
                let (l, lp) = (i / 4, j / 4);
                if i == j || (l == lp && is_encoding(kinds[l], i % 4, j % 4)) {
                    continue;
                }
                min_nonencoding_slack = min_nonencoding_slack.min(q[(i, j)] / u);
            }
        }
    }

    let sat = inst.satisfying_assignments();
    let enc = encoding_feasible_assignments(g, opts.box_bound);
    let encoding_matches_sat = same_set(&enc, &sat);
    if !encoding_matches_sat {
        diagnostics.push(format!("encoding inequalities admit {enc:?}, satisfying assignments are {sat:?}"));
    }
    if max_lift > 1.0 / 18.0 + 1e-12 {
        diagnostics.push(format!("degeneracy lift changed an entry by {max_lift}"));
    }
    if min_gap < gap_target - 1e-10 {
        diagnostics.push(format!("eigenvalue gap {min_gap} below {gap_target}"));
    }
    let pass = constant_error <= opts.tol
        && coefficient_error <= opts.tol
        && structure_error <= opts.tol
        && max_lift <= 1.0 / 18.0 + 1e-12
        && min_gap >= gap_target - 1e-10
        && min_nonencoding_slack >= g.provenance.slack - 1e-9
        && encoding_matches_sat;
    Ok(EncodingReport {
        clause_constants,
        boolean_constants,
        constant_error,
        coefficient_error,
        structure_error,
        max_lift,
        min_gap,
        gap_target,
        min_nonencoding_slack,
        encoding_matches_sat,
        pass,
    })
}

fn population_report(g: &GadgetOutput) -> Result<PopulationReport> {
    let prov = &g.provenance;
    let diag_max = (0..g.d).map(|i| g.p[(i, i)].abs()).fold(0.0, f64::max);
    // The offsets are recorded implicitly: P − build_P must be the per-pair
    // ladder (q − (n_p − 1)/2)·4·gap in stored units.
    let base = build_p(prov.sigma, prov.alpha, g.d)?;
    let pairs = pair_list(g.d);
    let np = pairs.len() as f64;
    let mut residual = 0.0f64;
    for (q, &(i, j)) in pairs.iter().enumerate() {
        let offset = (q as f64 - (np - 1.0) / 2.0) * 4.0 * prov.gap_target * prov.scale;
        residual = residual.max((g.p[(i, j)] - base[(i, j)] - offset).abs());
        residual = residual.max((g.p[(j, i)] - g.p[(i, j)]).abs());
    }
    let build_p_residual = rel(residual, prov.alpha);
    let compressed_min = population_margin(g, &vec![0; g.n_v()])?;
    let pass = diag_max == 0.0 && build_p_residual <= 1e-12 && compressed_min >= 0.0;
    Ok(PopulationReport { diag_max, build_p_residual, compressed_min, pass })
}

/// Translates the decider's branch indices to variables by matching each
/// branch matrix with the `B^c` it equals up to sign.
fn assignment_from_branches(g: &GadgetOutput, family: &BranchFamily, m_star: &[i64]) -> Option<Vec<i64>> {
    let d = g.d;
    let mut out = vec![0; g.n_v()];
    let mut seen = vec![false; g.n_v()];
    for (p, ap) in family.a.iter().enumerate() {
        let block = Mat::from_fn(d, d, |i, j| ap.mat()[(i * d + i, j * d + j)].re / (2.0 * PI));
        let (mut best, mut arg) = (f64::INFINITY, (0, 1.0));
        for (c, bc) in g.b.iter().enumerate() {
            for s in [1.0, -1.0] {
                let err = max_abs(&(&block - bc * s));
                if err < best {
                    best = err;
                    arg = (c, s);
                }
            }
        }
        if best > 1e-4 * max_abs(&g.b[arg.0]) || seen[arg.0] {
            return None;
        }
        seen[arg.0] = true;
        out[arg.0] = (arg.1 as i64) * m_star.get(p).copied().unwrap_or(0);
    }
    seen.iter().all(|&x| x).then_some(out)
}

fn decide(g: &GadgetOutput, opts: &VerifyOptions) -> (DecisionOutcome, Option<Vec<i64>>, Option<f64>) {
    let run = || -> std::result::Result<(DecisionOutcome, Option<Vec<i64>>, Option<f64>), String> {
        let e = g.l0().map_err(|e| e.to_string())?.exp(1.0);
        let cfg = DeciderConfig::new(opts.epsilon).with_box(opts.decider_box);
        match decide_channel(&e, &cfg) {
            Ok(v) => {
                let kind = match v.kind {
                    VerdictKind::Markovian => DecisionOutcome::Markovian,
                    _ => DecisionOutcome::NonMarkovian,
                };
                let assignment = if v.m_star.is_empty() {
                    None
                } else {
                    branch_family(&e, &Tolerances::default())
                        .ok()
                        .and_then(|f| assignment_from_branches(g, &f, &v.m_star))
                };
                let t = v.t_star.is_finite().then_some(v.t_star);
                Ok((kind, assignment, t))
            }
            Err(DecideError::NotChannel(msg)) => Ok((DecisionOutcome::NotChannel(msg), None, None)),
            Err(other) => Ok((DecisionOutcome::Error(other.to_string()), None, None)),
        }
    };
    run().unwrap_or_else(|msg| (DecisionOutcome::Error(msg), None, None))
}

/// Checks (a) the Lemma-3 structure, (b) the inequality encoding, (c) the
/// population block condition, and (d) that SAT brute force, the feasible-m
/// brute force and the decider on `e^{L0}` agree.
pub fn verify_gadget(g: &GadgetOutput, inst: &SatInstance, opts: &VerifyOptions) -> Result<GadgetReport> {
    if &g.instance != inst {
        return Err(GadgetError::Invalid("gadget was compiled from a different instance".into()));
    }
    let mut diagnostics = Vec::new();
    let lemma3 = compact_lemma3(g, opts)?;
    if !lemma3.pass {
        diagnostics.push("Lemma-3 structure violated".into());
    }
    let encoding = encoding_report(g, opts, &mut diagnostics)?;
    let population = population_report(g)?;
    if !population.pass {
        diagnostics.push(format!("population block condition fails (margin {})", population.compressed_min));
    }

    let sat = inst.satisfying_assignments();
    let feasible = feasible_assignments(g, opts.box_bound)?;
    let (decision, decider_assignment, decider_t_star) =
        if opts.decide { decide(g, opts) } else { (DecisionOutcome::Skipped, None, None) };
    let satisfiable = !sat.is_empty();
    let decision_ok = match (&decision, satisfiable) {
        (DecisionOutcome::Skipped, _) => true,
        (DecisionOutcome::Markovian, true) => decider_assignment.as_ref().is_none_or(|m| inst.satisfied_by(m)),
        (DecisionOutcome::NonMarkovian | DecisionOutcome::NotChannel(_), false) => true,
        _ => false,
    };
    if let DecisionOutcome::NotChannel(msg) = &decision {
        diagnostics.push(format!("promise not met, e^L0 is not a channel: {msg}"));
    }
    let agree = same_set(&feasible, &sat) && g.satisfiable == satisfiable && decision_ok;
    if !agree {
        diagnostics.push(format!(
            "disagreement: SAT {sat:?}, feasible {feasible:?}, decision {decision:?}, decider assignment {decider_assignment:?}"
        ));
    }
    let agreement =
        AgreementReport { sat_assignments: sat, feasible_assignments: feasible, decision, decider_assignment, decider_t_star, agree };
    let pass = lemma3.pass && encoding.pass && population.pass && agreement.agree;
    Ok(GadgetReport { lemma3, encoding, population, agreement, diagnostics, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_points_enumerate_lexicographically() {
        let pts = box_points(2, 1);
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], vec![-1, -1]);
        assert_eq!(pts[8], vec![1, 1]);
        assert_eq!(binary_points(2), vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn parallel_filter_keeps_order() {
        let pts = box_points(3, 2);
        let kept = parallel_filter(pts.clone(), |m| m.iter().sum::<i64>() == 1);
        let serial: Vec<_> = pts.into_iter().filter(|m| m.iter().sum::<i64>() == 1).collect();
        assert_eq!(kept, serial);
    }
}
