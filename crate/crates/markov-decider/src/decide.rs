use std::f64::consts::PI;

use cpt_project::nearest_cpt_default;
use lindblad_check::{check_lemma1, repair_generator};
use log_branches::{spectral, BranchFamily, LogError, Partner, SpectralData};
use serde::Serialize;
use superop_core::linalg::{self, c64};
use superop_core::{is_cpt, OmegaData, SuperOp, Tolerances};

use crate::bounds::{solve_delta_tilde, Thresholds};
use crate::minimize::{integer_minimize_with, DEFAULT_BUDGET};
use crate::{DecideError, Result};

#[derive(Clone, Debug)]
pub struct DeciderConfig {
    pub epsilon: f64,
    /// Integer box bound; `None` selects [`default_box`].
    pub m: Option<u32>,
    /// Log precision; `None` selects [`default_kappa`].
    pub kappa: Option<f64>,
    pub budget: usize,
    pub tol: Tolerances,
}

impl DeciderConfig {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, m: None, kappa: None, budget: DEFAULT_BUDGET, tol: Tolerances::default() }
    }

    pub fn with_box(mut self, m: u32) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(DecideError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.m == Some(0) {
            return Err(DecideError::Config("box bound M must be at least 1".into()));
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k.is_finite()) {
                return Err(DecideError::Config(format!("kappa must be positive, got {k}")));
            }
        }
        self.tol.validate().map_err(|e| DecideError::Config(e.to_string()))
    }
}

/// `max(3, ⌈‖L0‖_F / 2π⌉ + 2)`.
pub fn default_box(norm_l0: f64) -> u32 {
    let k = (norm_l0 / (2.0 * PI)).ceil();
    let k = if k.is_finite() { k.min(1e6) as u32 } else { 1_000_000 };
    (k + 2).max(3)
}

/// `min(1e−8, ε / (10(1 + Md)))`, which keeps `exp(κ + Mdκ/2) ≤ e^{0.1}`.
pub fn default_kappa(epsilon: f64, m: u32, d: usize) -> f64 {
    (epsilon / (10.0 * (1.0 + m as f64 * d as f64))).min(1e-8)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    Markovian,
    NonMarkovian,
    NotAChannel,
}

/// Outcome of a decision. Non-finite numbers serialize as `null`.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub t_star: f64,
    pub m_star: Vec<i64>,
    pub delta_tilde: f64,
    pub box_limited: bool,
    pub reason: String,
    pub epsilon: f64,
    pub box_bound: u32,
    pub kappa: f64,
    /// False when the spectrum is degenerate, so the branch family may miss
    /// logarithms. Only Markovian verdicts are returned in that case.
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    /// `‖e^W − E‖_F` for the witness `W`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_to_cpt: Option<f64>,
    /// Index of the first snapshot the family generator fails to reproduce.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<usize>,
    #[serde(skip)]
    pub witness: Option<SuperOp>,
}

impl Verdict {
    fn bare(kind: VerdictKind, reason: &str, cfg: &DeciderConfig) -> Self {
        Self {
            kind,
            t_star: f64::NAN,
            m_star: Vec::new(),
            delta_tilde: f64::NAN,
            box_limited: false,
            reason: reason.into(),
            epsilon: cfg.epsilon,
            box_bound: cfg.m.unwrap_or(0),
            kappa: cfg.kappa.unwrap_or(f64::NAN),
            complete: true,
            thresholds: None,
            witness_distance: None,
            distance_to_cpt: None,
            violation: None,
            witness: None,
        }
    }

    pub fn is_markovian(&self) -> bool {
        self.kind == VerdictKind::Markovian
    }
}

/// Orthogonal projection onto Hermiticity-preserving maps annihilated by
/// `⟨ω|`: `X ↦ (X + F(X))/2`, then `X ↦ (1 − |ω⟩⟨ω|)X`.
pub fn clean_generator(x: &SuperOp) -> SuperOp {
    let sym = x.add_scaled(&x.flip(), 1.0).expect("same dimension").scale(0.5);
    let om = OmegaData::new(x.d());
    let mat = sym.mat() - &om.proj * sym.mat();
    SuperOp::new(x.d(), mat).expect("shape preserved")
}

/// A simple real eigenvalue on the negative axis, if any.
fn simple_negative(s: &SpectralData) -> Option<c64> {
    (0..s.len()).find_map(|k| {
        let lam = s.eigenvalues[k];
        (s.partner[k] == Partner::Real && lam.re < 0.0 && s.cluster_of(k).len() == 1).then_some(lam)
    })
}

fn quarter_gap(s: &SpectralData) -> f64 {
    let logs: Vec<c64> = s.eigenvalues.iter().map(|l| l.ln()).collect();
    let mut gap = f64::INFINITY;
    for j in 0..logs.len() {
        for k in (j + 1)..logs.len() {
            gap = gap.min((logs[j] - logs[k]).norm());
        }
    }
    gap / 4.0
}

fn witness_checked(witness: SuperOp, target: &SuperOp, cfg: &DeciderConfig) -> Result<(SuperOp, f64)> {
    let report = check_lemma1(&witness, &cfg.tol);
    if !report.pass {
        return Err(DecideError::Unsound(format!("witness is not a Lindblad generator: {report:?}")));
    }
    let dist = witness.exp(1.0).distance(target);
    if !(dist <= cfg.epsilon) {
        return Err(DecideError::Unsound(format!("e^W is {dist:e} from the channel, above ε = {:e}", cfg.epsilon)));
    }
    Ok((witness, dist))
}

/// Decides whether the channel `E` is within `ε` of a Markovian channel.
///
/// `t ≤ −a` is Markovian with `L_{m*}` as witness; `t > a` is non-Markovian;
/// in between the witness is `L_{m*}` repaired by `δ̃/(2d‖1−ω‖_F)` when
/// `t > 0`. A simple negative real eigenvalue is non-Markovian outright, since
/// every Hermiticity-preserving log maps it to a conjugate pair.
pub fn decide_channel(e: &SuperOp, cfg: &DeciderConfig) -> Result<Verdict> {
    cfg.validate()?;
    let report = is_cpt(e, &cfg.tol);
    if !report.pass {
        return Err(DecideError::NotChannel(format!(
            "cp margin {:e}, tp residual {:e}",
            report.cp_margin, report.tp_residual
        )));
    }
    let d = e.d();
    let s = spectral(e, &cfg.tol)?;
    let family = match BranchFamily::from_spectral(&s) {
        Ok(f) => f,
        Err(LogError::BranchCut(msg)) => {
            return match simple_negative(&s) {
                Some(lam) => {
                    let mut v = Verdict::bare(VerdictKind::NonMarkovian, "negative-eigenvalue", cfg);
                    v.t_star = f64::INFINITY;
                    v.reason = format!("negative-eigenvalue {}", lam.re);
                    Ok(v)
                }
                None => Err(DecideError::DegenerateChannel(msg)),
            };
        }
        Err(other) => return Err(other.into()),
    };
    let l0 = clean_generator(&family.l0);
    let a: Vec<SuperOp> = family.a.iter().map(clean_generator).collect();
    let norm_l0 = l0.frobenius_norm();
    let sum_a: f64 = a.iter().map(|x| x.frobenius_norm()).sum();
    let m = cfg.m.unwrap_or_else(|| default_box(norm_l0));
    let kappa = cfg.kappa.unwrap_or_else(|| default_kappa(cfg.epsilon, m, d));
    let delta_tilde = solve_delta_tilde(norm_l0, sum_a, m as f64, kappa, d, cfg.epsilon);
    let thresholds = Thresholds::new(delta_tilde, d, m as f64, quarter_gap(&s));
    let min = integer_minimize_with(&l0, &a, m, cfg.budget)?;
    let t = min.t_star;

    let mut v = Verdict::bare(VerdictKind::Markovian, "ccp-margin", cfg);
    v.t_star = t;
    v.m_star = min.m_star.clone();
    v.delta_tilde = delta_tilde;
    v.box_limited = min.box_limited;
    v.box_bound = m;
    v.kappa = kappa;
    v.complete = family.complete;
    v.thresholds = Some(thresholds);

    if t > thresholds.decision {
        if !family.complete {
            return Err(DecideError::DegenerateChannel(format!(
                "no branch with t ≤ {:e} (best t = {t:e}), but the spectrum is degenerate",
                thresholds.decision
            )));
        }
        v.kind = VerdictKind::NonMarkovian;
        v.reason = "ccp-violation".into();
        return Ok(v);
    }
    let mut terms = vec![(linalg::ONE, l0.mat())];
    for (mc, ac) in min.m_star.iter().zip(&a) {
        terms.push((c64::new(*mc as f64, 0.0), ac.mat()));
    }
    let lm = SuperOp::new(d, linalg::lincomb(&terms))?;
    let witness = if t > -thresholds.decision && t > 0.0 {
        v.reason = "boundary-repair".into();
        repair_generator(&lm, thresholds.repair)?
    } else {
        if t > -thresholds.decision {
            v.reason = "boundary".into();
        }
        lm
    };
    let (w, dist) = witness_checked(witness, e, cfg)?;
    v.witness = Some(w);
    v.witness_distance = Some(dist);
    Ok(v)
}

/// Decides a map that need only be close to a channel. Maps farther than `ε'`
/// from every CPT map are `NotAChannel`. Otherwise the nearest CPT map is
/// decided with budget `min(2ε/3, ε − dist)`; inputs that already pass the
/// CPT check are decided directly with the full `ε`.
pub fn decide_map(e: &SuperOp, epsilon: f64, epsilon_prime: f64, cfg: &DeciderConfig) -> Result<Verdict> {
    if !(epsilon > epsilon_prime && epsilon_prime > 0.0) {
        return Err(DecideError::Config(format!("need ε > ε' > 0, got ε = {epsilon}, ε' = {epsilon_prime}")));
    }
    let cfg = cfg.with_epsilon(epsilon);
    cfg.validate()?;
    if is_cpt(e, &cfg.tol).pass {
        let mut v = decide_channel(e, &cfg)?;
        v.distance_to_cpt = Some(0.0);
        return Ok(v);
    }
    let proj = nearest_cpt_default(e)?;
    if proj.distance > epsilon_prime {
        let mut v = Verdict::bare(VerdictKind::NotAChannel, "not-a-channel", &cfg);
        v.distance_to_cpt = Some(proj.distance);
        return Ok(v);
    }
    let inner = cfg.with_epsilon((2.0 * epsilon / 3.0).min(epsilon - proj.distance));
    let mut v = decide_channel(&proj.projected, &inner)?;
    v.epsilon = epsilon;
    v.distance_to_cpt = Some(proj.distance);
    if let Some(w) = &v.witness {
        v.witness_distance = Some(w.exp(1.0).distance(e));
    }
    Ok(v)
}

/// Decides whether snapshots `(t_i, E_i)` share one generator. The snapshot
/// with the smallest time is decided first; its witness `W` gives the
/// candidate `W / t_0`, which must reproduce every snapshot to `ε`. The
/// witness of a Markovian family verdict is that per-unit-time generator.
pub fn decide_family(snapshots: &[(f64, SuperOp)], cfg: &DeciderConfig) -> Result<Verdict> {
    cfg.validate()?;
    if snapshots.is_empty() {
        return Err(DecideError::Config("no snapshots".into()));
    }
    for (i, (t, _)) in snapshots.iter().enumerate() {
        if !(*t > 0.0 && t.is_finite()) {
            return Err(DecideError::Config(format!("snapshot {i} has non-positive time {t}")));
        }
        if snapshots[..i].iter().any(|(s, _)| s == t) {
            return Err(DecideError::Config(format!("snapshot time {t} is repeated")));
        }
    }
    let first = (0..snapshots.len()).min_by(|&i, &j| snapshots[i].0.total_cmp(&snapshots[j].0)).expect("nonempty");
    let (t0, e0) = &snapshots[first];
    let mut v = decide_channel(e0, cfg)?;
    if !v.is_markovian() {
        v.violation = Some(first);
        return Ok(v);
    }
    let generator = v.witness.take().expect("Markovian verdicts carry a witness").scale(1.0 / t0);
    let mut worst = 0.0f64;
    for (i, (t, e)) in snapshots.iter().enumerate() {
        let dist = generator.exp(*t).distance(e);
        if !(dist <= cfg.epsilon) {
            v.kind = VerdictKind::NonMarkovian;
            v.reason = format!("inconsistent-snapshot {i} (distance {dist:e})");
            v.violation = Some(i);
            v.witness_distance = None;
            return Ok(v);
        }
        worst = worst.max(dist);
    }
    v.witness_distance = Some(worst);
    v.witness = Some(generator);
    Ok(v)
}
