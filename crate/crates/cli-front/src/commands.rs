//! One function per subcommand; each returns the exit code and the report.

use classical_embed::{decide_embeddable, EmbedKind, StochasticMatrix};
use markov_decider::{decide_channel, decide_map, DecideError, DeciderConfig, Verdict, VerdictKind};
use sat_gadget::{compile, verify_gadget, VerifyOptions};
use serde::Serialize;
use superop_core::io::MatrixDoc;
use superop_core::{random_channel, SuperOp, Tolerances};

use crate::input;
use crate::render;
use crate::{Cli, CliError, Command, Format, Options, Result, EXIT_BUDGET, EXIT_INVALID, EXIT_NEGATIVE, EXIT_POSITIVE};

pub(crate) fn execute(cli: &Cli) -> Result<(i32, String)> {
    let o = &cli.opts;
    match &cli.command {
        Command::CheckChannel { file } => check_channel(file, o),
        Command::CheckMap { file } => check_map(file, o),
        Command::CheckStochastic { file } => check_stochastic(file, o),
        Command::ProjectCpt { file } => project_cpt(file, o),
        Command::Gadget { file } => gadget(file, o),
        Command::VerifyGadget { file } => verify(file, o),
        Command::LindbladBuild { file } => lindblad_build(file, o),
        Command::SampleMeasure => {
            let r = sample_measure(o.dim, o.samples, o.seed, o.epsilon, o.box_bound, o.threads)?;
            Ok((EXIT_POSITIVE, render::report(&r, o.format)))
        }
    }
}

fn decider_config(o: &Options, epsilon: f64) -> DeciderConfig {
    let mut cfg = DeciderConfig::new(epsilon);
    if let Some(m) = o.box_bound {
        cfg = cfg.with_box(m);
    }
    if let Some(k) = o.kappa {
        cfg = cfg.with_kappa(k);
    }
    cfg
}

fn verdict_code(kind: VerdictKind) -> i32 {
    match kind {
        VerdictKind::Markovian => EXIT_POSITIVE,
        VerdictKind::NonMarkovian => EXIT_NEGATIVE,
        VerdictKind::NotAChannel => EXIT_INVALID,
    }
}

/// Record of a `--jitter` perturbation.
#[derive(Clone, Debug, Serialize)]
pub struct JitterInfo {
    pub norm: f64,
    pub seed: u64,
    pub mixing_weight: f64,
    pub epsilon_requested: f64,
    pub epsilon_used: f64,
}

#[derive(Serialize)]
struct ChannelReport<'a> {
    #[serde(flatten)]
    verdict: &'a Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    jitter: Option<JitterInfo>,
}

#[derive(Serialize)]
struct NotChannelReport<'a> {
    kind: &'static str,
    reason: &'a str,
    epsilon: f64,
}

/// Mixes `e` with the random channel `R` drawn from `seed`:
/// `(1 − s)E + sR` with `s` chosen so the result is at Frobenius distance
/// `norm` from `e`. A convex mixture of channels stays a channel.
pub fn jitter_channel(e: &SuperOp, norm: f64, seed: u64) -> Result<(SuperOp, f64)> {
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(CliError::Invalid(format!("--jitter must be positive, got {norm}")));
    }
    let r = random_channel(e.d(), seed)?;
    let gap = r.distance(e);
    if gap == 0.0 || norm > gap {
        return Err(CliError::Invalid(format!("--jitter {norm} exceeds the distance {gap} to the random channel")));
    }
    let s = norm / gap;
    Ok((e.scale(1.0 - s).add_scaled(&r, s)?, s))
}

/// Applies `--jitter` if given and returns the map with the remaining ε.
fn prepare(e: SuperOp, o: &Options) -> Result<(SuperOp, f64, Option<JitterInfo>)> {
    let Some(norm) = o.jitter else { return Ok((e, o.epsilon, None)) };
    let (e, s) = jitter_channel(&e, norm, o.seed)?;
    let eps = o.epsilon - norm;
    if eps <= 0.0 {
        return Err(CliError::Invalid(format!("--jitter {norm} leaves no precision from epsilon {}", o.epsilon)));
    }
    let info = JitterInfo { norm, seed: o.seed, mixing_weight: s, epsilon_requested: o.epsilon, epsilon_used: eps };
    Ok((e, eps, Some(info)))
}

fn verdict_output(v: &Verdict, jitter: Option<JitterInfo>, format: Format) -> (i32, String) {
    let text = match format {
        Format::Json => render::json(&ChannelReport { verdict: v, jitter: jitter.clone() }),
        Format::Text => render::verdict_text(v, jitter.as_ref()),
    };
    (verdict_code(v.kind), text)
}

fn not_channel(reason: &str, epsilon: f64, format: Format) -> (i32, String) {
    (EXIT_INVALID, render::report(&NotChannelReport { kind: "NotAChannel", reason, epsilon }, format))
}

fn check_channel(file: &str, o: &Options) -> Result<(i32, String)> {
    let (e, eps, jitter) = prepare(input::superop(file)?, o)?;
    match decide_channel(&e, &decider_config(o, eps)) {
        Ok(v) => Ok(verdict_output(&v, jitter, o.format)),
        Err(DecideError::NotChannel(msg)) => Ok(not_channel(&msg, eps, o.format)),
        Err(err) => Err(err.into()),
    }
}

fn check_map(file: &str, o: &Options) -> Result<(i32, String)> {
    let (e, eps, jitter) = prepare(input::superop(file)?, o)?;
    let eps_prime = o.epsilon_prime.unwrap_or(eps / 2.0);
    let v = decide_map(&e, eps, eps_prime, &decider_config(o, eps))?;
    Ok(verdict_output(&v, jitter, o.format))
}

fn check_stochastic(file: &str, o: &Options) -> Result<(i32, String)> {
    let p = StochasticMatrix::from_rows(&input::real_rows(file)?, classical_embed::DEFAULT_TOL)?;
    let v = decide_embeddable(&p, o.epsilon, o.box_bound)?;
    let code = match v.kind {
        EmbedKind::Embeddable => EXIT_POSITIVE,
        EmbedKind::NotEmbeddable => EXIT_NEGATIVE,
    };
    Ok((code, render::report(&v, o.format)))
}

#[derive(Serialize)]
struct ProjectReport<'a> {
    #[serde(flatten)]
    result: &'a cpt_project::ProjectionResult,
    projected: MatrixDoc,
}

fn project_cpt(file: &str, o: &Options) -> Result<(i32, String)> {
    let e = input::superop(file)?;
    let r = cpt_project::nearest_cpt_default(&e)?;
    let code = if r.converged && r.feasibility.pass { EXIT_POSITIVE } else { EXIT_BUDGET };
    let doc = input::superop_doc(&r.projected);
    Ok((code, render::report(&ProjectReport { result: &r, projected: doc }, o.format)))
}

#[derive(Serialize)]
struct GadgetSummary<'a> {
    instance: String,
    satisfiable: bool,
    n: usize,
    d: usize,
    delta: f64,
    provenance: &'a sat_gadget::Provenance,
}

fn gadget(file: &str, o: &Options) -> Result<(i32, String)> {
    let inst = input::sat(file)?;
    let g = compile(&inst)?;
    let text = match o.format {
        Format::Json => format!("{}\n", g.to_json()),
        Format::Text => render::report(
            &GadgetSummary {
                instance: inst.to_string(),
                satisfiable: g.satisfiable,
                n: g.n,
                d: g.d,
                delta: g.delta,
                provenance: &g.provenance,
            },
            Format::Text,
        ),
    };
    Ok((EXIT_POSITIVE, text))
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    satisfiable: bool,
    n: usize,
    d: usize,
    #[serde(flatten)]
    report: &'a sat_gadget::GadgetReport,
}

fn verify(file: &str, o: &Options) -> Result<(i32, String)> {
    let inst = input::sat(file)?;
    let g = compile(&inst)?;
    let mut opts = VerifyOptions { epsilon: o.epsilon, ..VerifyOptions::default() };
    if let Some(m) = o.box_bound {
        opts.box_bound = m as i64;
        opts.decider_box = m;
    }
    let r = verify_gadget(&g, &inst, &opts)?;
    let code = if r.pass { EXIT_POSITIVE } else { EXIT_NEGATIVE };
    Ok((code, render::report(&VerifyReport { satisfiable: g.satisfiable, n: g.n, d: g.d, report: &r }, o.format)))
}

#[derive(Serialize)]
struct LindbladReport {
    lemma1: lindblad_check::Lemma1Report,
    generator: MatrixDoc,
}

fn lindblad_build(file: &str, o: &Options) -> Result<(i32, String)> {
    let data = input::lindblad(file)?;
    let l = lindblad_check::build_from_gks(&data)?;
    let lemma1 = lindblad_check::check_lemma1(&l, &Tolerances::default());
    let code = if lemma1.pass { EXIT_POSITIVE } else { EXIT_NEGATIVE };
    Ok((code, render::report(&LindbladReport { lemma1, generator: input::superop_doc(&l) }, o.format)))
}

/// Counts of verdicts over random channels. Sample `i` is the channel drawn
/// from seed `seed + i`, so the counts do not depend on the thread count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureReport {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub markovian: usize,
    pub non_markovian: usize,
    pub not_channel: usize,
    pub errors: usize,
    pub markovian_fraction: f64,
    pub non_markovian_fraction: f64,
}

#[derive(Clone, Copy, Default)]
struct Tally {
    markovian: usize,
    non_markovian: usize,
    not_channel: usize,
    errors: usize,
}

impl Tally {
    fn add(&mut self, other: Tally) {
        self.markovian += other.markovian;
        self.non_markovian += other.non_markovian;
        self.not_channel += other.not_channel;
        self.errors += other.errors;
    }
}

pub fn sample_measure(
    dim: usize,
    samples: usize,
    seed: u64,
    epsilon: f64,
    box_bound: Option<u32>,
    threads: usize,
) -> Result<MeasureReport> {
    if samples == 0 {
        return Err(CliError::Invalid("--samples must be positive".into()));
    }
    if dim < 2 {
        return Err(CliError::Invalid(format!("--dim must be at least 2, got {dim}")));
    }
    let mut cfg = DeciderConfig::new(epsilon);
    if let Some(m) = box_bound {
        cfg = cfg.with_box(m);
    }
    cfg.validate()?;
    let threads = match threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        t => t,
    }
    .min(samples);
    let one = |i: usize| -> Result<Tally> {
        let e = random_channel(dim, seed.wrapping_add(i as u64))?;
        let mut t = Tally::default();
        match decide_channel(&e, &cfg) {
            Ok(v) => match v.kind {
                VerdictKind::Markovian => t.markovian += 1,
                VerdictKind::NonMarkovian => t.non_markovian += 1,
                VerdictKind::NotAChannel => t.not_channel += 1,
            },
            Err(DecideError::NotChannel(_)) => t.not_channel += 1,
            Err(_) => t.errors += 1,
        }
        Ok(t)
    };
    let parts: Vec<Result<Tally>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let one = &one;
                scope.spawn(move || {
                    let mut acc = Tally::default();
                    for i in (w..samples).step_by(threads) {
                        acc.add(one(i)?);
                    }
                    Ok(acc)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampling worker panicked")).collect()
    });
    let mut total = Tally::default();
    for p in parts {
        total.add(p?);
    }
    let n = samples as f64;
    Ok(MeasureReport {
        dim,
        samples,
        seed,
        epsilon,
        markovian: total.markovian,
        non_markovian: total.non_markovian,
        not_channel: total.not_channel,
        errors: total.errors,
        markovian_fraction: total.markovian as f64 / n,
        non_markovian_fraction: total.non_markovian as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jitter_moves_by_exactly_its_norm_and_stays_a_channel() {
        let e = SuperOp::identity(2);
        let (j, s) = jitter_channel(&e, 0.05, 4).unwrap();
        assert!((j.distance(&e) - 0.05).abs() < 1e-14);
        assert!(s > 0.0 && s < 1.0);
        assert!(superop_core::is_cpt(&j, &Tolerances::default()).pass);
        assert!(jitter_channel(&e, 0.0, 4).is_err());
        assert!(jitter_channel(&e, 100.0, 4).is_err());
    }

    #[test]
    fn verdict_kinds_map_to_exit_codes() {
        assert_eq!(verdict_code(VerdictKind::Markovian), 0);
        assert_eq!(verdict_code(VerdictKind::NonMarkovian), 1);
        assert_eq!(verdict_code(VerdictKind::NotAChannel), 2);
    }
}
