use faer::Mat;
use lindblad_check::{build_from_gks, check_lemma1, random_generator, LindbladData};
use log_branches::branch_family;
use markov_decider::minimize::brute_force_minimize;
use markov_decider::{
    clean_generator, decide_channel, decide_family, decide_map, exp_continuity_bound, integer_minimize,
    integer_minimize_with, log_continuity_bound, solve_delta_tilde, DecideError, DeciderConfig, VerdictKind,
};
use proptest::prelude::*;
use rand::Rng;
use superop_core::linalg::{self, c64, CMat, ONE, ZERO};
use superop_core::random::{ginibre, rng_from_seed};
use superop_core::{random_channel, SuperOp, Tolerances};

fn rotation(theta: f64) -> SuperOp {
    let u = Mat::from_fn(2, 2, |i, j| {
        if i != j {
            ZERO
        } else {
            c64::from_polar(1.0, if i == 0 { -theta / 2.0 } else { theta / 2.0 })
        }
    });
    SuperOp::from_unitary(u.as_ref()).unwrap()
}

fn transpose_map() -> SuperOp {
    let mut m = linalg::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            m[(i * 2 + j, j * 2 + i)] = ONE;
        }
    }
    SuperOp::new(2, m).unwrap()
}

fn markovian_channel(d: usize, norm: f64, seed: u64) -> (SuperOp, SuperOp) {
    let mut rng = rng_from_seed(seed);
    let l = random_generator(d, norm, &mut rng);
    (l.exp(1.0), l)
}

#[test]
fn exp_bound_holds_on_random_pairs() {
    let mut rng = rng_from_seed(11);
    for _ in 0..200 {
        let n = rng.random_range(1..=16);
        let s: f64 = rng.random_range(0.01..2.0);
        let a = linalg::scaled(ginibre(n, n, &mut rng).as_ref(), c64::new(s / n as f64, 0.0));
        let p: f64 = rng.random_range(1e-4..1.0);
        let b = &a + &linalg::scaled(ginibre(n, n, &mut rng).as_ref(), c64::new(p / n as f64, 0.0));
        let lhs = linalg::frobenius((&linalg::expm(a.as_ref()) - &linalg::expm(b.as_ref())).as_ref());
        let bound = exp_continuity_bound(linalg::frobenius(a.as_ref()), linalg::frobenius((&a - &b).as_ref()));
        assert!(lhs <= bound * (1.0 + 1e-12), "{lhs} > {bound}");
    }
}

/// `sup_{λ ≤ 0} (1 − λ)‖(λ − D)⁻¹‖_F` for a diagonal `D`, on a log grid.
fn resolvent_constant(diag: &[c64]) -> f64 {
    let mut best = (diag.len() as f64).sqrt();
    let f = |lam: f64| (1.0 - lam) * diag.iter().map(|a| 1.0 / (c64::new(lam, 0.0) - a).norm_sqr()).sum::<f64>().sqrt();
    best = best.max(f(0.0));
    for i in 0..4000 {
        let lam = -(10f64).powf(-8.0 + 14.0 * i as f64 / 4000.0);
        best = best.max(f(lam));
    }
    best * 1.01
}

#[test]
fn log_bound_holds_on_commuting_pairs() {
    let mut rng = rng_from_seed(12);
    let mut checked = 0;
    for _ in 0..300 {
        let n = rng.random_range(1..=6);
        let a: Vec<c64> = (0..n)
            .map(|_| c64::from_polar(rng.random_range(0.2..3.0), rng.random_range(-2.5..2.5)))
            .collect();
        let p: f64 = rng.random_range(1e-6..0.05);
        let b: Vec<c64> = a
            .iter()
            .map(|x| x * c64::new(1.0 + p * rng.random_range(-1.0..1.0), p * rng.random_range(-1.0..1.0)))
            .collect();
        let norm = |v: &[c64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let diff: Vec<c64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let (na, nd) = (norm(&a), norm(&diff));
        // Alternate M and k until k·A, k·B lie in the resolvent class of M.
        let mut k = 1.0;
        let mut ok = false;
        for _ in 0..50 {
            let ka: Vec<c64> = a.iter().map(|x| x * k).collect();
            let kb: Vec<c64> = b.iter().map(|x| x * k).collect();
            let m = resolvent_constant(&ka).max(resolvent_constant(&kb));
            let k_new = markov_decider::bounds::log_rescaling(na, nd, m);
            if k <= k_new {
                let logs: Vec<c64> = a.iter().zip(&b).map(|(x, y)| x.ln() - y.ln()).collect();
                let bound = log_continuity_bound(na, nd, m);
                assert!(norm(&logs) <= bound, "{} > {bound}", norm(&logs));
                ok = true;
                break;
            }
            k = k_new;
        }
        checked += ok as usize;
    }
    assert!(checked >= 250, "{checked}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn delta_tilde_reproduces_epsilon(l0 in 0.0f64..20.0, sa in 0.0f64..20.0, m in 1u32..6,
                                      kappa in 1e-12f64..1e-6, d in 2usize..5, le in -8.0f64..2.0) {
        let eps = 10f64.powf(le);
        let x = solve_delta_tilde(l0, sa, m as f64, kappa, d, eps);
        let ln_c = markov_decider::bounds::log_prefactor(l0, sa, m as f64, kappa, d);
        prop_assert!(x > 0.0);
        let lhs = (ln_c + x.ln() + x).exp();
        prop_assert!((lhs - eps).abs() <= 1e-10 * eps);
    }
}

#[test]
fn minimizer_matches_brute_force() {
    let tol = Tolerances::default();
    let mut cases = 0;
    for seed in 0..40 {
        let e = random_channel(2, seed).unwrap();
        let Ok(b) = branch_family(&e, &tol) else { continue };
        let l0 = clean_generator(&b.l0);
        let a: Vec<SuperOp> = b.a.iter().map(clean_generator).collect();
        let fast = integer_minimize(&l0, &a, 3).unwrap();
        let (t, m) = brute_force_minimize(&l0, &a, 3).unwrap();
        assert!((fast.t_star - t).abs() <= 1e-10 * (1.0 + t.abs()), "seed {seed}: {} vs {t}", fast.t_star);
        assert_eq!(fast.m_star, m, "seed {seed}");
        cases += 1;
    }
    assert!(cases >= 20);
}

#[test]
fn rotation_branches_are_scanned() {
    // A unitary rotation: every branch is Hamiltonian, so the best margin
    // is zero, attained at the principal branch.
    let e = rotation(1.0);
    let b = branch_family(&e, &Tolerances::default()).unwrap();
    let l0 = clean_generator(&b.l0);
    let a: Vec<SuperOp> = b.a.iter().map(clean_generator).collect();
    let r = integer_minimize(&l0, &a, 4).unwrap();
    assert!(r.t_star.abs() < 1e-12);
    assert_eq!(r.m_star, vec![0]);
    let (t, _) = brute_force_minimize(&l0, &a, 4).unwrap();
    assert!((t - r.t_star).abs() < 1e-12);
}

#[test]
fn budget_error_carries_incumbent() {
    let (e, _) = markovian_channel(3, 2.0, 5);
    let b = branch_family(&e, &Tolerances::default()).unwrap();
    let l0 = clean_generator(&b.l0);
    let a: Vec<SuperOp> = b.a.iter().map(clean_generator).collect();
    assert!(!a.is_empty());
    match integer_minimize_with(&l0, &a, 3, 1) {
        Err(DecideError::Budget(inc)) => {
            assert!(!inc.optimal);
            assert_eq!(inc.m_star.len(), a.len());
            assert!(inc.t_star.is_finite());
        }
        other => panic!("expected budget error, got {other:?}"),
    }
}

#[test]
fn small_generators_round_trip_at_zero_branch() {
    for seed in 0..20 {
        let d = 2 + (seed % 2) as usize;
        let (e, _) = markovian_channel(d, 2.5, 100 + seed);
        let b = branch_family(&e, &Tolerances::default()).unwrap();
        let l0 = clean_generator(&b.l0);
        let a: Vec<SuperOp> = b.a.iter().map(clean_generator).collect();
        let r = integer_minimize(&l0, &a, 3).unwrap();
        let zero = integer_minimize(&l0, &a, 0).unwrap();
        assert!(zero.t_star <= 1e-10, "seed {seed}: {}", zero.t_star);
        assert!(r.t_star <= zero.t_star);
    }
}

#[test]
fn markovian_channels_get_valid_witnesses() {
    let cfg = DeciderConfig::new(1e-3);
    for seed in 0..20 {
        let d = 2 + (seed % 2) as usize;
        let (e, _) = markovian_channel(d, 3.0, 200 + seed);
        let v = decide_channel(&e, &cfg).unwrap();
        assert_eq!(v.kind, VerdictKind::Markovian, "seed {seed}: {v:?}");
        let w = v.witness.as_ref().unwrap();
        assert!(check_lemma1(w, &cfg.tol).pass);
        assert!(w.exp(1.0).distance(&e) <= 1e-3);
    }
}

#[test]
fn depolarizing_from_gks_data() {
    // L(ρ) = γ Σ_k (σ_k ρ σ_k − ρ) gives transfer eigenvalues e^{−4γ}; p = ½
    // needs e^{−4γ} = ½.
    let gamma = 2f64.ln() / 4.0;
    let i = c64::new(0.0, 1.0);
    let paulis: Vec<CMat> = vec![
        Mat::from_fn(2, 2, |r, c| if r != c { ONE } else { ZERO }),
        Mat::from_fn(2, 2, |r, c| match (r, c) {
            (0, 1) => -i,
            (1, 0) => i,
            _ => ZERO,
        }),
        Mat::from_fn(2, 2, |r, c| match (r, c) {
            (0, 0) => ONE,
            (1, 1) => -ONE,
            _ => ZERO,
        }),
    ];
    let data = LindbladData {
        h: linalg::zeros(2, 2),
        g: linalg::scaled(linalg::identity(3).as_ref(), c64::new(gamma, 0.0)),
        f: paulis,
    };
    let l = build_from_gks(&data).unwrap();
    let e = l.exp(1.0);
    let rho = Mat::from_fn(2, 2, |r, c| c64::new(0.3 + r as f64 * 0.4, (r as f64 - c as f64) * 0.1));
    let out = e.apply(rho.as_ref()).unwrap();
    let expect = &linalg::scaled(rho.as_ref(), c64::new(0.5, 0.0)) + &linalg::scaled(linalg::identity(2).as_ref(), c64::new(0.25, 0.0));
    assert!(linalg::frobenius((&out - &expect).as_ref()) < 1e-12);
    let v = decide_channel(&e, &DeciderConfig::new(1e-3)).unwrap();
    assert_eq!(v.kind, VerdictKind::Markovian);
}

#[test]
fn non_markovian_verdicts_confirmed_by_full_scan() {
    let cfg = DeciderConfig::new(1e-2).with_box(3);
    let tol = Tolerances::default();
    let mut seen = 0;
    for seed in 0..60 {
        let e = random_channel(2, seed).unwrap();
        let Ok(v) = decide_channel(&e, &cfg) else { continue };
        if v.kind != VerdictKind::NonMarkovian || !v.t_star.is_finite() {
            continue;
        }
        let b = branch_family(&e, &tol).unwrap();
        let l0 = clean_generator(&b.l0);
        let a: Vec<SuperOp> = b.a.iter().map(clean_generator).collect();
        let (t, _) = brute_force_minimize(&l0, &a, 3).unwrap();
        assert!(t > 0.0, "seed {seed}");
        seen += 1;
    }
    assert!(seen > 0);
}

#[test]
fn verdicts_are_monotone_in_epsilon() {
    let eps = [1e-6, 1e-4, 1e-2, 1e-1];
    let mut corpus: Vec<SuperOp> = (0..15).map(|s| random_channel(2, s).unwrap()).collect();
    corpus.extend((0..5).map(|s| markovian_channel(2, 2.0, 300 + s).0));
    for e in &corpus {
        let mut was_markovian = false;
        for &x in &eps {
            let Ok(v) = decide_channel(e, &DeciderConfig::new(x).with_box(3)) else { continue };
            if was_markovian {
                assert!(v.is_markovian());
            }
            was_markovian |= v.is_markovian();
        }
    }
}

#[test]
fn maps_far_from_channels_are_rejected() {
    let cfg = DeciderConfig::new(0.5);
    let v = decide_map(&transpose_map(), 0.5, 0.1, &cfg).unwrap();
    assert_eq!(v.kind, VerdictKind::NotAChannel);
    assert!(v.distance_to_cpt.unwrap() > 0.1);
    assert!(matches!(decide_map(&transpose_map(), 0.1, 0.5, &cfg), Err(DecideError::Config(_))));
}

#[test]
fn cpt_maps_get_the_channel_verdict() {
    let cfg = DeciderConfig::new(1e-2);
    for seed in 0..10 {
        let e = random_channel(2, seed).unwrap();
        let (Ok(a), Ok(b)) = (decide_channel(&e, &cfg), decide_map(&e, 1e-2, 1e-3, &cfg)) else { continue };
        assert_eq!(a.kind, b.kind);
        assert_eq!(a.m_star, b.m_star);
    }
}

#[test]
fn perturbed_maps_keep_their_verdict() {
    let cfg = DeciderConfig::new(1e-2);
    let mut rng = rng_from_seed(77);
    let mut compared = 0;
    let mut corpus: Vec<SuperOp> = (0..10).map(|s| random_channel(2, s).unwrap()).collect();
    corpus.extend((0..5).map(|s| markovian_channel(2, 2.0, 400 + s).0));
    for e in corpus {
        let Ok(base) = decide_channel(&e, &cfg) else { continue };
        let noise = ginibre(4, 4, &mut rng);
        let noise = linalg::scaled(noise.as_ref(), c64::new(1e-6 / linalg::frobenius(noise.as_ref()), 0.0));
        let pert = SuperOp::new(2, e.mat() + &noise).unwrap();
        let v = decide_map(&pert, 1e-2, 1e-3, &cfg).unwrap();
        assert_eq!(v.kind, base.kind);
        if let Some(d) = v.witness_distance {
            assert!(d <= 1e-2);
        }
        compared += 1;
    }
    assert!(compared >= 8);
}

#[test]
fn family_semigroup_consistency() {
    let cfg = DeciderConfig::new(1e-3);
    let (e, l) = markovian_channel(2, 2.0, 500);
    let v = decide_family(&[(1.0, e.clone()), (2.0, e.compose(&e).unwrap())], &cfg).unwrap();
    assert_eq!(v.kind, VerdictKind::Markovian);

    let off = SuperOp::new(2, e.compose(&e).unwrap().mat() + &linalg::scaled(linalg::identity(4).as_ref(), c64::new(5e-3, 0.0))).unwrap();
    let v = decide_family(&[(1.0, e.clone()), (2.0, off)], &cfg).unwrap();
    assert_eq!(v.kind, VerdictKind::NonMarkovian);
    assert_eq!(v.violation, Some(1));

    let snaps: Vec<(f64, SuperOp)> = [1.7, 0.5, 1.0].iter().map(|&t| (t, l.exp(t))).collect();
    let v = decide_family(&snaps, &cfg).unwrap();
    assert_eq!(v.kind, VerdictKind::Markovian);
    assert!(v.witness.unwrap().distance(&l) < 1e-8);

    assert!(decide_family(&[(1.0, e.clone()), (1.0, e.clone())], &cfg).is_err());
    assert!(decide_family(&[(-1.0, e)], &cfg).is_err());
}

#[test]
fn verdict_json_shape() {
    let v = decide_channel(&SuperOp::identity(2), &DeciderConfig::new(0.1)).unwrap();
    let j = serde_json::to_value(&v).unwrap();
    for key in ["kind", "t_star", "m_star", "delta_tilde", "box_limited"] {
        assert!(j.get(key).is_some(), "{key}");
    }
    assert_eq!(j["kind"], "Markovian");
}

#[test]
fn pruned_search_matches_brute_force_with_many_pairs() {
    let tol = Tolerances::default();
    let mut cases = 0;
    for seed in 0..30 {
        let e = random_channel(4, seed).unwrap();
        let Ok(b) = branch_family(&e, &tol) else { continue };
        if b.num_pairs() <= markov_decider::minimize::EXHAUSTIVE_VARS {
            continue;
        }
        let l0 = clean_generator(&b.l0);
        let a: Vec<SuperOp> = b.a.iter().map(clean_generator).collect();
        let fast = integer_minimize(&l0, &a, 1).unwrap();
        let (t, m) = brute_force_minimize(&l0, &a, 1).unwrap();
        assert!((fast.t_star - t).abs() <= 1e-10 * (1.0 + t.abs()), "seed {seed}: {} vs {t}", fast.t_star);
        assert_eq!(fast.m_star, m);
        cases += 1;
        if cases == 3 {
            break;
        }
    }
    assert!(cases > 0);
}
