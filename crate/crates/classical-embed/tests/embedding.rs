use classical_embed::{
    check_qmatrix, classical_branches, decide_embeddable, expm_real, frobenius_real, kingman_2x2, lift_stochastic,
    repair_rates, EmbedKind, RMat, StochasticMatrix, DEFAULT_TOL,
};
use faer::Mat;
use proptest::prelude::*;
use rand::Rng;
use superop_core::random::rng_from_seed;
use superop_core::{is_cpt, Tolerances};

fn rate_matrix(rates: &[f64], d: usize) -> RMat {
    let mut q = Mat::from_fn(d, d, |i, j| if i == j { 0.0 } else { rates[i * d + j] });
    for j in 0..d {
        let s: f64 = (0..d).filter(|&i| i != j).map(|i| q[(i, j)]).sum();
        q[(j, j)] = -s;
    }
    q
}

fn random_stochastic<R: Rng>(d: usize, rng: &mut R) -> StochasticMatrix {
    let mut m = Mat::from_fn(d, d, |_, _| rng.random::<f64>());
    for j in 0..d {
        let s: f64 = (0..d).map(|i| m[(i, j)]).sum();
        for i in 0..d {
            m[(i, j)] /= s;
        }
    }
    StochasticMatrix::new(m, DEFAULT_TOL).unwrap()
}

/// Exponentiates a grid of 2×2 rate matrices with rates in [0, 10]² and
/// checks that the image is exactly `{P₁₁ + P₂₂ > 1}` up to grid resolution.
#[test]
fn kingman_criterion_confirmed_by_grid() {
    // Quadratic spacing: dense near zero rates, where P moves fastest.
    let n = 400;
    let rate = |k: usize| 10.0 * (k as f64 / n as f64).powi(2);
    let mut image = Vec::with_capacity((n + 1) * (n + 1));
    for a in 0..=n {
        for b in 0..=n {
            let q = rate_matrix(&[0.0, rate(b), rate(a), 0.0], 2);
            let p = expm_real(&q, 1.0);
            assert!(p[(0, 0)] + p[(1, 1)] > 1.0);
            image.push((p[(1, 0)], p[(0, 1)]));
        }
    }
    // Bucket the image by (p, q) so nearest-point queries stay cheap.
    let cells = 200;
    let mut grid: Vec<Vec<(f64, f64)>> = vec![Vec::new(); cells * cells];
    let cell = |x: f64| ((x * cells as f64) as usize).min(cells - 1);
    for &(p, q) in &image {
        grid[cell(p) * cells + cell(q)].push((p, q));
    }
    let nearest = |p: f64, q: f64| {
        let (cp, cq) = (cell(p) as i64, cell(q) as i64);
        let mut best = f64::INFINITY;
        for dp in -3..=3 {
            for dq in -3..=3 {
                let (x, y) = (cp + dp, cq + dq);
                if x < 0 || y < 0 || x >= cells as i64 || y >= cells as i64 {
                    continue;
                }
                for &(a, b) in &grid[x as usize * cells + y as usize] {
                    best = best.min(((a - p).powi(2) + (b - q).powi(2)).sqrt());
                }
            }
        }
        best
    };
    // Rates ≤ 10 reach det ≥ e^{−20}; stay a little inside that.
    let steps = 60;
    for i in 1..steps {
        for j in 1..steps {
            let (p, q) = (i as f64 / steps as f64, j as f64 / steps as f64);
            let det = 1.0 - p - q;
            let dist = nearest(p, q);
            if det > 0.02 {
                assert!(dist < 0.01, "({p}, {q}) with det {det} is {dist} from the image");
            } else if det < -0.02 {
                assert!(dist > 0.01, "({p}, {q}) with det {det} is only {dist} from the image");
            }
        }
    }
}

#[test]
fn decider_agrees_with_kingman() {
    let mut rng = rng_from_seed(21);
    let mut tested = 0;
    while tested < 1000 {
        let p = random_stochastic(2, &mut rng);
        if p.det().abs() <= 1e-3 {
            continue;
        }
        let v = decide_embeddable(&p, 1e-3, None).unwrap();
        assert_eq!(v.is_embeddable(), kingman_2x2(&p).unwrap(), "{:?}", p.mat());
        tested += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn rate_matrices_generate_stochastic_semigroups(rates in proptest::collection::vec(0.0f64..3.0, 16), d in 2usize..5) {
        let q = rate_matrix(&rates, d);
        prop_assert!(check_qmatrix(&q, DEFAULT_TOL).pass);
        for t in [0.1, 1.0, 10.0] {
            prop_assert!(StochasticMatrix::new(expm_real(&q, t), 1e-9).is_ok());
        }
    }

    #[test]
    fn repair_raises_offdiagonals(rates in proptest::collection::vec(-1.0f64..1.0, 9), tau in 0.0f64..2.0) {
        let q = rate_matrix(&rates, 3);
        let before = check_qmatrix(&q, DEFAULT_TOL);
        let after = check_qmatrix(&repair_rates(&q, tau), DEFAULT_TOL);
        prop_assert!((after.offdiag_min - before.offdiag_min - tau).abs() < 1e-12);
        prop_assert!(after.colsum_residual < 1e-12);
    }
}

#[test]
fn small_rate_matrices_round_trip() {
    let mut rng = rng_from_seed(22);
    for _ in 0..50 {
        let d = rng.random_range(2..=4);
        let rates: Vec<f64> = (0..d * d).map(|_| rng.random_range(0.0..0.5)).collect();
        let q = rate_matrix(&rates, d);
        let p = StochasticMatrix::new(expm_real(&q, 1.0), 1e-12).unwrap();
        let b = classical_branches(&p).unwrap();
        assert!(frobenius_real(&(&b.q0 - &q)) < 1e-9);
        let v = decide_embeddable(&p, 1e-3, None).unwrap();
        assert!(v.is_embeddable());
        assert_eq!(v.m_star, vec![0; b.b.len()]);
    }
}

#[test]
fn branch_generators_reproduce_p_with_zero_column_sums() {
    let mut rng = rng_from_seed(23);
    let mut with_pairs = 0;
    for _ in 0..40 {
        let p = random_stochastic(4, &mut rng);
        let Ok(b) = classical_branches(&p) else { continue };
        with_pairs += !b.b.is_empty() as usize;
        let ranges: Vec<i64> = (-2..=2).collect();
        for &m in &ranges {
            let q = b.generator(&vec![m; b.b.len()]).unwrap();
            assert!(check_qmatrix(&q, 1.0e9).colsum_residual < 1e-10);
            assert!(frobenius_real(&(&expm_real(&q, 1.0) - p.mat())) < 1e-8);
        }
    }
    assert!(with_pairs > 0);
}

#[test]
fn rotation_like_three_state_chain() {
    // Mostly-cyclic hopping: its principal log has negative rates, and no
    // branch in the box fixes that.
    let a = 0.05;
    let m = Mat::from_fn(3, 3, |i, j| {
        if i == j {
            a
        } else if i == (j + 1) % 3 {
            1.0 - a
        } else {
            0.0
        }
    });
    let p = StochasticMatrix::new(m, DEFAULT_TOL).unwrap();
    let v = decide_embeddable(&p, 1e-3, Some(3)).unwrap();
    assert_eq!(v.kind, EmbedKind::NotEmbeddable);
    assert_eq!(v.m_star.len(), 1);
}

#[test]
fn lifted_stochastic_maps_are_channels() {
    let mut rng = rng_from_seed(24);
    for d in 2..=4 {
        for _ in 0..5 {
            let p = random_stochastic(d, &mut rng);
            assert!(is_cpt(&lift_stochastic(&p), &Tolerances::default()).pass);
        }
    }
}

#[test]
fn verdict_is_monotone_in_epsilon() {
    let mut rng = rng_from_seed(25);
    for _ in 0..40 {
        let p = random_stochastic(3, &mut rng);
        let mut was = false;
        for eps in [1e-6, 1e-3, 1e-1] {
            let Ok(v) = decide_embeddable(&p, eps, Some(3)) else { continue };
            if was {
                assert!(v.is_embeddable());
            }
            was |= v.is_embeddable();
        }
    }
}
