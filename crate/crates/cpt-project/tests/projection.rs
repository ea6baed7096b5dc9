use cpt_project::{nearest_cpt_default, random_channel};
use proptest::prelude::*;
use rand::Rng;
use superop_core::random::{random_channel_with, random_hermitian, rng_from_seed};
use superop_core::{is_cpt, ChoiMatrix, SuperOp, Tolerances};

/// A Hermiticity-preserving direction of unit Frobenius norm.
fn hp_direction(d: usize, seed: u64) -> SuperOp {
    let mut rng = rng_from_seed(seed);
    let h = random_hermitian(d * d, &mut rng);
    let e = ChoiMatrix::new(d, h).unwrap().to_superop();
    e.scale(1.0 / e.frobenius_norm())
}

#[test]
fn perturbed_channel_distance_bounded_by_perturbation() {
    for seed in 0..10 {
        let e = random_channel(2, seed).unwrap();
        let delta = hp_direction(2, seed + 100).scale(0.01);
        let noisy = e.add_scaled(&delta, 1.0).unwrap();
        let r = nearest_cpt_default(&noisy).unwrap();
        assert!(r.converged);
        assert!(r.distance <= 0.01 + 1e-12, "{}", r.distance);
        let rep = is_cpt(&r.projected, &Tolerances::default().scaled(10.0));
        assert!(rep.pass, "{rep:?}");
    }
}

#[test]
fn projection_is_idempotent() {
    for seed in 0..5 {
        let noisy = random_channel(3, seed).unwrap().add_scaled(&hp_direction(3, seed), 0.3).unwrap();
        let once = nearest_cpt_default(&noisy).unwrap();
        let twice = nearest_cpt_default(&once.projected).unwrap();
        assert!(twice.projected.distance(&once.projected) < 1e-9);
    }
}

#[test]
fn no_sampled_channel_is_closer() {
    let mut rng = rng_from_seed(77);
    for seed in 0..4 {
        let target = random_channel(2, seed).unwrap().add_scaled(&hp_direction(2, seed + 7), 0.5).unwrap();
        let r = nearest_cpt_default(&target).unwrap();
        for _ in 0..2000 {
            let rank = rng.random_range(1..=4);
            let mut c = random_channel_with(2, rank, &mut rng).unwrap();
            // Half of the samples are pulled towards the returned optimum.
            if rng.random_bool(0.5) {
                let t: f64 = rng.random_range(0.0..0.2);
                c = r.projected.scale(1.0 - t).add_scaled(&c, t).unwrap();
            }
            assert!(c.distance(&target) >= r.distance - 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dual_is_monotone(seed in 0u64..1000, scale in 0.05f64..2.0) {
        let target = random_channel(2, seed).unwrap().add_scaled(&hp_direction(2, seed), scale).unwrap();
        let r = nearest_cpt_default(&target).unwrap();
        for w in r.dual_objective.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-11 * (1.0 + w[0].abs()));
        }
        prop_assert!(*r.dual_objective.last().unwrap() <= 0.5 * r.distance * r.distance + 1e-9);
    }
}
