use lindblad_check::{random_generator, random_lindblad_data, build_from_gks};
use log_branches::{branch_family, branch_generator, spectral, verify_lemma3, BranchFamily, Partner};
use proptest::prelude::*;
use superop_core::linalg::{self, c64};
use superop_core::random::rng_from_seed;
use superop_core::{random_channel, SuperOp, Tolerances};

/// Random channels that admit a Hermiticity-preserving log; maps with a
/// simple eigenvalue on the negative real axis are skipped.
fn family_for(d: usize, seed: u64) -> (SuperOp, BranchFamily) {
    (seed * 1000..)
        .find_map(|s| {
            let e = random_channel(d, s).unwrap();
            branch_family(&e, &Tolerances::default()).ok().map(|b| (e, b))
        })
        .unwrap()
}

fn box_points(k: usize, m: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| (-m..=m).map(move |x| {
                let mut q = p.clone();
                q.push(x);
                q
            }))
            .collect();
    }
    out
}

#[test]
fn every_branch_exponentiates_back() {
    for seed in 0..6 {
        for d in [2, 3] {
            let (e, b) = family_for(d, seed);
            for m in box_points(b.num_pairs(), 2) {
                let l = branch_generator(&b, &m).unwrap();
                let err = l.exp(1.0).distance(&e);
                assert!(err <= 1e-6 * e.frobenius_norm(), "d {d} seed {seed} m {m:?}: {err:e}");
                let herm = linalg::antihermitian_residual(l.choi().mat());
                assert!(herm <= 1e-8 * (1.0 + l.frobenius_norm()));
            }
            assert!(verify_lemma3(&b, 1e-8).unwrap().pass);
        }
    }
}

#[test]
fn small_generators_are_recovered() {
    let mut rng = rng_from_seed(99);
    for d in [2, 3] {
        for _ in 0..5 {
            let l = random_generator(d, 2.0, &mut rng);
            let b = branch_family(&l.exp(1.0), &Tolerances::default()).unwrap();
            assert!(b.l0.distance(&l) < 1e-6, "{}", b.l0.distance(&l));
        }
    }
}

#[test]
fn hermiticity_preserving_spectra_pair_up() {
    let mut rng = rng_from_seed(5);
    for _ in 0..10 {
        let l = build_from_gks(&random_lindblad_data(3, 1.0, &mut rng)).unwrap();
        let s = spectral(&l.exp(0.3), &Tolerances::default()).unwrap();
        for (k, p) in s.partner.iter().enumerate() {
            if let Partner::Pair { index, .. } = p {
                assert!((s.eigenvalues[*index] - s.eigenvalues[k].conj()).norm() <= 1e-7);
                assert_eq!(s.pair_index(*index), Some(k));
            } else {
                assert!(s.eigenvalues[k].im.abs() <= 1e-7);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn branch_matrices_annihilate_each_other(seed in 0u64..5000) {
        let (_, b) = family_for(3, seed);
        for (i, a) in b.a.iter().enumerate() {
            for a2 in &b.a[i + 1..] {
                let prod = a.mat() * a2.mat();
                let tr: c64 = (0..9).map(|r| prod[(r, r)]).sum();
                prop_assert!(linalg::frobenius(prod.as_ref()) <= 1e-8 * a.frobenius_norm() * a2.frobenius_norm());
                prop_assert!(tr.norm() <= 1e-8 * a.frobenius_norm() * a2.frobenius_norm());
            }
        }
    }
}
