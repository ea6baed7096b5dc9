use lindblad_check::{build_from_gks, ccp_margin, check_lemma1, random_lindblad_data, repair_generator};
use proptest::prelude::*;
use superop_core::random::rng_from_seed;
use superop_core::{is_cpt, is_hermiticity_preserving, Tolerances};

#[test]
fn random_generators_pass_and_exponentiate_to_channels() {
    let tol = Tolerances::default();
    for seed in 0..40 {
        let d = 2 + (seed as usize % 2);
        let mut rng = rng_from_seed(seed);
        let l = build_from_gks(&random_lindblad_data(d, 0.5, &mut rng)).unwrap();
        let rep = check_lemma1(&l, &tol);
        assert!(rep.pass, "seed {seed}: {rep:?}");
        for t in [0.1, 1.0, 5.0] {
            let e = l.exp(t);
            let cpt = is_cpt(&e, &tol);
            assert!(cpt.cp_margin >= -10.0 * tol.psd_tol, "seed {seed}, t {t}: {cpt:?}");
            assert!(is_hermiticity_preserving(&e, &tol));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn repair_shifts_margin_by_exactly_eps(seed in 0u64..10_000, eps in 0.0f64..2.0, d in 2usize..=3) {
        let mut rng = rng_from_seed(seed);
        let l = build_from_gks(&random_lindblad_data(d, 1.0, &mut rng)).unwrap();
        let before = ccp_margin(&l);
        let after = ccp_margin(&repair_generator(&l, eps).unwrap());
        prop_assert!((after - before - eps).abs() < 1e-8);
    }
}
