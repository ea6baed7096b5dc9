use faer::Mat;
use proptest::prelude::*;
use superop_core::linalg::{self, c64};
use superop_core::{flip_vector, gamma_involution, SuperOp};

fn complex_matrix(n: usize) -> impl Strategy<Value = Mat<c64>> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), n * n)
        .prop_map(move |v| Mat::from_fn(n, n, |i, j| c64::new(v[i * n + j].0, v[i * n + j].1)))
}

fn sized_matrix() -> impl Strategy<Value = Mat<c64>> {
    (1usize..=3).prop_flat_map(|d| complex_matrix(d * d))
}

proptest! {
    #[test]
    fn gamma_is_bit_exact_involution(m in sized_matrix()) {
        let back = gamma_involution(gamma_involution(m.as_ref()).unwrap().as_ref()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn gamma_preserves_frobenius(m in sized_matrix()) {
        let g = gamma_involution(m.as_ref()).unwrap();
        prop_assert!((linalg::frobenius(g.as_ref()) - linalg::frobenius(m.as_ref())).abs() <= 1e-12 * (1.0 + linalg::frobenius(m.as_ref())));
    }

    #[test]
    fn flip_is_involution(v in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 9)) {
        let v: Vec<c64> = v.into_iter().map(|(a, b)| c64::new(a, b)).collect();
        prop_assert_eq!(flip_vector(&flip_vector(&v).unwrap()).unwrap(), v);
    }

    #[test]
    fn compose_with_identity_is_exact(m in complex_matrix(4)) {
        let e = SuperOp::new(2, m).unwrap();
        prop_assert_eq!(e.compose(&SuperOp::identity(2)).unwrap(), e.clone());
        prop_assert_eq!(SuperOp::identity(2).compose(&e).unwrap(), e);
    }
}
