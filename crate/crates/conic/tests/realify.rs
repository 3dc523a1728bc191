use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use swipt_conic::{realify, MatrixLayout};

fn hermitian_from(n: usize, vals: &[f64]) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |i, j| Complex64::new(vals[2 * (i * n + j)], vals[2 * (i * n + j) + 1]));
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn hermitian_eigenvalues(x: &DMatrix<Complex64>) -> Vec<f64> {
    sorted(x.clone().symmetric_eigenvalues().iter().copied().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn embedding_doubles_every_eigenvalue(
        n in 1usize..6,
        vals in proptest::collection::vec(-1.0f64..1.0, 72),
    ) {
        let x = hermitian_from(n, &vals);
        let ev = hermitian_eigenvalues(&x);
        let emb = sorted(realify(&x).symmetric_eigenvalues().iter().copied().collect());
        for (k, e) in ev.iter().enumerate() {
            prop_assert!((emb[2 * k] - e).abs() < 1e-10);
            prop_assert!((emb[2 * k + 1] - e).abs() < 1e-10);
        }
    }

    #[test]
    fn psd_is_preserved_both_ways(
        n in 1usize..6,
        vals in proptest::collection::vec(-1.0f64..1.0, 72),
        shift in -0.5f64..2.0,
    ) {
        let x = hermitian_from(n, &vals) + DMatrix::identity(n, n) * Complex64::new(shift, 0.0);
        let x_psd = hermitian_eigenvalues(&x)[0] >= -1e-12;
        let e = realify(&x);
        let e_psd = e.symmetric_eigenvalues().min() >= -1e-12;
        prop_assert_eq!(x_psd, e_psd);
    }

    #[test]
    fn layout_coordinates_are_bijective(
        n in 1usize..6,
        vals in proptest::collection::vec(-1.0f64..1.0, 72),
    ) {
        let x = hermitian_from(n, &vals);
        let layout = MatrixLayout::hermitian(n);
        let coords = layout.coords_of(&x);
        prop_assert_eq!(coords.len(), n * n);
        let back = layout.matrix_of(&coords);
        prop_assert!((back - &x).norm() < 1e-15);
        prop_assert!((layout.embed(&coords) - realify(&x)).norm() < 1e-15);
    }
}
