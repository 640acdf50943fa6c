mod common;
mod oracle;

use proptest::prelude::*;
use sparse_pinv::densela::{mp_pinv, mp_residuals, nnz, one_norm, svd};
use sparse_pinv::DenseMatrix;

fn gram_inverse(g: &DenseMatrix) -> DenseMatrix {
    let n = g.rows();
    let mut out = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let rows = (0..n).map(|i| g.row(i).to_vec()).collect();
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let x = oracle::solve_square(rows, e).expect("nonsingular Gram matrix");
        for i in 0..n {
            out[(i, j)] = x[i];
        }
    }
    out
}

/// `(UᵀU)⁻¹Uᵀ` for full column rank `U`, by Gaussian elimination.
fn left_pinv(u: &DenseMatrix) -> DenseMatrix {
    let ut = u.transpose();
    gram_inverse(&ut.matmul(u).unwrap()).matmul(&ut).unwrap()
}

#[test]
fn spec_examples() {
    assert_eq!(one_norm(&DenseMatrix::identity(3)), 3.0);
    assert_eq!(nnz(&DenseMatrix::from_diag(&[1.0, 1e-6]), 1e-5), 1);
    let j = DenseMatrix::filled(2, 2, 1.0);
    let jp = mp_pinv(&j, None).unwrap();
    assert!((one_norm(&jp) - 1.0).abs() < 1e-14);
    let r = mp_residuals(&j, &DenseMatrix::filled(2, 2, 0.25)).unwrap();
    assert_eq!(r.as_array(), [0.0; 4]);
}

#[test]
fn full_rank_matches_normal_equations() {
    let mut rng = common::rng(11);
    for (m, n) in [(5, 3), (8, 2), (6, 6)] {
        let a = common::random_matrix(&mut rng, m, n);
        let expect = left_pinv(&a);
        let got = mp_pinv(&a, None).unwrap();
        assert!(got.sub(&expect).unwrap().frobenius_norm() <= 1e-8);

        let w = a.transpose();
        let expect_w = left_pinv(&a).transpose();
        let got_w = mp_pinv(&w, None).unwrap();
        assert!(got_w.sub(&expect_w).unwrap().frobenius_norm() <= 1e-8);
    }
}

#[test]
fn rank_deficient_matches_factor_formula() {
    // For A = UV with full-rank factors, A⁺ = V⁺U⁺.
    let mut rng = common::rng(12);
    for (m, n, r) in [(6, 5, 2), (4, 7, 3), (10, 10, 1)] {
        let u = common::random_matrix(&mut rng, m, r);
        let v = common::random_matrix(&mut rng, r, n);
        let a = u.matmul(&v).unwrap();
        let expect = left_pinv(&v.transpose()).transpose().matmul(&left_pinv(&u)).unwrap();
        let got = mp_pinv(&a, None).unwrap();
        assert!(got.sub(&expect).unwrap().frobenius_norm() <= 1e-8 * expect.frobenius_norm().max(1.0));
        let res = mp_residuals(&a, &expect).unwrap();
        assert!(res.max() <= 1e-10 * a.frobenius_norm().max(1.0).max(expect.frobenius_norm()));
    }
}

fn matrix_strategy() -> impl Strategy<Value = DenseMatrix> {
    (1usize..=6, 1usize..=6, 0usize..=6).prop_flat_map(|(m, n, r)| {
        let r = r.min(m).min(n);
        (
            proptest::collection::vec(-5.0f64..5.0, m * r.max(1)),
            proptest::collection::vec(-5.0f64..5.0, r.max(1) * n),
        )
            .prop_map(move |(u, v)| {
                let rr = r.max(1);
                let u = DenseMatrix::new(m, rr, u).unwrap();
                let v = DenseMatrix::new(rr, n, v).unwrap();
                let a = u.matmul(&v).unwrap();
                if r == 0 {
                    a.scale(0.0)
                } else {
                    a
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn svd_invariants(a in matrix_strategy()) {
        let f = svd(&a).unwrap();
        let scale = a.frobenius_norm().max(1.0);
        prop_assert!(f.reconstruct().sub(&a).unwrap().frobenius_norm() <= 1e-10 * scale);
        for q in [&f.u, &f.v] {
            let g = q.transpose().matmul(q).unwrap();
            prop_assert!(g.sub(&DenseMatrix::identity(q.cols())).unwrap().max_abs() <= 1e-10);
        }
        prop_assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(f.s.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn pinv_satisfies_all_four(a in matrix_strategy()) {
        let h = mp_pinv(&a, None).unwrap();
        let r = mp_residuals(&a, &h).unwrap();
        prop_assert!(r.max() <= 1e-8 * a.frobenius_norm().max(1.0).max(h.frobenius_norm()));
    }

    #[test]
    fn norms_are_nonnegative(a in matrix_strategy(), tol in 0.0f64..1.0) {
        prop_assert!(one_norm(&a) >= 0.0);
        prop_assert!(nnz(&a, tol) <= a.rows() * a.cols());
        prop_assert!(nnz(&a, tol) >= nnz(&a, tol + 1.0));
    }
}
