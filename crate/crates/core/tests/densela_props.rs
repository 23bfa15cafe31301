use geomint::densela::{qr_thin, svd_full, truncated_svd, Matrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-10.0..10.0f64, rows * cols).prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

proptest! {
    #[test]
    fn qr_reconstructs_with_orthonormal_q(a in matrix(6, 4)) {
        let (q, r) = qr_thin(&a).unwrap();
        let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
        prop_assert!((&q.matmul(&r) - &a).frobenius_norm() <= 1e-12 * scale);
        prop_assert!(q.orthonormality_defect() <= 1e-12);
        for i in 0..4 {
            prop_assert!(r[(i, i)] >= 0.0);
            for j in 0..i {
                prop_assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn transpose_has_the_same_singular_values(a in matrix(5, 3)) {
        let s = svd_full(&a).unwrap().singular_values;
        let t = svd_full(&a.transpose()).unwrap().singular_values;
        for (x, y) in s.iter().zip(&t) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn svd_reconstructs_and_sorts(a in matrix(4, 6)) {
        let svd = svd_full(&a).unwrap();
        let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
        prop_assert!((&svd.reconstruct() - &a).frobenius_norm() <= 1e-10 * scale);
        prop_assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(svd.singular_values.iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn discarded_norm_is_the_truncation_error(a in matrix(7, 5), r in 1usize..=5) {
        let (approx, discarded) = truncated_svd(&a, r).unwrap();
        let err = (&a - &approx).frobenius_norm();
        prop_assert!((err - discarded).abs() <= 1e-10 * a.frobenius_norm().max(1.0));
    }
}

#[test]
fn truncation_beats_random_rank_r_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(76);
    for _ in 0..5 {
        let a = random_matrix(8, 6, &mut rng);
        for r in 1..=6 {
            let (approx, _) = truncated_svd(&a, r).unwrap();
            let best = (&a - &approx).frobenius_norm();
            for _ in 0..100 {
                let b = random_matrix(8, r, &mut rng).matmul_tr(&random_matrix(6, r, &mut rng));
                assert!(best <= (&a - &b).frobenius_norm() + 1e-9);
            }
        }
    }
}

#[test]
fn truncation_beats_perturbed_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let a = random_matrix(8, 6, &mut rng);
    let r = 3;
    let svd = svd_full(&a).unwrap();
    let (approx, _) = truncated_svd(&a, r).unwrap();
    let best = (&a - &approx).frobenius_norm();
    let u = svd.left_vectors.leading_columns(r);
    let v = svd.right_vectors.leading_columns(r);
    let s: Vec<f64> = svd.singular_values[..r].to_vec();
    for _ in 0..100 {
        let mut up = u.clone();
        up.axpy(1e-3, &random_matrix(8, r, &mut rng));
        let b = up.matmul(&Matrix::diag(&s)).matmul_tr(&v);
        assert!(best <= (&a - &b).frobenius_norm() + 1e-12);
    }
}
