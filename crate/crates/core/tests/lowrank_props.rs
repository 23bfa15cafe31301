use geomint::densela::{qr_thin, Matrix};
use geomint::lowrank::{
    integrate_lowrank, ksl_step, strang_step, tangent_project, to_full, AffineFamily, LowRankFactors, LowRankRun,
    MatrixFlow, Rotation, RotatingFamily, Splitting,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_factors(m: usize, n: usize, r: usize, rng: &mut ChaCha8Rng) -> LowRankFactors {
    let (u, _) = qr_thin(&random_matrix(m, r, rng)).unwrap();
    let (v, _) = qr_thin(&random_matrix(n, r, rng)).unwrap();
    LowRankFactors::new(u, random_matrix(r, r, rng), v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_self_adjoint(seed in any::<u64>(), r in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_factors(6, 5, r, &mut rng);
        let z1 = random_matrix(6, 5, &mut rng);
        let z2 = random_matrix(6, 5, &mut rng);
        let p1 = tangent_project(&y, &z1).unwrap();
        let p2 = tangent_project(&y, &z2).unwrap();
        prop_assert!((&tangent_project(&y, &p1).unwrap() - &p1).max_abs() <= 1e-12);
        prop_assert!((p1.inner(&z2) - z1.inner(&p2)).abs() <= 1e-12);
    }

    #[test]
    fn projection_fixes_the_base_point(seed in any::<u64>(), r in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = random_factors(7, 6, r, &mut rng);
        let full = to_full(&y);
        prop_assert!((&tangent_project(&y, &full).unwrap() - &full).max_abs() <= 1e-13);
    }

    #[test]
    fn steps_keep_factors_orthonormal(seed in any::<u64>(), h in 0.001..0.3f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flow = AffineFamily { a0: random_matrix(8, 6, &mut rng), a1: random_matrix(8, 6, &mut rng) };
        let y0 = LowRankFactors::from_matrix(&flow.a0, 3).unwrap();
        for y in [ksl_step(&flow, &y0, 0.0, h, 3).unwrap(), strang_step(&flow, &y0, 0.0, h, 3).unwrap()] {
            prop_assert!(y.u.orthonormality_defect() <= 1e-12);
            prop_assert!(y.v.orthonormality_defect() <= 1e-12);
        }
    }
}

fn rank_r_family(m: usize, r: usize, seed: u64) -> RotatingFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let left = Rotation::random(m, &mut rng);
    let right = Rotation::random(m, &mut rng);
    let d: Vec<f64> = (0..m).map(|i| if i < r { rng.gen_range(0.1..2.0) } else { 0.0 }).collect();
    RotatingFamily::new(left, right, Matrix::diag(&d)).unwrap()
}

#[test]
fn both_splittings_are_exact_on_rank_r_families() {
    for (seed, r) in [(1, 1), (2, 2), (3, 4)] {
        let flow = rank_r_family(10, r, seed);
        let y0 = LowRankFactors::from_matrix(flow.d(), r).unwrap();
        for splitting in [Splitting::Lie, Splitting::Strang] {
            let mut opts = LowRankRun::new(splitting, 0.05);
            opts.substeps = 20;
            let run = integrate_lowrank(&flow, &y0, 0.0, 1.0, &opts).unwrap();
            for rec in &run {
                assert!(rec.error.unwrap() <= 1e-9, "{splitting:?} r={r} t={} err={:e}", rec.t, rec.error.unwrap());
            }
        }
    }
}

#[test]
fn step_accepts_a_singular_core() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (u, _) = qr_thin(&random_matrix(5, 2, &mut rng)).unwrap();
    let (v, _) = qr_thin(&random_matrix(4, 2, &mut rng)).unwrap();
    let y0 = LowRankFactors::new(u, Matrix::diag(&[1.0, 0.0]), v).unwrap();
    let flow = AffineFamily {
        a0: to_full(&y0),
        a1: random_matrix(5, 4, &mut rng),
    };
    let y1 = ksl_step(&flow, &y0, 0.0, 0.01, 5).unwrap();
    assert!(to_full(&y1).is_finite());
    let moved = (&to_full(&y1) - &to_full(&y0)).frobenius_norm();
    assert!(moved > 0.0 && moved < 0.1);
}

#[test]
fn full_rank_steps_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let flow = AffineFamily {
        a0: random_matrix(6, 6, &mut rng),
        a1: random_matrix(6, 6, &mut rng),
    };
    let y0 = LowRankFactors::from_matrix(&flow.a0, 6).unwrap();
    // At full rank the projection is the identity and every splitting is exact.
    let y1 = ksl_step(&flow, &y0, 0.0, 0.1, 4).unwrap();
    assert!((&to_full(&y1) - &flow.exact(0.1).unwrap()).frobenius_norm() <= 1e-12);
}
