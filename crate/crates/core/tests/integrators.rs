use geomint::models::{
    angular_momentum, harmonic_oscillator, make_fpu_chain, make_kepler, make_klein_gordon, oscillatory_energies,
    pendulum, Hamiltonian, PhaseState,
};
use geomint::oscillatory::{FilterPair, Trigonometric};
use geomint::symplectic::{integrate, propagate, symmetry_defect, ClassicalRk4, Method, StepperConfig};
use proptest::prelude::*;

fn max_rel_energy_error<S: Hamiltonian>(sys: &S, method: Method, h: f64, y0: &PhaseState, t_end: f64) -> f64 {
    let cfg = StepperConfig::new(h).unwrap();
    let h0 = sys.energy_at(y0);
    integrate(sys, &method, &cfg, y0, t_end, 1)
        .unwrap()
        .iter()
        .map(|(_, y)| ((sys.energy_at(y) - h0) / h0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn verlet_converges_on_kepler() {
    let (sys, y0) = make_kepler(0.6).unwrap();
    let coarse = propagate(&sys, &Method::StormerVerlet, &StepperConfig::new(1e-3).unwrap(), &y0, 1000).unwrap();
    let fine = propagate(&sys, &Method::StormerVerlet, &StepperConfig::new(1e-5).unwrap(), &y0, 100_000).unwrap();
    assert!(coarse.distance(&fine) <= 1e-5, "{:e}", coarse.distance(&fine));
}

#[test]
fn reference_flow_conserves_kepler_invariants() {
    let (sys, y0) = make_kepler(0.6).unwrap();
    let cfg = StepperConfig::new(1e-3).unwrap();
    let run = integrate(&sys, &ClassicalRk4, &cfg, &y0, 10.0, 100).unwrap();
    let (h0, l0) = (sys.energy_at(&y0), angular_momentum(&y0));
    for (_, y) in &run {
        assert!((sys.energy_at(y) - h0).abs() <= 1e-10);
        assert!((angular_momentum(y) - l0).abs() <= 1e-10);
    }
}

#[test]
fn explicit_euler_energy_keeps_growing() {
    let sys = harmonic_oscillator(1);
    let y0 = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
    let early = max_rel_energy_error(&sys, Method::ExplicitEuler, 0.01, &y0, 10.0);
    let late = max_rel_energy_error(&sys, Method::ExplicitEuler, 0.01, &y0, 100.0);
    assert!(late >= 5.0 * early, "{early:e} {late:e}");
}

#[test]
fn symplectic_euler_energy_error_is_first_order_and_bounded() {
    let (sys, y0) = make_kepler(0.6).unwrap();
    for method in [Method::SymplecticEulerQp, Method::SymplecticEulerPq] {
        let coarse = max_rel_energy_error(&sys, method, 0.005, &y0, 1e4);
        let fine = max_rel_energy_error(&sys, method, 0.0025, &y0, 1e4);
        let ratio = coarse / fine;
        assert!((1.6..=2.4).contains(&ratio), "{method}: {coarse:e} / {fine:e} = {ratio}");
    }
}

#[test]
fn verlet_keeps_angular_momentum_to_roundoff() {
    let (sys, y0) = make_kepler(0.6).unwrap();
    let cfg = StepperConfig::new(0.05).unwrap();
    let l0 = angular_momentum(&y0);
    for (_, y) in integrate(&sys, &Method::StormerVerlet, &cfg, &y0, 1e3, 1).unwrap() {
        assert!((angular_momentum(&y) - l0).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn verlet_is_symmetric(p in -2.0..2.0f64, q in -3.0..3.0f64, h in 0.001..0.5f64) {
        let sys = pendulum();
        let y = PhaseState::new(vec![p], vec![q]).unwrap();
        let d = symmetry_defect(&sys, &Method::StormerVerlet, &StepperConfig::new(h).unwrap(), &y).unwrap();
        prop_assert!(d <= 1e-12);
    }

    #[test]
    fn verlet_is_symmetric_on_kepler(r in 0.5..2.0f64, a in 0.0..6.2f64, px in -1.0..1.0f64, py in -1.0..1.0f64) {
        let (sys, _) = make_kepler(0.5).unwrap();
        let y = PhaseState::new(vec![px, py], vec![r * a.cos(), r * a.sin()]).unwrap();
        let d = symmetry_defect(&sys, &Method::StormerVerlet, &StepperConfig::new(0.01).unwrap(), &y).unwrap();
        prop_assert!(d <= 1e-12);
    }
}

#[test]
fn trigonometric_method_is_exact_on_linear_klein_gordon() {
    let (kg, y0) = make_klein_gordon(16, 0.5, 0.3).unwrap();
    let linear = kg.with_coupling_scale(0.0);
    let h = 0.05;
    let steps = 2000;
    for filters in [FilterPair::IMPULSE, FilterPair::MOLLIFIED] {
        let y = propagate(&linear, &Trigonometric(filters), &StepperConfig::new(h).unwrap(), &y0, steps).unwrap();
        let t = steps as f64 * h;
        let mut worst: f64 = 0.0;
        for (j, block) in linear.blocks().iter().enumerate() {
            let w = block.omega;
            for i in linear.block_range(j) {
                let q = (w * t).cos() * y0.q[i] + (w * t).sin() / w * y0.p[i];
                let p = -w * (w * t).sin() * y0.q[i] + (w * t).cos() * y0.p[i];
                worst = worst.max((q - y.q[i]).abs()).max((p - y.p[i]).abs());
            }
        }
        assert!(worst <= 1e-12, "{}: {worst:e}", filters.name());
    }
}

#[test]
fn fpu_total_energy_stays_close() {
    let (sys, y0) = make_fpu_chain(3, 50.0).unwrap();
    let cfg = StepperConfig::new(0.02).unwrap();
    let h0 = oscillatory_energies(&sys, &y0).unwrap().total;
    for filters in [FilterPair::IMPULSE, FilterPair::MOLLIFIED] {
        let run = integrate(&sys, &Trigonometric(filters), &cfg, &y0, 1e3, 10).unwrap();
        for (t, y) in &run {
            let e = oscillatory_energies(&sys, y).unwrap().total;
            assert!(((e - h0) / h0).abs() <= 0.05, "{} t={t}: {e} vs {h0}", filters.name());
        }
    }
}
