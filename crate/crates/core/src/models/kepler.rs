use std::sync::Arc;

use super::{PhaseState, Potential, SeparableSystem};
use crate::error::{Error, Result};

/// Planar two-body potential `V(q) = -1/|q|`.
#[derive(Debug, Clone, Copy)]
pub struct KeplerPotential;

impl Potential for KeplerPotential {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, q: &[f64]) -> f64 {
        -1.0 / q[0].hypot(q[1])
    }

    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let r = q[0].hypot(q[1]);
        let r3 = r * r * r;
        vec![q[0] / r3, q[1] / r3]
    }
}

/// Kepler problem with eccentricity `e`, started at pericentre so that the
/// energy is exactly -1/2 and the period is 2π.
pub fn make_kepler(eccentricity: f64) -> Result<(SeparableSystem, PhaseState)> {
    if !(0.0..1.0).contains(&eccentricity) {
        return Err(Error::contract(format!(
            "eccentricity must lie in [0, 1), got {eccentricity}"
        )));
    }
    let e = eccentricity;
    let q = vec![1.0 - e, 0.0];
    let p = vec![0.0, ((1.0 + e) / (1.0 - e)).sqrt()];
    Ok((
        SeparableSystem::with_unit_mass(Arc::new(KeplerPotential)),
        PhaseState { p, q },
    ))
}

/// `L = q1 p2 - q2 p1`.
pub fn angular_momentum(y: &PhaseState) -> f64 {
    y.q[0] * y.p[1] - y.q[1] * y.p[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Hamiltonian;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circular_orbit_energy() {
        let (sys, y) = make_kepler(0.0).unwrap();
        assert_abs_diff_eq!(sys.energy_at(&y), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn eccentric_orbit_invariants() {
        let (sys, y) = make_kepler(0.6).unwrap();
        assert_abs_diff_eq!(sys.energy_at(&y), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(angular_momentum(&y), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn eccentricity_range() {
        assert!(make_kepler(1.0).is_err());
        assert!(make_kepler(-0.1).is_err());
    }
}
