use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use super::{Block, OscillatorySystem, PhaseState, Potential};
use crate::error::{Error, Result};

/// Pseudospectral coupling `U(c) = -(1/N) sum_l G(u(x_l))` of the periodic
/// nonlinear Klein–Gordon equation `u_tt = u_xx - rho u + g(u)` with
/// `g(u) = u^2`, `G(u) = u^3/3`.
///
/// Coordinates are real Fourier coefficients in the basis
/// `1, sqrt2 cos x, sqrt2 sin x, ..., sqrt2 cos Kx, sqrt2 sin Kx`, which is
/// orthonormal for the mean over a period; collocation uses the `N = 2K+1`
/// equispaced points `x_l = 2 pi l / N` and a direct (O(N^2)) transform.
#[derive(Debug, Clone)]
pub struct KleinGordonCoupling {
    modes: usize,
    /// basis[l][k] = e_k(x_l)
    basis: Vec<Vec<f64>>,
}

impl KleinGordonCoupling {
    pub fn new(modes: usize) -> Self {
        let n = 2 * modes + 1;
        let basis = (0..n)
            .map(|l| {
                let x = 2.0 * PI * l as f64 / n as f64;
                let mut row = Vec::with_capacity(n);
                row.push(1.0);
                for j in 1..=modes {
                    let jx = j as f64 * x;
                    row.push(SQRT_2 * jx.cos());
                    row.push(SQRT_2 * jx.sin());
                }
                row
            })
            .collect();
        KleinGordonCoupling { modes, basis }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Values of `u` at the collocation points.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|row| row.iter().zip(coeffs).map(|(e, c)| e * c).sum())
            .collect()
    }

    /// Discrete Fourier coefficients of grid values (inverse of `synthesize`).
    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let n = self.basis.len();
        let mut out = vec![0.0; n];
        for (row, v) in self.basis.iter().zip(values) {
            for (o, e) in out.iter_mut().zip(row) {
                *o += e * v;
            }
        }
        out.iter_mut().for_each(|o| *o /= n as f64);
        out
    }

    /// Fourier coefficients of `g(u) = u^2`.
    pub fn nonlinearity_coefficients(&self, coeffs: &[f64]) -> Vec<f64> {
        let u = self.synthesize(coeffs);
        self.analyze(&u.iter().map(|x| x * x).collect::<Vec<_>>())
    }
}

impl Potential for KleinGordonCoupling {
    fn dim(&self) -> usize {
        2 * self.modes + 1
    }

    fn value(&self, q: &[f64]) -> f64 {
        let u = self.synthesize(q);
        -u.iter().map(|x| x * x * x / 3.0).sum::<f64>() / u.len() as f64
    }

    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let mut g = self.nonlinearity_coefficients(q);
        g.iter_mut().for_each(|x| *x = -*x);
        g
    }
}

/// Spectral truncation with modes `|j| <= K` and frequencies
/// `omega_j = sqrt(j^2 + rho)`. Block 0 holds the constant mode, block `j`
/// the (cos, sin) pair of wave number `j`, so its energy is `E_j + E_{-j}`.
///
/// The initial state excites only `j = ±1`: a cosine wave at rest with
/// `E_1 = E_{-1} = epsilon^2`.
pub fn make_klein_gordon(modes: usize, rho: f64, epsilon: f64) -> Result<(OscillatorySystem, PhaseState)> {
    if modes < 4 {
        return Err(Error::contract(format!("need at least 4 modes, got {modes}")));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::contract("rho must be positive"));
    }
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::contract(format!("epsilon must lie in [0, 0.5], got {epsilon}")));
    }
    let mut blocks = vec![Block { dim: 1, omega: rho.sqrt() }];
    blocks.extend((1..=modes).map(|j| Block {
        dim: 2,
        omega: ((j * j) as f64 + rho).sqrt(),
    }));
    let omega1 = blocks[1].omega;
    let sys = OscillatorySystem::new(blocks, Arc::new(KleinGordonCoupling::new(modes)))?;

    let mut y = PhaseState::zeros(2 * modes + 1);
    y.q[1] = 2.0 * epsilon / omega1;
    Ok((sys, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fd, oscillatory_energies};
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_frequency() {
        let (sys, _) = make_klein_gordon(8, 0.5, 0.1).unwrap();
        assert_abs_diff_eq!(sys.blocks()[1].omega, 1.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(sys.blocks()[0].omega, 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn initial_mode_energies() {
        let eps = 0.1;
        let (sys, y) = make_klein_gordon(8, 0.5, eps).unwrap();
        let e = oscillatory_energies(&sys, &y).unwrap();
        assert_abs_diff_eq!(e.per_block[1], 2.0 * eps * eps, epsilon = 1e-15);
        assert!(e.per_block.iter().enumerate().all(|(j, &x)| j == 1 || x == 0.0));
    }

    #[test]
    fn square_of_cosine_has_modes_zero_and_two() {
        let c = KleinGordonCoupling::new(6);
        let mut coeffs = vec![0.0; 13];
        coeffs[1] = 1.0 / SQRT_2; // u = cos x
        let g = c.nonlinearity_coefficients(&coeffs);
        // cos^2 x = 1/2 + (1/2) cos 2x = 1/2 e_0 + 1/(2 sqrt2) e_{2,cos}
        assert_abs_diff_eq!(g[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(g[3], 0.5 / SQRT_2, epsilon = 1e-14);
        for (k, v) in g.iter().enumerate() {
            if k != 0 && k != 3 {
                assert!(v.abs() <= 1e-14, "mode {k} = {v}");
            }
        }
    }

    #[test]
    fn analyze_inverts_synthesize() {
        let c = KleinGordonCoupling::new(5);
        let coeffs: Vec<f64> = (0..11).map(|k| (k as f64 * 0.7).cos()).collect();
        let back = c.analyze(&c.synthesize(&coeffs));
        for (a, b) in back.iter().zip(&coeffs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = KleinGordonCoupling::new(4);
        let q: Vec<f64> = (0..9).map(|k| 0.2 * (k as f64 * 1.3).sin()).collect();
        let fd = fd::gradient(|x| c.value(x), &q, 1e-6);
        assert!(fd::rel_err(&c.gradient(&q), &fd) <= 1e-8);
    }

    #[test]
    fn parameter_checks() {
        assert!(make_klein_gordon(3, 0.5, 0.1).is_err());
        assert!(make_klein_gordon(8, 0.0, 0.1).is_err());
        assert!(make_klein_gordon(8, 0.5, 0.6).is_err());
        assert!(make_klein_gordon(8, 0.5, 0.0).is_ok());
    }
}
