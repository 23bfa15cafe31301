//! Hamiltonian model problems and the state/system abstractions shared by
//! every integrator in the crate.

mod fpu;
mod kepler;
mod klein_gordon;
mod nbody;
mod oscillatory_system;

use std::sync::Arc;

use crate::densela::Matrix;
use crate::error::{Error, Result};

pub use fpu::{make_fpu_chain, FpuCoupling};
pub use kepler::{angular_momentum, make_kepler, KeplerPotential};
pub use klein_gordon::{make_klein_gordon, KleinGordonCoupling};
pub use nbody::{load_solar_dataset, make_outer_solar_system, parse_solar_dataset, NBodyData, NBodyPotential};
pub use oscillatory_system::{oscillatory_energies, Block, OscillatoryEnergies, OscillatorySystem};

/// Canonical phase-space point: momenta `p` and positions `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl PhaseState {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::contract(format!(
                "momentum has length {} but position has length {}",
                p.len(),
                q.len()
            )));
        }
        if p.iter().chain(&q).any(|x| !x.is_finite()) {
            return Err(Error::contract("phase state entries must be finite"));
        }
        Ok(PhaseState { p, q })
    }

    pub fn zeros(dim: usize) -> Self {
        PhaseState {
            p: vec![0.0; dim],
            q: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(&self.q).all(|x| x.is_finite())
    }

    /// Flattened `(p, q)` vector, the ordering used by the structure matrix J.
    pub fn to_vec(&self) -> Vec<f64> {
        self.p.iter().chain(&self.q).copied().collect()
    }

    pub fn from_vec(y: &[f64]) -> Self {
        assert!(y.len().is_multiple_of(2), "phase vector must have even length");
        let d = y.len() / 2;
        PhaseState {
            p: y[..d].to_vec(),
            q: y[d..].to_vec(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.p.iter().chain(&self.q).fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Max-norm distance to `other`.
    pub fn distance(&self, other: &PhaseState) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .chain(self.q.iter().zip(&other.q))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::contract(format!(
                "state has dimension {} but the system has dimension {dim}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// A canonical Hamiltonian system `p' = -grad_q H`, `q' = grad_p H`.
pub trait Hamiltonian {
    fn dim(&self) -> usize;
    fn energy(&self, p: &[f64], q: &[f64]) -> f64;
    fn grad_p(&self, p: &[f64], q: &[f64]) -> Vec<f64>;
    fn grad_q(&self, p: &[f64], q: &[f64]) -> Vec<f64>;

    /// True when `grad_p` depends only on `p` and `grad_q` only on `q`; lets
    /// the partitioned Euler variants run without an implicit solve.
    fn is_separable(&self) -> bool {
        false
    }

    fn energy_at(&self, y: &PhaseState) -> f64 {
        self.energy(&y.p, &y.q)
    }
}

/// A scalar potential on position space.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, q: &[f64]) -> f64;
    fn gradient(&self, q: &[f64]) -> Vec<f64>;
}

/// Inverse mass matrix of a separable Hamiltonian.
#[derive(Debug, Clone)]
pub enum MassInverse {
    Identity,
    Diagonal(Vec<f64>),
    Dense(Matrix),
}

impl MassInverse {
    /// Dense inverse mass; must be symmetric (1e-14) and positive definite.
    pub fn dense(m: Matrix) -> Result<Self> {
        let n = m.rows();
        if m.cols() != n {
            return Err(Error::contract("mass matrix must be square"));
        }
        let scale = m.max_abs().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-14 * scale {
                    return Err(Error::contract("inverse mass matrix is not symmetric"));
                }
            }
        }
        // Cholesky as a positive-definiteness check.
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 {
                return Err(Error::contract("inverse mass matrix is not positive definite"));
            }
            l[(j, j)] = d.sqrt();
            for i in j + 1..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / l[(j, j)];
            }
        }
        Ok(MassInverse::Dense(m))
    }

    pub fn diagonal(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::contract("inverse masses must be positive"));
        }
        Ok(MassInverse::Diagonal(values))
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        match self {
            MassInverse::Identity => p.to_vec(),
            MassInverse::Diagonal(d) => p.iter().zip(d).map(|(a, b)| a * b).collect(),
            MassInverse::Dense(m) => (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| m[(i, j)] * p[j]).sum())
                .collect(),
        }
    }

    pub fn kinetic_energy(&self, p: &[f64]) -> f64 {
        0.5 * self.apply(p).iter().zip(p).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// `H(p, q) = 1/2 p^T M^{-1} p + V(q)`.
#[derive(Clone)]
pub struct SeparableSystem {
    mass_inverse: MassInverse,
    potential: Arc<dyn Potential>,
}

impl SeparableSystem {
    pub fn new(mass_inverse: MassInverse, potential: Arc<dyn Potential>) -> Result<Self> {
        let d = potential.dim();
        let ok = match &mass_inverse {
            MassInverse::Identity => true,
            MassInverse::Diagonal(v) => v.len() == d,
            MassInverse::Dense(m) => m.rows() == d,
        };
        if !ok {
            return Err(Error::contract("mass matrix and potential dimensions differ"));
        }
        Ok(SeparableSystem {
            mass_inverse,
            potential,
        })
    }

    /// Unit masses.
    pub fn with_unit_mass(potential: Arc<dyn Potential>) -> Self {
        SeparableSystem {
            mass_inverse: MassInverse::Identity,
            potential,
        }
    }

    pub fn mass_inverse(&self) -> &MassInverse {
        &self.mass_inverse
    }

    pub fn potential(&self) -> &dyn Potential {
        self.potential.as_ref()
    }

    pub fn eval_v(&self, q: &[f64]) -> f64 {
        self.potential.value(q)
    }

    pub fn grad_v(&self, q: &[f64]) -> Vec<f64> {
        self.potential.gradient(q)
    }

    pub fn velocity(&self, p: &[f64]) -> Vec<f64> {
        self.mass_inverse.apply(p)
    }
}

impl Hamiltonian for SeparableSystem {
    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn energy(&self, p: &[f64], q: &[f64]) -> f64 {
        self.mass_inverse.kinetic_energy(p) + self.potential.value(q)
    }

    fn grad_p(&self, p: &[f64], _q: &[f64]) -> Vec<f64> {
        self.mass_inverse.apply(p)
    }

    fn grad_q(&self, _p: &[f64], q: &[f64]) -> Vec<f64> {
        self.potential.gradient(q)
    }

    fn is_separable(&self) -> bool {
        true
    }
}

/// `V(q) = 1/2 |q|^2`.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicPotential {
    pub dim: usize,
}

impl Potential for HarmonicPotential {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, q: &[f64]) -> f64 {
        0.5 * q.iter().map(|x| x * x).sum::<f64>()
    }
    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        q.to_vec()
    }
}

/// Mathematical pendulum, `V(q) = -cos q`.
#[derive(Debug, Clone, Copy)]
pub struct PendulumPotential;

impl Potential for PendulumPotential {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, q: &[f64]) -> f64 {
        -q[0].cos()
    }
    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        vec![q[0].sin()]
    }
}

/// Zero potential on `dim` coordinates (free flight).
#[derive(Debug, Clone, Copy)]
pub struct ZeroPotential {
    pub dim: usize,
}

impl Potential for ZeroPotential {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _q: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        vec![0.0; q.len()]
    }
}

/// `H = 1/2 (|p|^2 + |q|^2)` in `dim` degrees of freedom.
pub fn harmonic_oscillator(dim: usize) -> SeparableSystem {
    SeparableSystem::with_unit_mass(Arc::new(HarmonicPotential { dim }))
}

/// `H = 1/2 p^2 - cos q`.
pub fn pendulum() -> SeparableSystem {
    SeparableSystem::with_unit_mass(Arc::new(PendulumPotential))
}
