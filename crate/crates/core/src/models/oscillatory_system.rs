use std::ops::Range;
use std::sync::Arc;

use super::{Hamiltonian, PhaseState, Potential, SeparableSystem};
use crate::error::{Error, Result};

/// A group of coordinates sharing one frequency. `omega == 0` marks slow
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub dim: usize,
    pub omega: f64,
}

/// `H = sum_j 1/2 (|p_j|^2 + omega_j^2 |q_j|^2) + U(q)` with unit masses.
///
/// Blocks with zero frequency form the slow part; there may be none of them
/// (e.g. Klein–Gordon, where every mode oscillates).
#[derive(Clone)]
pub struct OscillatorySystem {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    coordinate_omega: Vec<f64>,
    coupling: Arc<dyn Potential>,
    coupling_scale: f64,
}

impl OscillatorySystem {
    pub fn new(blocks: Vec<Block>, coupling: Arc<dyn Potential>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::contract("oscillatory system needs at least one block"));
        }
        if blocks.iter().any(|b| b.dim == 0 || !(b.omega >= 0.0) || !b.omega.is_finite()) {
            return Err(Error::contract(
                "blocks need positive dimension and a finite nonnegative frequency",
            ));
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut coordinate_omega = Vec::new();
        offsets.push(0);
        for b in &blocks {
            coordinate_omega.extend(std::iter::repeat_n(b.omega, b.dim));
            offsets.push(coordinate_omega.len());
        }
        if coupling.dim() != coordinate_omega.len() {
            return Err(Error::contract(format!(
                "coupling acts on {} coordinates but blocks provide {}",
                coupling.dim(),
                coordinate_omega.len()
            )));
        }
        Ok(OscillatorySystem {
            blocks,
            offsets,
            coordinate_omega,
            coupling,
            coupling_scale: 1.0,
        })
    }

    /// Same system with `U` multiplied by `scale` (0 gives the uncoupled
    /// linear problem).
    pub fn with_coupling_scale(&self, scale: f64) -> Self {
        OscillatorySystem {
            coupling_scale: scale,
            ..self.clone()
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_range(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// Frequency of every coordinate.
    pub fn coordinate_frequencies(&self) -> &[f64] {
        &self.coordinate_omega
    }

    /// Distinct nonzero block frequencies, in block order.
    pub fn fast_frequencies(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.omega).filter(|&w| w > 0.0).collect()
    }

    pub fn coupling_scale(&self) -> f64 {
        self.coupling_scale
    }

    pub fn eval_u(&self, q: &[f64]) -> f64 {
        if self.coupling_scale == 0.0 {
            return 0.0;
        }
        self.coupling_scale * self.coupling.value(q)
    }

    pub fn grad_u(&self, q: &[f64]) -> Vec<f64> {
        if self.coupling_scale == 0.0 {
            return vec![0.0; q.len()];
        }
        let mut g = self.coupling.gradient(q);
        if self.coupling_scale != 1.0 {
            g.iter_mut().for_each(|x| *x *= self.coupling_scale);
        }
        g
    }

    /// The same Hamiltonian viewed as `1/2|p|^2 + V(q)` with
    /// `V = 1/2 q^T Omega^2 q + U`, for use with the Euler and Verlet steppers.
    pub fn as_separable(&self) -> SeparableSystem {
        SeparableSystem::with_unit_mass(Arc::new(OscillatoryPotential {
            system: self.clone(),
        }))
    }
}

impl Hamiltonian for OscillatorySystem {
    fn dim(&self) -> usize {
        self.coordinate_omega.len()
    }

    fn energy(&self, p: &[f64], q: &[f64]) -> f64 {
        let quad: f64 = p
            .iter()
            .zip(q)
            .zip(&self.coordinate_omega)
            .map(|((pi, qi), w)| pi * pi + w * w * qi * qi)
            .sum();
        0.5 * quad + self.eval_u(q)
    }

    fn grad_p(&self, p: &[f64], _q: &[f64]) -> Vec<f64> {
        p.to_vec()
    }

    fn grad_q(&self, _p: &[f64], q: &[f64]) -> Vec<f64> {
        let mut g = self.grad_u(q);
        for ((gi, qi), w) in g.iter_mut().zip(q).zip(&self.coordinate_omega) {
            *gi += w * w * qi;
        }
        g
    }

    fn is_separable(&self) -> bool {
        true
    }
}

struct OscillatoryPotential {
    system: OscillatorySystem,
}

impl Potential for OscillatoryPotential {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn value(&self, q: &[f64]) -> f64 {
        let zeros = vec![0.0; q.len()];
        self.system.energy(&zeros, q)
    }

    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        self.system.grad_q(&[], q)
    }
}

/// Energy split of an oscillatory state.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatoryEnergies {
    /// `1/2(|p_j|^2 + omega_j^2 |q_j|^2)` for every block; for zero-frequency
    /// blocks this is just their kinetic energy.
    pub per_block: Vec<f64>,
    /// Sum of `per_block` over blocks with nonzero frequency.
    pub h_omega: f64,
    /// Kinetic energy of the slow blocks plus `U(q)`.
    pub h_slow: f64,
    pub total: f64,
}

pub fn oscillatory_energies(sys: &OscillatorySystem, y: &PhaseState) -> Result<OscillatoryEnergies> {
    y.check_dim(sys.dim())?;
    let mut per_block = Vec::with_capacity(sys.blocks.len());
    let mut h_omega = 0.0;
    let mut slow_kinetic = 0.0;
    for (j, b) in sys.blocks.iter().enumerate() {
        let r = sys.block_range(j);
        let pp: f64 = y.p[r.clone()].iter().map(|x| x * x).sum();
        let qq: f64 = y.q[r].iter().map(|x| x * x).sum();
        let e = 0.5 * (pp + b.omega * b.omega * qq);
        if b.omega > 0.0 {
            h_omega += e;
        } else {
            slow_kinetic += e;
        }
        per_block.push(e);
    }
    let h_slow = slow_kinetic + sys.eval_u(&y.q);
    Ok(OscillatoryEnergies {
        per_block,
        h_omega,
        h_slow,
        total: h_omega + h_slow,
    })
}
