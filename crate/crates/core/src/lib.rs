//! Geometric integrators for Hamiltonian and matrix differential equations.
//!
//! * [`symplectic`]: Euler variants, Störmer–Verlet and structural diagnostics.
//! * [`oscillatory`]: trigonometric integrators for highly oscillatory systems.
//! * [`lowrank`]: the projector-splitting integrator for dynamical low-rank
//!   approximation.
//! * [`harness`]: experiment registry, CSV output and the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densela;
pub mod error;
pub mod harness;
pub mod lowrank;
pub mod models;
pub mod oscillatory;
pub mod series;
pub mod symplectic;

pub use error::{Error, Result};
pub use models::PhaseState;
pub use series::Series;
