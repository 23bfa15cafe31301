//! Fixed-step one-step methods for canonical Hamiltonian systems and the
//! structural diagnostics used to check them.
//!
//! The four Euler variants
//!
//! ```text
//! p_{n+1} = p_n - h grad_q H(p_{n+alpha}, q_{n+beta})
//! q_{n+1} = q_n + h grad_p H(p_{n+alpha}, q_{n+beta})
//! ```
//!
//! cover explicit (0,0), implicit (1,1) and the two symplectic Euler methods.
//! Störmer–Verlet is the kick–drift–kick map for separable Hamiltonians.
//! Step sizes are constant; there is deliberately no step-size control.

use std::fmt;
use std::str::FromStr;

use crate::densela::{self, Matrix};
use crate::error::{Error, Result};
use crate::models::{Hamiltonian, PhaseState, SeparableSystem};
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EulerVariant {
    alpha: u8,
    beta: u8,
}

impl EulerVariant {
    pub const EXPLICIT: EulerVariant = EulerVariant { alpha: 0, beta: 0 };
    pub const IMPLICIT: EulerVariant = EulerVariant { alpha: 1, beta: 1 };
    /// alpha = 1, beta = 0: momentum update first.
    pub const SYMPLECTIC_PQ: EulerVariant = EulerVariant { alpha: 1, beta: 0 };
    /// alpha = 0, beta = 1: position update first.
    pub const SYMPLECTIC_QP: EulerVariant = EulerVariant { alpha: 0, beta: 1 };

    pub fn new(alpha: u8, beta: u8) -> Result<Self> {
        if alpha > 1 || beta > 1 {
            return Err(Error::contract(format!(
                "Euler variant needs alpha, beta in {{0, 1}}, got ({alpha}, {beta})"
            )));
        }
        Ok(EulerVariant { alpha, beta })
    }

    pub fn alpha(&self) -> u8 {
        self.alpha
    }

    pub fn beta(&self) -> u8 {
        self.beta
    }

    pub fn is_symplectic(&self) -> bool {
        self.alpha != self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImplicitSolver {
    FixedPoint,
    /// Newton iteration with a forward-difference Jacobian.
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub h: f64,
    pub implicit_solver: ImplicitSolver,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl StepperConfig {
    /// Fixed-point iteration, tolerance 1e-12, at most 50 iterations.
    pub fn new(h: f64) -> Result<Self> {
        let cfg = StepperConfig {
            h,
            implicit_solver: ImplicitSolver::FixedPoint,
            solver_tol: 1e-12,
            solver_max_iter: 50,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_solver(mut self, solver: ImplicitSolver) -> Self {
        self.implicit_solver = solver;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::contract(format!("step size must be positive, got {}", self.h)));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::contract("solver tolerance must be positive"));
        }
        if self.solver_max_iter == 0 {
            return Err(Error::contract("solver needs at least one iteration"));
        }
        Ok(())
    }

    /// Copy with a different (possibly zero or negative) step size. Used by
    /// the diagnostics, which bypass the positivity check on purpose.
    pub fn with_step(&self, h: f64) -> Self {
        StepperConfig { h, ..*self }
    }
}

/// A one-step map `y_{n+1} = Phi_h(y_n)` for systems of type `S`.
pub trait OneStep<S: ?Sized> {
    fn step(&self, sys: &S, cfg: &StepperConfig, y: &PhaseState) -> Result<PhaseState>;
}

impl<S: ?Sized, M: OneStep<S> + ?Sized> OneStep<S> for &M {
    fn step(&self, sys: &S, cfg: &StepperConfig, y: &PhaseState) -> Result<PhaseState> {
        (**self).step(sys, cfg, y)
    }
}

fn axpy(x: &[f64], s: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + s * b).collect()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// One step of the selected Euler variant.
pub fn step_euler<S: Hamiltonian + ?Sized>(
    sys: &S,
    variant: EulerVariant,
    cfg: &StepperConfig,
    y: &PhaseState,
) -> Result<PhaseState> {
    y.check_dim(sys.dim())?;
    let h = cfg.h;
    let (p, q) = (&y.p, &y.q);
    match (variant.alpha, variant.beta) {
        (0, 0) => {
            let gq = sys.grad_q(p, q);
            let gp = sys.grad_p(p, q);
            Ok(PhaseState {
                p: axpy(p, -h, &gq),
                q: axpy(q, h, &gp),
            })
        }
        (1, 0) if sys.is_separable() => {
            let p1 = axpy(p, -h, &sys.grad_q(p, q));
            let q1 = axpy(q, h, &sys.grad_p(&p1, q));
            Ok(PhaseState { p: p1, q: q1 })
        }
        (0, 1) if sys.is_separable() => {
            let q1 = axpy(q, h, &sys.grad_p(p, q));
            let p1 = axpy(p, -h, &sys.grad_q(p, &q1));
            Ok(PhaseState { p: p1, q: q1 })
        }
        _ => solve_implicit_euler(sys, variant, cfg, y),
    }
}

/// The Euler update as a map of the unknown end point `z = (P, Q)`.
fn euler_map<S: Hamiltonian + ?Sized>(sys: &S, variant: EulerVariant, h: f64, y: &PhaseState, z: &PhaseState) -> PhaseState {
    let a = if variant.alpha == 1 { &z.p } else { &y.p };
    let b = if variant.beta == 1 { &z.q } else { &y.q };
    PhaseState {
        p: axpy(&y.p, -h, &sys.grad_q(a, b)),
        q: axpy(&y.q, h, &sys.grad_p(a, b)),
    }
}

fn converged(delta: &PhaseState, z: &PhaseState, tol: f64) -> bool {
    let dp = max_abs(&delta.p);
    let dq = max_abs(&delta.q);
    let sp = max_abs(&z.p).max(f64::MIN_POSITIVE);
    let sq = max_abs(&z.q).max(f64::MIN_POSITIVE);
    dp <= tol * sp && dq <= tol * sq
}

fn solve_implicit_euler<S: Hamiltonian + ?Sized>(
    sys: &S,
    variant: EulerVariant,
    cfg: &StepperConfig,
    y: &PhaseState,
) -> Result<PhaseState> {
    match cfg.implicit_solver {
        ImplicitSolver::FixedPoint => {
            let mut z = y.clone();
            let mut residual = f64::INFINITY;
            for _ in 0..cfg.solver_max_iter {
                let next = euler_map(sys, variant, cfg.h, y, &z);
                if !next.is_finite() {
                    break;
                }
                let delta = PhaseState {
                    p: next.p.iter().zip(&z.p).map(|(a, b)| a - b).collect(),
                    q: next.q.iter().zip(&z.q).map(|(a, b)| a - b).collect(),
                };
                residual = delta.max_abs();
                let done = converged(&delta, &next, cfg.solver_tol);
                z = next;
                if done {
                    return Ok(z);
                }
            }
            Err(Error::SolverDivergence {
                iterations: cfg.solver_max_iter,
                residual,
            })
        }
        ImplicitSolver::Newton => newton_euler(sys, variant, cfg, y),
    }
}

fn newton_euler<S: Hamiltonian + ?Sized>(
    sys: &S,
    variant: EulerVariant,
    cfg: &StepperConfig,
    y: &PhaseState,
) -> Result<PhaseState> {
    let n = 2 * y.dim();
    let residual_of = |zv: &[f64]| -> Vec<f64> {
        let z = PhaseState::from_vec(zv);
        let g = euler_map(sys, variant, cfg.h, y, &z).to_vec();
        zv.iter().zip(&g).map(|(a, b)| a - b).collect()
    };
    let mut z = y.to_vec();
    let mut res_norm = f64::INFINITY;
    for _ in 0..cfg.solver_max_iter {
        let r = residual_of(&z);
        res_norm = max_abs(&r);
        if !res_norm.is_finite() {
            break;
        }
        let mut jac = Matrix::zeros(n, n);
        for k in 0..n {
            let dz = f64::EPSILON.sqrt() * z[k].abs().max(1e-8);
            let mut zk = z.clone();
            zk[k] += dz;
            let rk = residual_of(&zk);
            for i in 0..n {
                jac[(i, k)] = (rk[i] - r[i]) / dz;
            }
        }
        let rhs = Matrix::column_vector(&r.iter().map(|x| -x).collect::<Vec<_>>());
        let delta = densela::solve(&jac, &rhs).map_err(|_| Error::SolverDivergence {
            iterations: cfg.solver_max_iter,
            residual: res_norm,
        })?;
        for (zi, d) in z.iter_mut().zip(delta.as_slice()) {
            *zi += d;
        }
        let dstate = PhaseState::from_vec(delta.as_slice());
        if converged(&dstate, &PhaseState::from_vec(&z), cfg.solver_tol) {
            return Ok(PhaseState::from_vec(&z));
        }
    }
    Err(Error::SolverDivergence {
        iterations: cfg.solver_max_iter,
        residual: res_norm,
    })
}

/// Störmer–Verlet for a separable Hamiltonian:
///
/// ```text
/// p_{n+1/2} = p_n - h/2 grad V(q_n)
/// q_{n+1}   = q_n + h M^{-1} p_{n+1/2}
/// p_{n+1}   = p_{n+1/2} - h/2 grad V(q_{n+1})
/// ```
pub fn step_stormer_verlet(sys: &SeparableSystem, cfg: &StepperConfig, y: &PhaseState) -> PhaseState {
    verlet_kdk(sys, cfg.h, y)
}

fn verlet_kdk<S: Hamiltonian + ?Sized>(sys: &S, h: f64, y: &PhaseState) -> PhaseState {
    let half = 0.5 * h;
    let p_half = axpy(&y.p, -half, &sys.grad_q(&y.p, &y.q));
    let q1 = axpy(&y.q, h, &sys.grad_p(&p_half, &y.q));
    let p1 = axpy(&p_half, -half, &sys.grad_q(&p_half, &q1));
    PhaseState { p: p1, q: q1 }
}

/// Named methods, as exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ExplicitEuler,
    ImplicitEuler,
    /// alpha = 0, beta = 1
    SymplecticEulerQp,
    /// alpha = 1, beta = 0
    SymplecticEulerPq,
    StormerVerlet,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::ExplicitEuler,
        Method::ImplicitEuler,
        Method::SymplecticEulerQp,
        Method::SymplecticEulerPq,
        Method::StormerVerlet,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::ExplicitEuler => "explicit-euler",
            Method::ImplicitEuler => "implicit-euler",
            Method::SymplecticEulerQp => "symplectic-euler-qp",
            Method::SymplecticEulerPq => "symplectic-euler-pq",
            Method::StormerVerlet => "stormer-verlet",
        }
    }

    pub fn euler_variant(&self) -> Option<EulerVariant> {
        match self {
            Method::ExplicitEuler => Some(EulerVariant::EXPLICIT),
            Method::ImplicitEuler => Some(EulerVariant::IMPLICIT),
            Method::SymplecticEulerQp => Some(EulerVariant::SYMPLECTIC_QP),
            Method::SymplecticEulerPq => Some(EulerVariant::SYMPLECTIC_PQ),
            Method::StormerVerlet => None,
        }
    }

    /// Classical order of accuracy.
    pub fn order(&self) -> u32 {
        match self {
            Method::StormerVerlet => 2,
            _ => 1,
        }
    }

    pub fn is_symplectic(&self) -> bool {
        matches!(
            self,
            Method::SymplecticEulerQp | Method::SymplecticEulerPq | Method::StormerVerlet
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::contract(format!("unknown method {s:?}")))
    }
}

impl<S: Hamiltonian + ?Sized> OneStep<S> for Method {
    fn step(&self, sys: &S, cfg: &StepperConfig, y: &PhaseState) -> Result<PhaseState> {
        match self.euler_variant() {
            Some(v) => step_euler(sys, v, cfg, y),
            None => {
                if !sys.is_separable() {
                    return Err(Error::contract("Störmer–Verlet needs a separable Hamiltonian"));
                }
                y.check_dim(sys.dim())?;
                Ok(verlet_kdk(sys, cfg.h, y))
            }
        }
    }
}

impl<S: Hamiltonian + ?Sized> OneStep<S> for EulerVariant {
    fn step(&self, sys: &S, cfg: &StepperConfig, y: &PhaseState) -> Result<PhaseState> {
        step_euler(sys, *self, cfg, y)
    }
}

/// Classical fourth-order Runge–Kutta on `y' = J^{-1} grad H(y)`. Not
/// symplectic; used for reference solutions at small step sizes.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClassicalRk4;

impl<S: Hamiltonian + ?Sized> OneStep<S> for ClassicalRk4 {
    fn step(&self, sys: &S, cfg: &StepperConfig, y: &PhaseState) -> Result<PhaseState> {
        y.check_dim(sys.dim())?;
        let h = cfg.h;
        let f = |s: &PhaseState| -> PhaseState {
            PhaseState {
                p: sys.grad_q(&s.p, &s.q).iter().map(|x| -x).collect(),
                q: sys.grad_p(&s.p, &s.q),
            }
        };
        let shift = |s: &PhaseState, c: f64, k: &PhaseState| PhaseState {
            p: axpy(&s.p, c, &k.p),
            q: axpy(&s.q, c, &k.q),
        };
        let k1 = f(y);
        let k2 = f(&shift(y, 0.5 * h, &k1));
        let k3 = f(&shift(y, 0.5 * h, &k2));
        let k4 = f(&shift(y, h, &k3));
        let combine = |a: &[f64], b1: &[f64], b2: &[f64], b3: &[f64], b4: &[f64]| -> Vec<f64> {
            (0..a.len())
                .map(|i| a[i] + h / 6.0 * (b1[i] + 2.0 * b2[i] + 2.0 * b3[i] + b4[i]))
                .collect()
        };
        Ok(PhaseState {
            p: combine(&y.p, &k1.p, &k2.p, &k3.p, &k4.p),
            q: combine(&y.q, &k1.q, &k2.q, &k3.q, &k4.q),
        })
    }
}

/// Recorded states of a fixed-step run.
pub type Trajectory = Vec<(f64, PhaseState)>;

/// Number of steps `round(t_end / h)` for a run.
pub fn step_count(t_end: f64, h: f64) -> Result<usize> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::contract(format!("t_end must be positive, got {t_end}")));
    }
    let n = (t_end / h).round();
    if !(n >= 1.0 && n < usize::MAX as f64) {
        return Err(Error::contract(format!(
            "t_end / h = {} is not a representable positive step count",
            t_end / h
        )));
    }
    Ok(n as usize)
}

/// Runs `round(t_end / h)` fixed steps, recording the initial state, every
/// `record_every`-th state and the final state.
pub fn integrate<S: ?Sized, M: OneStep<S> + ?Sized>(
    sys: &S,
    method: &M,
    cfg: &StepperConfig,
    y0: &PhaseState,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory> {
    cfg.validate()?;
    if record_every == 0 {
        return Err(Error::contract("record_every must be at least 1"));
    }
    let n = step_count(t_end, cfg.h)?;
    let mut out = Vec::with_capacity(n / record_every + 2);
    out.push((0.0, y0.clone()));
    let mut y = y0.clone();
    for k in 1..=n {
        y = method.step(sys, cfg, &y).map_err(|e| Error::Step {
            step: k,
            source: Box::new(e),
        })?;
        if !y.is_finite() {
            return Err(Error::Step {
                step: k,
                source: Box::new(Error::NonFinite),
            });
        }
        if k % record_every == 0 || k == n {
            out.push((k as f64 * cfg.h, y.clone()));
        }
    }
    Ok(out)
}

/// Final state after `n` steps, without recording.
pub fn propagate<S: ?Sized, M: OneStep<S> + ?Sized>(
    sys: &S,
    method: &M,
    cfg: &StepperConfig,
    y0: &PhaseState,
    steps: usize,
) -> Result<PhaseState> {
    let mut y = y0.clone();
    for k in 1..=steps {
        y = method.step(sys, cfg, &y).map_err(|e| Error::Step {
            step: k,
            source: Box::new(e),
        })?;
    }
    Ok(y)
}

/// Frobenius norm of `DPhi^T J DPhi - J`, with the Jacobian of the one-step
/// map from centered differences of width `fd_step`.
pub fn symplecticity_defect<S: ?Sized, M: OneStep<S> + ?Sized>(
    sys: &S,
    method: &M,
    cfg: &StepperConfig,
    y: &PhaseState,
    fd_step: f64,
) -> Result<f64> {
    if !(1e-8..=1e-4).contains(&fd_step) {
        return Err(Error::contract(format!(
            "finite-difference step must lie in [1e-8, 1e-4], got {fd_step}"
        )));
    }
    let base = y.to_vec();
    let n = base.len();
    let d = n / 2;
    let mut jac = Matrix::zeros(n, n);
    for k in 0..n {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[k] += fd_step;
        minus[k] -= fd_step;
        let fp = method.step(sys, cfg, &PhaseState::from_vec(&plus))?.to_vec();
        let fm = method.step(sys, cfg, &PhaseState::from_vec(&minus))?.to_vec();
        for i in 0..n {
            jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * fd_step);
        }
    }
    let j = structure_matrix(d);
    let form = jac.tr_matmul(&j.matmul(&jac));
    Ok((&form - &j).frobenius_norm())
}

/// `J = [[0, I], [-I, 0]]` for the `(p, q)` ordering.
pub fn structure_matrix(d: usize) -> Matrix {
    Matrix::from_fn(2 * d, 2 * d, |i, k| {
        if i < d && k == i + d {
            1.0
        } else if i >= d && k + d == i {
            -1.0
        } else {
            0.0
        }
    })
}

/// Max-norm of `Phi_{-h}(Phi_h(y)) - y`.
pub fn symmetry_defect<S: ?Sized, M: OneStep<S> + ?Sized>(
    sys: &S,
    method: &M,
    cfg: &StepperConfig,
    y: &PhaseState,
) -> Result<f64> {
    let forward = method.step(sys, cfg, y)?;
    let back = method.step(sys, &cfg.with_step(-cfg.h), &forward)?;
    Ok(back.distance(y))
}

/// A named scalar function of the state, tracked along a trajectory.
pub struct Integral<'a> {
    pub name: String,
    pub eval: Box<dyn Fn(&PhaseState) -> f64 + 'a>,
}

impl<'a> Integral<'a> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&PhaseState) -> f64 + 'a) -> Self {
        Integral {
            name: name.into(),
            eval: Box::new(eval),
        }
    }

    /// The total energy of `sys`, named `H`.
    pub fn energy<S: Hamiltonian + ?Sized>(sys: &'a S) -> Self {
        Integral::new("H", move |y| sys.energy_at(y))
    }
}

/// For every integral `X`: its value, `abs_X_err = X(t) - X(0)` and
/// `rel_X_err = (X(t) - X(0)) / |X(0)|` (the absolute error when `X(0) = 0`).
pub fn first_integral_series(run: &[(f64, PhaseState)], integrals: &[Integral<'_>]) -> Result<Series> {
    if integrals.is_empty() {
        return Err(Error::contract("at least one integral is required"));
    }
    let mut cols = vec!["t".to_string()];
    for i in integrals {
        cols.push(i.name.clone());
        cols.push(format!("abs_{}_err", i.name));
        cols.push(format!("rel_{}_err", i.name));
    }
    let mut series = Series::new(cols);
    let Some((_, y0)) = run.first() else {
        return Ok(series);
    };
    let initial: Vec<f64> = integrals.iter().map(|i| (i.eval)(y0)).collect();
    for (t, y) in run {
        let mut row = Vec::with_capacity(3 * integrals.len());
        for (i, &v0) in integrals.iter().zip(&initial) {
            let v = (i.eval)(y);
            let drift = v - v0;
            let rel = if v0 != 0.0 { drift / v0.abs() } else { drift };
            row.extend([v, drift, rel]);
        }
        series.push_record(*t, &row)?;
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{harmonic_oscillator, make_kepler, pendulum};
    use approx::assert_abs_diff_eq;

    fn cfg(h: f64) -> StepperConfig {
        StepperConfig::new(h).unwrap()
    }

    #[test]
    fn symplectic_euler_pq_on_oscillator() {
        let sys = harmonic_oscillator(1);
        let y = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        let out = step_euler(&sys, EulerVariant::SYMPLECTIC_PQ, &cfg(0.1), &y).unwrap();
        assert_eq!(out.p, vec![1.0]);
        assert_abs_diff_eq!(out.q[0], 0.1, epsilon = 1e-16);
    }

    #[test]
    fn explicit_euler_gains_energy() {
        let sys = harmonic_oscillator(1);
        let y = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        let out = step_euler(&sys, EulerVariant::EXPLICIT, &cfg(0.1), &y).unwrap();
        assert_eq!(out.p, vec![1.0]);
        assert_abs_diff_eq!(out.q[0], 0.1, epsilon = 1e-16);
        assert_abs_diff_eq!(sys.energy_at(&out), 0.505, epsilon = 1e-15);
    }

    #[test]
    fn zero_step_is_identity() {
        let sys = pendulum();
        let y = PhaseState::new(vec![0.3], vec![1.2]).unwrap();
        let c = cfg(1.0).with_step(0.0);
        for m in Method::ALL {
            assert_eq!(m.step(&sys, &c, &y).unwrap(), y, "{m}");
        }
    }

    #[test]
    fn verlet_on_oscillator() {
        let sys = harmonic_oscillator(1);
        let y = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        let out = step_stormer_verlet(&sys, &cfg(0.1), &y);
        assert_abs_diff_eq!(out.p[0], 0.995, epsilon = 1e-15);
        assert_abs_diff_eq!(out.q[0], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn verlet_is_exact_for_free_flight() {
        use crate::models::{MassInverse, ZeroPotential};
        use std::sync::Arc;
        let sys = SeparableSystem::new(
            MassInverse::diagonal(vec![2.0, 0.5]).unwrap(),
            Arc::new(ZeroPotential { dim: 2 }),
        )
        .unwrap();
        let y = PhaseState::new(vec![1.0, -2.0], vec![0.5, 0.25]).unwrap();
        let out = step_stormer_verlet(&sys, &cfg(0.25), &y);
        assert_eq!(out.p, y.p);
        assert_eq!(out.q, vec![0.5 + 0.25 * 2.0, 0.25 - 0.25]);
    }

    #[test]
    fn implicit_euler_on_oscillator_matches_closed_form() {
        // (I - hA) y1 = y0 with A = [[0, -1], [1, 0]]  =>  y1 = (p - h q, q + h p) / (1 + h^2)
        let sys = harmonic_oscillator(1);
        let y = PhaseState::new(vec![0.7], vec![-0.2]).unwrap();
        let h = 0.1;
        let expected_p = (0.7 - h * -0.2) / (1.0 + h * h);
        let expected_q = (-0.2 + h * 0.7) / (1.0 + h * h);
        for solver in [ImplicitSolver::FixedPoint, ImplicitSolver::Newton] {
            let c = cfg(h).with_solver(solver);
            let out = step_euler(&sys, EulerVariant::IMPLICIT, &c, &y).unwrap();
            assert_abs_diff_eq!(out.p[0], expected_p, epsilon = 1e-12);
            assert_abs_diff_eq!(out.q[0], expected_q, epsilon = 1e-12);
        }
    }

    #[test]
    fn fixed_point_divergence_is_reported() {
        let sys = harmonic_oscillator(1);
        let y = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        // h L > 1: the fixed-point map is not a contraction.
        let err = step_euler(&sys, EulerVariant::IMPLICIT, &cfg(2.0), &y).unwrap_err();
        assert!(matches!(err, Error::SolverDivergence { iterations: 50, .. }), "{err}");
        // Newton handles the linear problem regardless.
        let c = cfg(2.0).with_solver(ImplicitSolver::Newton);
        assert!(step_euler(&sys, EulerVariant::IMPLICIT, &c, &y).is_ok());
    }

    /// A non-separable Hamiltonian H = 1/2 p^2 (1 + q^2) + 1/2 q^2.
    struct Coupled;
    impl Hamiltonian for Coupled {
        fn dim(&self) -> usize {
            1
        }
        fn energy(&self, p: &[f64], q: &[f64]) -> f64 {
            0.5 * p[0] * p[0] * (1.0 + q[0] * q[0]) + 0.5 * q[0] * q[0]
        }
        fn grad_p(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
            vec![p[0] * (1.0 + q[0] * q[0])]
        }
        fn grad_q(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
            vec![p[0] * p[0] * q[0] + q[0]]
        }
    }

    #[test]
    fn mixed_variants_solve_implicitly_for_general_h() {
        let y = PhaseState::new(vec![0.4], vec![0.3]).unwrap();
        let c = cfg(0.05);
        for v in [EulerVariant::SYMPLECTIC_PQ, EulerVariant::SYMPLECTIC_QP] {
            let out = step_euler(&Coupled, v, &c, &y).unwrap();
            let check = euler_map(&Coupled, v, c.h, &y, &out);
            assert!(check.distance(&out) <= 1e-13);
            let defect = symplecticity_defect(&Coupled, &v, &c, &y, 1e-6).unwrap();
            assert!(defect <= 1e-6, "{defect}");
        }
        assert!(Method::StormerVerlet.step(&Coupled, &c, &y).is_err());
    }

    #[test]
    fn defect_of_explicit_euler_has_closed_form() {
        let sys = harmonic_oscillator(1);
        let y = PhaseState::new(vec![0.3], vec![0.8]).unwrap();
        let d = symplecticity_defect(&sys, &Method::ExplicitEuler, &cfg(0.1), &y, 1e-6).unwrap();
        assert_abs_diff_eq!(d, 0.01 * 2f64.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn defect_of_identity_map() {
        let sys = pendulum();
        let y = PhaseState::new(vec![0.3], vec![0.8]).unwrap();
        let c = cfg(0.1).with_step(0.0);
        let d = symplecticity_defect(&sys, &Method::ExplicitEuler, &c, &y, 1e-6).unwrap();
        assert!(d <= 1e-10);
        assert!(symplecticity_defect(&sys, &Method::ExplicitEuler, &c, &y, 1e-3).is_err());
    }

    #[test]
    fn defect_of_symplectic_euler_on_pendulum() {
        let sys = pendulum();
        let y = PhaseState::new(vec![0.5], vec![2.0]).unwrap();
        let d = symplecticity_defect(&sys, &Method::SymplecticEulerPq, &cfg(0.1), &y, 1e-6).unwrap();
        assert!(d <= 1e-6, "{d}");
    }

    #[test]
    fn verlet_composition_of_half_step_eulers() {
        let (sys, _) = make_kepler(0.3).unwrap();
        let y = PhaseState::new(vec![0.1, 0.9], vec![0.8, -0.4]).unwrap();
        let h = 0.05;
        let half = cfg(h / 2.0);
        let first = step_euler(&sys, EulerVariant::SYMPLECTIC_PQ, &half, &y).unwrap();
        let composed = step_euler(&sys, EulerVariant::SYMPLECTIC_QP, &half, &first).unwrap();
        let verlet = step_stormer_verlet(&sys, &cfg(h), &y);
        assert!(composed.distance(&verlet) <= 1e-14);
    }

    #[test]
    fn symmetry_of_verlet_and_asymmetry_of_euler() {
        let (sys, _) = make_kepler(0.6).unwrap();
        let y = PhaseState::new(vec![0.2, 1.1], vec![0.7, 0.3]).unwrap();
        let d = symmetry_defect(&sys, &Method::StormerVerlet, &cfg(0.01), &y).unwrap();
        assert!(d <= 1e-13, "{d}");

        let osc = harmonic_oscillator(1);
        let y = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        let d = symmetry_defect(&osc, &Method::ExplicitEuler, &cfg(0.1), &y).unwrap();
        // (I - hA)(I + hA) = (1 + h^2) I
        assert_abs_diff_eq!(d, 0.01, epsilon = 1e-15);
        let c = cfg(0.1).with_step(0.0);
        assert_eq!(symmetry_defect(&osc, &Method::ExplicitEuler, &c, &y).unwrap(), 0.0);
    }

    #[test]
    fn integrate_records_endpoints() {
        let sys = harmonic_oscillator(1);
        let y0 = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        let run = integrate(&sys, &Method::StormerVerlet, &cfg(0.1), &y0, 1.0, 1000).unwrap();
        assert_eq!(run.len(), 2);
        assert_eq!(run[0].0, 0.0);
        assert_abs_diff_eq!(run[1].0, 1.0, epsilon = 1e-15);

        let run = integrate(&sys, &Method::StormerVerlet, &cfg(0.1), &y0, 1.0, 3).unwrap();
        let times: Vec<f64> = run.iter().map(|(t, _)| *t).collect();
        assert_eq!(times.len(), 5); // 0, 3, 6, 9, 10 steps
        assert!(integrate(&sys, &Method::StormerVerlet, &cfg(0.1), &y0, 1.0, 0).is_err());
        assert!(integrate(&sys, &Method::StormerVerlet, &cfg(0.1), &y0, -1.0, 1).is_err());
    }

    #[test]
    fn verlet_over_one_period() {
        let sys = harmonic_oscillator(1);
        let y0 = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        let run = integrate(&sys, &Method::StormerVerlet, &cfg(0.01), &y0, 2.0 * std::f64::consts::PI, 100).unwrap();
        // 628 steps end at t = 6.28, short of the period; compare with the exact flow there.
        let (t, y) = run.last().unwrap();
        assert_eq!(run.len(), 8);
        let exact = PhaseState::new(vec![t.cos()], vec![t.sin()]).unwrap();
        assert!(y.distance(&exact) <= 1e-3);
    }

    #[test]
    fn integrate_reports_failing_step() {
        let sys = harmonic_oscillator(1);
        let y0 = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        let err = integrate(&sys, &Method::ImplicitEuler, &cfg(2.0), &y0, 10.0, 1).unwrap_err();
        match err {
            Error::Step { step, source } => {
                assert_eq!(step, 1);
                assert!(matches!(*source, Error::SolverDivergence { .. }));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn constant_integral_has_no_drift() {
        let sys = harmonic_oscillator(1);
        let y0 = PhaseState::new(vec![1.0], vec![0.0]).unwrap();
        let run = integrate(&sys, &Method::ExplicitEuler, &cfg(0.1), &y0, 1.0, 1).unwrap();
        let s = first_integral_series(&run, &[Integral::new("c", |_| 3.0), Integral::energy(&sys)]).unwrap();
        assert_eq!(s.max_abs("abs_c_err"), Some(0.0));
        assert!(s.max_abs("rel_H_err").unwrap() > 0.0);
        assert_eq!(s.columns()[..4], ["t", "c", "abs_c_err", "rel_c_err"]);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("leapfrog".parse::<Method>().is_err());
        assert!(EulerVariant::new(2, 0).is_err());
    }
}
