//! Dynamical low-rank approximation `Y' = P_Y F(t, Y)` on the manifold of
//! rank-`r` matrices, with `Y = U S V^T`.
//!
//! The projector-splitting integrator splits
//! `P_Y Z = Z V V^T - U U^T Z V V^T + U U^T Z` into three subflows (K, S and
//! L) that are solved one after another with a QR factorization in between.
//! None of them needs the inverse of `S`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::densela::{qr_thin, solve, svd_full, truncated_svd, Matrix};
use crate::error::{Error, Result};

const ORTHONORMALITY_TOL: f64 = 1e-12;

/// `Y = U S V^T` with orthonormal `U` (m×r), `V` (n×r) and a square core `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    pub u: Matrix,
    pub s: Matrix,
    pub v: Matrix,
}

impl LowRankFactors {
    pub fn new(u: Matrix, s: Matrix, v: Matrix) -> Result<Self> {
        let r = s.rows();
        if s.cols() != r || u.cols() != r || v.cols() != r || r == 0 {
            return Err(Error::contract(format!(
                "factor shapes {:?}, {:?}, {:?} do not form a rank-r triple",
                u.shape(),
                s.shape(),
                v.shape()
            )));
        }
        if u.rows() < r || v.rows() < r {
            return Err(Error::contract("rank exceeds a matrix dimension"));
        }
        if !(u.is_finite() && s.is_finite() && v.is_finite()) {
            return Err(Error::contract("factors must be finite"));
        }
        for (name, m) in [("u", &u), ("v", &v)] {
            let d = m.orthonormality_defect();
            if d > ORTHONORMALITY_TOL {
                return Err(Error::contract(format!("{name} is not orthonormal (defect {d:e})")));
            }
        }
        Ok(LowRankFactors { u, s, v })
    }

    /// Rank-`r` truncated SVD of `a` in factored form.
    pub fn from_matrix(a: &Matrix, r: usize) -> Result<Self> {
        let (m, n) = a.shape();
        if r == 0 || r > m.min(n) {
            return Err(Error::contract(format!("rank {r} outside 1..={}", m.min(n))));
        }
        let svd = svd_full(a)?;
        Ok(LowRankFactors {
            u: svd.left_vectors.leading_columns(r),
            s: Matrix::diag(&svd.singular_values[..r]),
            v: svd.right_vectors.leading_columns(r),
        })
    }

    pub fn rank(&self) -> usize {
        self.s.rows()
    }

    /// `(m, n)` of the represented matrix.
    pub fn dims(&self) -> (usize, usize) {
        (self.u.rows(), self.v.rows())
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        Ok(svd_full(&self.s)?.singular_values)
    }
}

/// `U S V^T`.
pub fn to_full(y: &LowRankFactors) -> Matrix {
    y.u.matmul(&y.s).matmul_tr(&y.v)
}

/// `P_Y Z = Z V V^T - U U^T Z V V^T + U U^T Z`.
pub fn tangent_project(y: &LowRankFactors, z: &Matrix) -> Result<Matrix> {
    if z.shape() != y.dims() {
        return Err(Error::contract(format!(
            "cannot project a {:?} matrix at a {:?} point",
            z.shape(),
            y.dims()
        )));
    }
    let zv = z.matmul(&y.v);
    let utz = y.u.tr_matmul(z);
    let utzv = utz.matmul(&y.v);
    let mut out = zv.matmul_tr(&y.v);
    out -= &y.u.matmul(&utzv).matmul_tr(&y.v);
    out += &y.u.matmul(&utz);
    Ok(out)
}

/// `1 / sigma_min(S)`, the curvature scale of the manifold at `Y`.
pub fn curvature_proxy(y: &LowRankFactors) -> Result<f64> {
    let sigma = svd_full(&y.s)?.singular_values;
    let smallest = sigma.last().copied().unwrap_or(0.0);
    if smallest == 0.0 {
        return Err(Error::SingularCore);
    }
    Ok(1.0 / smallest)
}

/// A matrix differential equation `A' = F(t, A)`.
pub trait MatrixFlow: Sync {
    fn dims(&self) -> (usize, usize);

    /// The vector field at the full matrix `y`.
    fn eval(&self, t: f64, y: &Matrix) -> Matrix;

    /// The solution, when the flow is the derivative of a known family.
    fn exact(&self, _t: f64) -> Option<Matrix> {
        None
    }
}

/// `A(t) = A0 + t A1`, with `F(t, Y) = A1`.
#[derive(Debug, Clone)]
pub struct AffineFamily {
    pub a0: Matrix,
    pub a1: Matrix,
}

impl MatrixFlow for AffineFamily {
    fn dims(&self) -> (usize, usize) {
        self.a0.shape()
    }

    fn eval(&self, _t: f64, _y: &Matrix) -> Matrix {
        self.a1.clone()
    }

    fn exact(&self, t: f64) -> Option<Matrix> {
        let mut a = self.a0.clone();
        a.axpy(t, &self.a1);
        Some(a)
    }
}

/// `exp(t W)` for `W = P^T blockdiag(theta_k J) P`, `J = [[0, -1], [1, 0]]`.
#[derive(Debug, Clone)]
pub struct Rotation {
    p: Matrix,
    theta: Vec<f64>,
}

impl Rotation {
    /// `p` must be orthogonal; `theta` holds one angular speed per 2×2 block
    /// (a trailing odd coordinate stays fixed).
    pub fn new(p: Matrix, theta: Vec<f64>) -> Result<Self> {
        let n = p.rows();
        if p.cols() != n || theta.len() != n / 2 {
            return Err(Error::contract("rotation needs a square P and n/2 angles"));
        }
        if p.orthonormality_defect() > 1e-10 {
            return Err(Error::contract("rotation basis is not orthogonal"));
        }
        Ok(Rotation { p, theta })
    }

    /// Haar-random basis and angular speeds drawn from N(0, 1).
    pub fn random(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let g = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
        let (p, _) = qr_thin(&g).expect("a Gaussian matrix is finite");
        let theta = (0..n / 2).map(|_| StandardNormal.sample(rng)).collect();
        Rotation { p, theta }
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    /// The generator `W`.
    pub fn generator(&self) -> Matrix {
        let n = self.dim();
        let mut b = Matrix::zeros(n, n);
        for (k, &th) in self.theta.iter().enumerate() {
            b[(2 * k, 2 * k + 1)] = -th;
            b[(2 * k + 1, 2 * k)] = th;
        }
        self.p.tr_matmul(&b).matmul(&self.p)
    }

    /// `B(t) X` for the block rotation `B(t) = exp(t blockdiag(theta_k J))`.
    fn rotate_rows(&self, t: f64, x: &mut Matrix) {
        for (k, &th) in self.theta.iter().enumerate() {
            let (s, c) = (th * t).sin_cos();
            for j in 0..x.cols() {
                let a = x[(2 * k, j)];
                let b = x[(2 * k + 1, j)];
                x[(2 * k, j)] = c * a - s * b;
                x[(2 * k + 1, j)] = s * a + c * b;
            }
        }
    }

    pub fn at(&self, t: f64) -> Matrix {
        let mut x = self.p.clone();
        self.rotate_rows(t, &mut x);
        self.p.tr_matmul(&x)
    }
}

/// `A(t) = Q1(t) D Q2(t)^T` with `Q_i(t) = exp(t W_i)`, driven by
/// `F(t, Y) = A'(t) = Q1(t) (W1 D - D W2) Q2(t)^T`.
#[derive(Debug, Clone)]
pub struct RotatingFamily {
    left: Rotation,
    right: Rotation,
    d: Matrix,
    /// `P1 D P2^T` and `P1 (W1 D - D W2) P2^T`
    core: Matrix,
    core_dot: Matrix,
}

impl RotatingFamily {
    pub fn new(left: Rotation, right: Rotation, d: Matrix) -> Result<Self> {
        if d.shape() != (left.dim(), right.dim()) {
            return Err(Error::contract("D does not match the rotation sizes"));
        }
        let dot = &left.generator().matmul(&d) - &d.matmul(&right.generator());
        let core = left.p.matmul(&d).matmul_tr(&right.p);
        let core_dot = left.p.matmul(&dot).matmul_tr(&right.p);
        Ok(RotatingFamily {
            left,
            right,
            d,
            core,
            core_dot,
        })
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    /// `P1^T B1(t) X B2(t)^T P2`
    fn conjugate(&self, t: f64, x: &Matrix) -> Matrix {
        let mut y = x.clone();
        self.left.rotate_rows(t, &mut y);
        let mut yt = y.transpose();
        self.right.rotate_rows(t, &mut yt);
        self.left.p.tr_matmul(&yt.transpose()).matmul(&self.right.p)
    }
}

impl MatrixFlow for RotatingFamily {
    fn dims(&self) -> (usize, usize) {
        self.d.shape()
    }

    fn eval(&self, t: f64, _y: &Matrix) -> Matrix {
        self.conjugate(t, &self.core_dot)
    }

    fn exact(&self, t: f64) -> Option<Matrix> {
        Some(self.conjugate(t, &self.core))
    }
}

/// Classical fourth-order Runge–Kutta with `substeps` steps over `[t, t+h]`.
fn rk4<F>(f: F, t: f64, h: f64, x0: Matrix, substeps: usize) -> Matrix
where
    F: Fn(f64, &Matrix) -> Matrix,
{
    let dt = h / substeps as f64;
    let mut x = x0;
    for k in 0..substeps {
        let tk = t + k as f64 * dt;
        let k1 = f(tk, &x);
        let mut tmp = x.clone();
        tmp.axpy(0.5 * dt, &k1);
        let k2 = f(tk + 0.5 * dt, &tmp);
        let mut tmp = x.clone();
        tmp.axpy(0.5 * dt, &k2);
        let k3 = f(tk + 0.5 * dt, &tmp);
        let mut tmp = x.clone();
        tmp.axpy(dt, &k3);
        let k4 = f(tk + dt, &tmp);
        x.axpy(dt / 6.0, &k1);
        x.axpy(dt / 3.0, &k2);
        x.axpy(dt / 3.0, &k3);
        x.axpy(dt / 6.0, &k4);
    }
    x
}

fn checked_qr(a: &Matrix, substep: &'static str) -> Result<(Matrix, Matrix)> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let (q, r) = qr_thin(a)?;
    if (0..r.rows()).any(|i| !(r[(i, i)] > 0.0)) {
        return Err(Error::RankDeficiency { substep });
    }
    Ok((q, r))
}

fn check_step_args(flow: &dyn MatrixFlow, y: &LowRankFactors, h: f64, substeps: usize) -> Result<()> {
    if flow.dims() != y.dims() {
        return Err(Error::contract(format!(
            "flow acts on {:?} matrices but the factors represent {:?}",
            flow.dims(),
            y.dims()
        )));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::contract(format!("step size must be positive, got {h}")));
    }
    if substeps == 0 {
        return Err(Error::contract("substeps must be at least 1"));
    }
    Ok(())
}

/// K-substep: `K' = F(t, K V^T) V`, then `K = U S`.
fn k_substep(flow: &dyn MatrixFlow, u_s: Matrix, v: &Matrix, t: f64, h: f64, substeps: usize) -> Result<(Matrix, Matrix)> {
    let k = rk4(|tau, k| flow.eval(tau, &k.matmul_tr(v)).matmul(v), t, h, u_s, substeps);
    checked_qr(&k, "K")
}

/// S-substep: `S' = -U^T F(t, U S V^T) V`.
fn s_substep(flow: &dyn MatrixFlow, u: &Matrix, s: Matrix, v: &Matrix, t: f64, h: f64, substeps: usize) -> Matrix {
    rk4(
        |tau, s| {
            let y = u.matmul(s).matmul_tr(v);
            u.tr_matmul(&flow.eval(tau, &y)).matmul(v).scale(-1.0)
        },
        t,
        h,
        s,
        substeps,
    )
}

/// L-substep: `L' = F(t, U L^T)^T U`, then `L = V S^T`.
fn l_substep(flow: &dyn MatrixFlow, u: &Matrix, v_st: Matrix, t: f64, h: f64, substeps: usize) -> Result<(Matrix, Matrix)> {
    let l = rk4(|tau, l| flow.eval(tau, &u.matmul_tr(l)).tr_matmul(u), t, h, v_st, substeps);
    let (v, r) = checked_qr(&l, "L")?;
    Ok((v, r.transpose()))
}

fn sweep_ksl(flow: &dyn MatrixFlow, y: &LowRankFactors, t: f64, h: f64, substeps: usize) -> Result<LowRankFactors> {
    let (u, s) = k_substep(flow, y.u.matmul(&y.s), &y.v, t, h, substeps)?;
    let s = s_substep(flow, &u, s, &y.v, t, h, substeps);
    let (v, s) = l_substep(flow, &u, y.v.matmul_tr(&s), t, h, substeps)?;
    Ok(LowRankFactors { u, s, v })
}

fn sweep_lsk(flow: &dyn MatrixFlow, y: &LowRankFactors, t: f64, h: f64, substeps: usize) -> Result<LowRankFactors> {
    let (v, s) = l_substep(flow, &y.u, y.v.matmul_tr(&y.s), t, h, substeps)?;
    let s = s_substep(flow, &y.u, s, &v, t, h, substeps);
    let (u, s) = k_substep(flow, y.u.matmul(&s), &v, t, h, substeps)?;
    Ok(LowRankFactors { u, s, v })
}

/// One Lie step of the projector-splitting integrator over `[t, t+h]`.
pub fn ksl_step(flow: &dyn MatrixFlow, y: &LowRankFactors, t: f64, h: f64, substeps: usize) -> Result<LowRankFactors> {
    check_step_args(flow, y, h, substeps)?;
    sweep_ksl(flow, y, t, h, substeps)
}

/// Symmetric composition: K, S, L over `[t, t+h/2]`, then L, S, K over
/// `[t+h/2, t+h]`.
pub fn strang_step(flow: &dyn MatrixFlow, y: &LowRankFactors, t: f64, h: f64, substeps: usize) -> Result<LowRankFactors> {
    check_step_args(flow, y, h, substeps)?;
    let half = 0.5 * h;
    let mid = sweep_ksl(flow, y, t, half, substeps)?;
    sweep_lsk(flow, &mid, t + half, half, substeps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    Lie,
    Strang,
}

impl Splitting {
    pub fn name(&self) -> &'static str {
        match self {
            Splitting::Lie => "ksl",
            Splitting::Strang => "ksl-strang",
        }
    }

    pub fn step(&self, flow: &dyn MatrixFlow, y: &LowRankFactors, t: f64, h: f64, substeps: usize) -> Result<LowRankFactors> {
        match self {
            Splitting::Lie => ksl_step(flow, y, t, h, substeps),
            Splitting::Strang => strang_step(flow, y, t, h, substeps),
        }
    }
}

/// State and diagnostics at one recorded time.
#[derive(Debug, Clone)]
pub struct LowRankRecord {
    pub t: f64,
    pub factors: LowRankFactors,
    pub singular_values: Vec<f64>,
    /// `1 / sigma_min(S)`; infinite for a singular core.
    pub curvature: f64,
    /// `||Y(t) - A(t)||_F` when the flow knows `A`.
    pub error: Option<f64>,
    /// `||A(t) - best rank-r approximation||_F` when the flow knows `A`.
    pub best_error: Option<f64>,
}

fn record(flow: &dyn MatrixFlow, t: f64, y: &LowRankFactors, with_best: bool) -> Result<LowRankRecord> {
    let singular_values = y.singular_values()?;
    let curvature = match curvature_proxy(y) {
        Ok(c) => c,
        Err(Error::SingularCore) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let (error, best_error) = match flow.exact(t) {
        Some(a) => {
            let err = (&to_full(y) - &a).frobenius_norm();
            let best = if with_best {
                Some(truncated_svd(&a, y.rank())?.1)
            } else {
                None
            };
            (Some(err), best)
        }
        None => (None, None),
    };
    Ok(LowRankRecord {
        t,
        factors: y.clone(),
        singular_values,
        curvature,
        error,
        best_error,
    })
}

/// Options of a low-rank run.
#[derive(Debug, Clone, Copy)]
pub struct LowRankRun {
    pub splitting: Splitting,
    pub h: f64,
    pub substeps: usize,
    pub record_every: usize,
    /// Compute the best-approximation error at every record (one SVD each).
    pub best_error: bool,
}

impl LowRankRun {
    pub fn new(splitting: Splitting, h: f64) -> Self {
        LowRankRun {
            splitting,
            h,
            substeps: 10,
            record_every: 1,
            best_error: true,
        }
    }
}

/// Fixed-step integration from `t0` to `t_end` with `round((t_end - t0)/h)`
/// steps; records the start, every `record_every`-th step and the end.
pub fn integrate_lowrank(
    flow: &dyn MatrixFlow,
    y0: &LowRankFactors,
    t0: f64,
    t_end: f64,
    opts: &LowRankRun,
) -> Result<Vec<LowRankRecord>> {
    if opts.record_every == 0 {
        return Err(Error::contract("record_every must be at least 1"));
    }
    if !(t_end >= t0) {
        return Err(Error::contract("t_end must not precede t0"));
    }
    check_step_args(flow, y0, opts.h, opts.substeps)?;
    let n = ((t_end - t0) / opts.h).round() as usize;
    let mut out = vec![record(flow, t0, y0, opts.best_error)?];
    let mut y = y0.clone();
    for k in 1..=n {
        let t = t0 + (k - 1) as f64 * opts.h;
        y = opts
            .splitting
            .step(flow, &y, t, opts.h, opts.substeps)
            .map_err(|e| Error::Step { step: k, source: Box::new(e) })?;
        if k % opts.record_every == 0 || k == n {
            out.push(record(flow, t0 + k as f64 * opts.h, &y, opts.best_error)?);
        }
    }
    Ok(out)
}

/// Final factors after `steps` steps, without diagnostics.
pub fn propagate_lowrank(
    flow: &dyn MatrixFlow,
    splitting: Splitting,
    y0: &LowRankFactors,
    t0: f64,
    h: f64,
    steps: usize,
    substeps: usize,
) -> Result<LowRankFactors> {
    let mut y = y0.clone();
    for k in 0..steps {
        y = splitting
            .step(flow, &y, t0 + k as f64 * h, h, substeps)
            .map_err(|e| Error::Step { step: k + 1, source: Box::new(e) })?;
    }
    Ok(y)
}

/// Right-hand side of the factor equations under the gauge `U^T U' = 0`,
/// `V^T V' = 0`:
///
/// ```text
/// S' = U^T F V
/// U' = (I - U U^T) F V S^{-1}
/// V' = (I - V V^T) F^T U S^{-T}
/// ```
fn gauge_rhs(flow: &dyn MatrixFlow, t: f64, y: &LowRankFactors) -> Result<LowRankFactors> {
    let f = flow.eval(t, &to_full(y));
    let fv = f.matmul(&y.v);
    let ftu = f.tr_matmul(&y.u);
    let s_dot = y.u.tr_matmul(&fv);
    let mut u_perp = fv.clone();
    u_perp -= &y.u.matmul(&s_dot);
    let mut v_perp = ftu.clone();
    v_perp -= &y.v.matmul(&s_dot.transpose());
    // X S = B  <=>  S^T X^T = B^T
    let u_dot = solve(&y.s.transpose(), &u_perp.transpose())?.transpose();
    // X S^T = C  <=>  S X^T = C^T
    let v_dot = solve(&y.s, &v_perp.transpose())?.transpose();
    Ok(LowRankFactors {
        u: u_dot,
        s: s_dot,
        v: v_dot,
    })
}

fn shifted(y: &LowRankFactors, c: f64, d: &LowRankFactors) -> LowRankFactors {
    let mut out = y.clone();
    out.u.axpy(c, &d.u);
    out.s.axpy(c, &d.s);
    out.v.axpy(c, &d.v);
    out
}

/// How a run of the naive factor equations ended.
#[derive(Debug, Clone, PartialEq)]
pub enum NaiveOutcome {
    Finished { error: f64 },
    /// Entries overflowed to infinity or NaN at this step.
    Overflow { step: usize },
    /// The core became numerically singular at this step.
    SingularCore { step: usize },
}

impl NaiveOutcome {
    pub fn error(&self) -> Option<f64> {
        match self {
            NaiveOutcome::Finished { error } => Some(*error),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NaiveOutcome::Finished { .. } => "finished",
            NaiveOutcome::Overflow { .. } => "overflow",
            NaiveOutcome::SingularCore { .. } => "singular",
        }
    }
}

/// Integrates the gauge factor equations (which contain `S^{-1}`) with one
/// classical Runge–Kutta step of size `h` per step; returns the final
/// factors or the step at which the run broke down.
pub fn integrate_naive(
    flow: &dyn MatrixFlow,
    y0: &LowRankFactors,
    t0: f64,
    h: f64,
    steps: usize,
) -> Result<std::result::Result<LowRankFactors, NaiveOutcome>> {
    check_step_args(flow, y0, h, 1)?;
    let mut y = y0.clone();
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * h;
        let stage = |t: f64, y: &LowRankFactors| match gauge_rhs(flow, t, y) {
            Ok(d) => Ok(d),
            Err(Error::Singular) => Err(NaiveOutcome::SingularCore { step: k }),
            Err(_) => Err(NaiveOutcome::Overflow { step: k }),
        };
        let result = (|| {
            let k1 = stage(t, &y)?;
            let k2 = stage(t + 0.5 * h, &shifted(&y, 0.5 * h, &k1))?;
            let k3 = stage(t + 0.5 * h, &shifted(&y, 0.5 * h, &k2))?;
            let k4 = stage(t + h, &shifted(&y, h, &k3))?;
            let mut next = shifted(&y, h / 6.0, &k1);
            next = shifted(&next, h / 3.0, &k2);
            next = shifted(&next, h / 3.0, &k3);
            Ok(shifted(&next, h / 6.0, &k4))
        })();
        match result {
            Ok(next) if next.u.is_finite() && next.s.is_finite() && next.v.is_finite() => y = next,
            Ok(_) => return Ok(Err(NaiveOutcome::Overflow { step: k })),
            Err(outcome) => return Ok(Err(outcome)),
        }
    }
    Ok(Ok(y))
}

/// Setup of the small-singular-value benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessConfig {
    pub size: usize,
    pub rank: usize,
    pub h: f64,
    pub t_end: f64,
    pub substeps: usize,
    pub seed: u64,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            size: 40,
            rank: 8,
            h: 0.01,
            t_end: 1.0,
            substeps: 10,
            seed: 2014,
        }
    }
}

/// Singular values `d_i`, `i = 1..size`, decaying geometrically from `2^-1`
/// so that `d_rank = 2^-floor_exponent`; entries past `rank` are multiplied
/// by `tail_scale`. `floor_exponent = rank` gives `d_i = 2^-i`.
pub fn benchmark_singular_values(size: usize, rank: usize, floor_exponent: f64, tail_scale: f64) -> Vec<f64> {
    let ratio = if rank > 1 {
        (floor_exponent - 1.0) / (rank - 1) as f64
    } else {
        1.0
    };
    (0..size)
        .map(|i| {
            let d = 2f64.powf(-1.0 - ratio * i as f64);
            if i >= rank {
                d * tail_scale
            } else {
                d
            }
        })
        .collect()
}

/// The rotating family `A(t) = exp(t W1) D exp(t W2)^T` of the benchmark, with
/// the rotations fixed by `seed`.
pub fn robustness_flow(cfg: &RobustnessConfig, singular_values: &[f64]) -> Result<RotatingFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let left = Rotation::random(cfg.size, &mut rng);
    let right = Rotation::random(cfg.size, &mut rng);
    RotatingFamily::new(left, right, Matrix::diag(singular_values))
}

/// One row of the benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessRow {
    pub floor_exponent: f64,
    pub tail_scale: f64,
    /// Smallest retained singular value of `A`.
    pub sigma_r: f64,
    pub best_error: f64,
    pub ksl_error: f64,
    pub strang_error: f64,
    pub naive: NaiveOutcome,
}

/// Runs one benchmark configuration to `t_end`.
pub fn robustness_row(cfg: &RobustnessConfig, floor_exponent: f64, tail_scale: f64) -> Result<RobustnessRow> {
    let d = benchmark_singular_values(cfg.size, cfg.rank, floor_exponent, tail_scale);
    let flow = robustness_flow(cfg, &d)?;
    let y0 = LowRankFactors::from_matrix(flow.d(), cfg.rank)?;
    let steps = crate::symplectic::step_count(cfg.t_end, cfg.h)?;
    let t_end = steps as f64 * cfg.h;
    let a_end = flow.exact(t_end).expect("rotating family is explicit");
    let best_error = d[cfg.rank..].iter().map(|x| x * x).sum::<f64>().sqrt();
    let err = |y: &LowRankFactors| (&to_full(y) - &a_end).frobenius_norm();
    let ksl = propagate_lowrank(&flow, Splitting::Lie, &y0, 0.0, cfg.h, steps, cfg.substeps)?;
    let strang = propagate_lowrank(&flow, Splitting::Strang, &y0, 0.0, cfg.h, steps, cfg.substeps)?;
    let naive = match integrate_naive(&flow, &y0, 0.0, cfg.h, steps)? {
        Ok(y) => {
            let e = err(&y);
            if e.is_finite() {
                NaiveOutcome::Finished { error: e }
            } else {
                NaiveOutcome::Overflow { step: steps }
            }
        }
        Err(outcome) => outcome,
    };
    Ok(RobustnessRow {
        floor_exponent,
        tail_scale,
        sigma_r: d[cfg.rank - 1],
        best_error,
        ksl_error: err(&ksl),
        strang_error: err(&strang),
        naive,
    })
}

/// Benchmark table over every `(floor_exponent, tail_scale)` pair, rows in
/// input order. Rows run in parallel.
pub fn robustness_benchmark(
    cfg: &RobustnessConfig,
    floor_exponents: &[f64],
    tail_scales: &[f64],
) -> Result<Vec<RobustnessRow>> {
    if cfg.rank == 0 || cfg.rank > cfg.size {
        return Err(Error::contract("benchmark rank must lie in 1..=size"));
    }
    let jobs: Vec<(f64, f64)> = floor_exponents
        .iter()
        .flat_map(|&e| tail_scales.iter().map(move |&s| (e, s)))
        .collect();
    jobs.par_iter()
        .map(|&(e, s)| robustness_row(cfg, e, s))
        .collect()
}
