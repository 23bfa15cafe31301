//! Trigonometric integrators for `q'' + Omega^2 q = -grad U(q)`, resonance
//! checks for the step size, and the energy-exchange and mode-decay runs.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::models::{make_fpu_chain, oscillatory_energies, Hamiltonian, OscillatorySystem, PhaseState};
use crate::series::Series;
use crate::symplectic::{integrate, OneStep, StepperConfig};

const TAYLOR_THRESHOLD: f64 = 1e-8;

fn cos_taylor(x: f64) -> f64 {
    if x.abs() < TAYLOR_THRESHOLD {
        let x2 = x * x;
        1.0 - x2 / 2.0 + x2 * x2 / 24.0
    } else {
        x.cos()
    }
}

/// `sin(x) / x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < TAYLOR_THRESHOLD {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn sinc_squared(x: f64) -> f64 {
    let s = sinc(x);
    s * s
}

fn one(_: f64) -> f64 {
    1.0
}

/// Filter functions `psi` (force weight) and `phi` (position averaging).
#[derive(Clone, Copy)]
pub struct FilterPair {
    name: &'static str,
    psi: fn(f64) -> f64,
    phi: fn(f64) -> f64,
}

impl FilterPair {
    /// `psi = sinc`, `phi = 1`.
    pub const IMPULSE: FilterPair = FilterPair {
        name: "impulse",
        psi: sinc,
        phi: one,
    };

    /// `psi = sinc * phi`, `phi = sinc`.
    pub const MOLLIFIED: FilterPair = FilterPair {
        name: "mollified",
        psi: sinc_squared,
        phi: sinc,
    };

    /// A custom pair; both functions must be even with value 1 at 0.
    pub fn new(name: &'static str, psi: fn(f64) -> f64, phi: fn(f64) -> f64) -> Result<Self> {
        for (label, f) in [("psi", psi), ("phi", phi)] {
            if (f(0.0) - 1.0).abs() > 1e-14 {
                return Err(Error::contract(format!("{label}(0) must equal 1")));
            }
            for k in 1..=64 {
                let xi = 0.37 * k as f64;
                let (a, b) = (f(xi), f(-xi));
                if (a - b).abs() > 1e-14 * a.abs().max(1.0) {
                    return Err(Error::contract(format!("{label} must be even (fails at {xi})")));
                }
            }
        }
        Ok(FilterPair { name, psi, phi })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn psi(&self, xi: f64) -> f64 {
        (self.psi)(xi)
    }

    pub fn phi(&self, xi: f64) -> f64 {
        (self.phi)(xi)
    }
}

impl fmt::Debug for FilterPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FilterPair").field("name", &self.name).finish()
    }
}

/// Per-coordinate coefficients of the one-step map for a fixed `h`.
struct TrigCoefficients {
    cos: Vec<f64>,
    /// `h sinc(h omega)`
    h_sinc: Vec<f64>,
    /// `omega sin(h omega)`
    omega_sin: Vec<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
    psi0: Vec<f64>,
    psi1: Vec<f64>,
}

impl TrigCoefficients {
    fn new(sys: &OscillatorySystem, filters: &FilterPair, h: f64) -> Result<Self> {
        let n = sys.dim();
        let mut c = TrigCoefficients {
            cos: Vec::with_capacity(n),
            h_sinc: Vec::with_capacity(n),
            omega_sin: Vec::with_capacity(n),
            phi: Vec::with_capacity(n),
            psi: Vec::with_capacity(n),
            psi0: Vec::with_capacity(n),
            psi1: Vec::with_capacity(n),
        };
        for (j, b) in sys.blocks().iter().enumerate() {
            let x = h * b.omega;
            let cs = cos_taylor(x);
            let sc = sinc(x);
            if sc.abs() <= 1e-12 {
                return Err(Error::ResonantStep { block: j, h });
            }
            let psi = filters.psi(x);
            let psi1 = psi / sc;
            for _ in 0..b.dim {
                c.cos.push(cs);
                c.h_sinc.push(h * sc);
                c.omega_sin.push(b.omega * x * sc);
                c.phi.push(filters.phi(x));
                c.psi.push(psi);
                c.psi0.push(cs * psi1);
                c.psi1.push(psi1);
            }
        }
        Ok(c)
    }

    fn force(&self, sys: &OscillatorySystem, q: &[f64]) -> Vec<f64> {
        let averaged: Vec<f64> = q.iter().zip(&self.phi).map(|(x, f)| x * f).collect();
        let mut g = sys.grad_u(&averaged);
        g.iter_mut().for_each(|x| *x = -*x);
        g
    }
}

/// One step of the trigonometric method with filters `(psi, phi)`:
///
/// ```text
/// q+ = cos(h W) q + h sinc(h W) p + h^2/2 Psi g(Phi q)
/// p+ = -W sin(h W) q + cos(h W) p + h/2 (Psi0 g(Phi q) + Psi1 g(Phi q+))
/// ```
///
/// with `g = -grad U`, `Psi1 = psi / sinc` and `Psi0 = cos * Psi1`.
pub fn step_trigonometric(
    sys: &OscillatorySystem,
    filters: &FilterPair,
    h: f64,
    y: &PhaseState,
) -> Result<PhaseState> {
    y.check_dim(sys.dim())?;
    if !h.is_finite() {
        return Err(Error::contract("step size must be finite"));
    }
    let c = TrigCoefficients::new(sys, filters, h)?;
    let g0 = c.force(sys, &y.q);
    let n = y.dim();
    let q1: Vec<f64> = (0..n)
        .map(|i| c.cos[i] * y.q[i] + c.h_sinc[i] * y.p[i] + 0.5 * h * h * c.psi[i] * g0[i])
        .collect();
    let g1 = c.force(sys, &q1);
    let p1: Vec<f64> = (0..n)
        .map(|i| {
            -c.omega_sin[i] * y.q[i] + c.cos[i] * y.p[i] + 0.5 * h * (c.psi0[i] * g0[i] + c.psi1[i] * g1[i])
        })
        .collect();
    Ok(PhaseState { p: p1, q: q1 })
}

/// The trigonometric method as a [`OneStep`] for use with `integrate`.
#[derive(Debug, Clone, Copy)]
pub struct Trigonometric(pub FilterPair);

impl OneStep<OscillatorySystem> for Trigonometric {
    fn step(&self, sys: &OscillatorySystem, cfg: &StepperConfig, y: &PhaseState) -> Result<PhaseState> {
        step_trigonometric(sys, &self.0, cfg.h, y)
    }
}

/// An integer combination `sum_j k_j h omega_j` of distinct frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub coefficients: Vec<i32>,
    pub value: f64,
}

/// Distances of `h omega_j` (and of their signed sums) from resonance.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceReport {
    pub h: f64,
    /// Number `N` of the sum condition: sums of at most `N + 1` terms.
    pub n: usize,
    /// Blocks with nonzero frequency, in block order.
    pub blocks: Vec<usize>,
    /// Distance of `h omega_j` from the nearest nonzero multiple of pi.
    pub distances: Vec<f64>,
    /// Every distance is at least `sqrt(h)`.
    pub admissible: bool,
    /// Distinct nonzero frequencies the combinations refer to.
    pub frequencies: Vec<f64>,
    /// Smallest distance of a sum of 2..=N+1 signed terms `h omega_j` from
    /// the nonzero multiples of `2 pi`.
    pub sum_distance: f64,
    pub sum_admissible: bool,
    /// Combinations with `|k|_1 <= N + 2` and `|sum k_j h omega_j| < sqrt(h)`:
    /// a sum of up to `N + 1` frequencies that nearly matches another one.
    pub near_resonances: Vec<Combination>,
}

fn distance_to_nonzero_multiple(x: f64, period: f64) -> f64 {
    let k = (x.abs() / period).round().max(1.0);
    (x.abs() - k * period).abs()
}

/// Calls `f` once for every `k != 0` with `|k|_1 <= max_order` whose first
/// nonzero entry is positive.
fn for_each_combination(len: usize, max_order: usize, f: &mut impl FnMut(&[i32])) {
    fn rec(k: &mut Vec<i32>, idx: usize, budget: usize, leading: bool, f: &mut impl FnMut(&[i32])) {
        if idx == k.len() {
            if !leading {
                f(k);
            }
            return;
        }
        let b = budget as i32;
        let lo = if leading { 0 } else { -b };
        for v in lo..=b {
            k[idx] = v;
            rec(k, idx + 1, budget - v.unsigned_abs() as usize, leading && v == 0, f);
        }
        k[idx] = 0;
    }
    let mut k = vec![0; len];
    rec(&mut k, 0, max_order, true, f);
}

/// Single-frequency and sum non-resonance checks for step size `h`.
pub fn resonance_report(sys: &OscillatorySystem, h: f64, n: usize) -> Result<ResonanceReport> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::contract(format!("step size must be positive, got {h}")));
    }
    let root_h = h.sqrt();
    let mut blocks = Vec::new();
    let mut distances = Vec::new();
    for (j, b) in sys.blocks().iter().enumerate() {
        if b.omega > 0.0 {
            blocks.push(j);
            distances.push(distance_to_nonzero_multiple(h * b.omega, PI));
        }
    }
    let admissible = distances.iter().all(|&d| d >= root_h);

    let mut frequencies: Vec<f64> = Vec::new();
    for &w in &sys.fast_frequencies() {
        if !frequencies.iter().any(|&u| (u - w).abs() <= 1e-12 * w) {
            frequencies.push(w);
        }
    }
    let scaled: Vec<f64> = frequencies.iter().map(|w| h * w).collect();
    let mut sum_distance = f64::INFINITY;
    let mut near_resonances = Vec::new();
    for_each_combination(scaled.len(), n + 2, &mut |k| {
        let order: usize = k.iter().map(|v| v.unsigned_abs() as usize).sum();
        let value: f64 = k.iter().zip(&scaled).map(|(&c, x)| c as f64 * x).sum();
        if (2..=n + 1).contains(&order) {
            sum_distance = sum_distance.min(distance_to_nonzero_multiple(value, 2.0 * PI));
        }
        if value.abs() < root_h {
            near_resonances.push(Combination {
                coefficients: k.to_vec(),
                value,
            });
        }
    });
    Ok(ResonanceReport {
        h,
        n,
        blocks,
        distances,
        admissible,
        frequencies,
        sum_admissible: sum_distance >= root_h,
        sum_distance,
        near_resonances,
    })
}

/// FPU chain under `method` (normally [`Trigonometric`]), recording
/// `E_1..E_m, H_omega, H_slow, H` every `record_every` steps. Refuses step
/// sizes that violate the single-frequency non-resonance condition.
pub fn run_energy_exchange_experiment(
    m: usize,
    omega: f64,
    method: &dyn OneStep<OscillatorySystem>,
    h: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Series> {
    let (sys, y0) = make_fpu_chain(m, omega)?;
    let report = resonance_report(&sys, h, 1)?;
    if !report.admissible {
        return Err(Error::Inadmissible(Box::new(report)));
    }
    let cfg = StepperConfig::new(h)?;
    let run = integrate(&sys, method, &cfg, &y0, t_end, record_every)?;
    energy_series(&sys, &run)
}

/// Columns `t`, `E_j` for every block `j` with nonzero frequency, then `H_omega, H_slow, H`.
pub fn energy_series(sys: &OscillatorySystem, run: &[(f64, PhaseState)]) -> Result<Series> {
    let fast: Vec<usize> = (0..sys.blocks().len())
        .filter(|&j| sys.blocks()[j].omega > 0.0)
        .collect();
    let mut cols = vec!["t".to_string()];
    cols.extend(fast.iter().map(|j| format!("E_{j}")));
    cols.extend(["H_omega", "H_slow", "H"].map(String::from));
    let mut series = Series::new(cols);
    for (t, y) in run {
        let e = oscillatory_energies(sys, y)?;
        let mut row: Vec<f64> = fast.iter().map(|&j| e.per_block[j]).collect();
        row.extend([e.h_omega, e.h_slow, e.total]);
        series.push_record(*t, &row)?;
    }
    Ok(series)
}

/// Least-squares slope of `ln E_j` against `j` over `range`, using the
/// per-block energies (block `j` holds wave numbers `±j`).
pub fn geometric_decay_slope(per_block: &[f64], range: std::ops::RangeInclusive<usize>) -> Result<f64> {
    let pts: Vec<(f64, f64)> = range
        .clone()
        .filter_map(|j| per_block.get(j).map(|&e| (j as f64, e)))
        .collect();
    if pts.len() < 2 || pts.len() != range.count() {
        return Err(Error::contract("decay fit needs at least two modes inside the truncation"));
    }
    if pts.iter().any(|&(_, e)| !(e > 0.0)) {
        return Err(Error::contract("decay fit needs positive mode energies"));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Outcome of a Klein–Gordon run.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayOutcome {
    /// Mode energies `E_j + E_{-j}` at the end of the run, by `|j|`.
    pub mode_energies: Vec<f64>,
    /// Fitted slope of `ln E_j` for `2 <= |j| <= 10`.
    pub slope: f64,
    /// `max_t |H(t) - H(0)| / |H(0)|`.
    pub max_rel_energy_error: f64,
    pub series: Series,
}

/// Integrates the truncated Klein–Gordon equation and fits the decay of the
/// final mode energies. Refuses inadmissible step sizes.
pub fn run_klein_gordon_decay(
    modes: usize,
    rho: f64,
    epsilon: f64,
    method: &dyn OneStep<OscillatorySystem>,
    h: f64,
    t_end: f64,
    record_every: usize,
) -> Result<DecayOutcome> {
    let (sys, y0) = crate::models::make_klein_gordon(modes, rho, epsilon)?;
    let report = resonance_report(&sys, h, 1)?;
    if !report.admissible {
        return Err(Error::Inadmissible(Box::new(report)));
    }
    let cfg = StepperConfig::new(h)?;
    let run = integrate(&sys, method, &cfg, &y0, t_end, record_every)?;
    let h0 = sys.energy_at(&y0);
    let max_rel_energy_error = run
        .iter()
        .map(|(_, y)| ((sys.energy_at(y) - h0) / h0.abs()).abs())
        .fold(0.0, f64::max);
    let mut cols = vec!["t".to_string(), "H".to_string(), "rel_H_err".to_string()];
    cols.extend((0..=modes).map(|j| format!("E_{j}")));
    let mut series = Series::new(cols);
    for (t, y) in &run {
        let e = oscillatory_energies(&sys, y)?;
        let hy = sys.energy_at(y);
        let mut row = vec![hy, (hy - h0) / h0.abs()];
        row.extend(&e.per_block);
        series.push_record(*t, &row)?;
    }
    let last = &run.last().expect("integrate records the final state").1;
    let mode_energies = oscillatory_energies(&sys, last)?.per_block;
    let slope = geometric_decay_slope(&mode_energies, 2..=10.min(modes))?;
    Ok(DecayOutcome {
        mode_energies,
        slope,
        max_rel_energy_error,
        series,
    })
}
