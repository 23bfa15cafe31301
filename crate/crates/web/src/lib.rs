//! Browser bindings for three interactive views: Kepler orbits under the
//! one-step methods, energy exchange in the stiff FPU chain, and the
//! low-rank integrators against a shrinking singular-value floor.
//!
//! Every export returns a flat `Float64Array` read row by row with the
//! stride given in its docs.

use wasm_bindgen::prelude::*;

use geomint::harness::{integrate_until_failure, MethodId};
use geomint::lowrank::{robustness_benchmark, RobustnessConfig};
use geomint::models::{angular_momentum, make_fpu_chain, make_kepler, oscillatory_energies, Hamiltonian};
use geomint::oscillatory::{FilterPair, Trigonometric};
use geomint::symplectic::{integrate, StepperConfig};

/// Kepler orbit as rows `t, q1, q2, rel_H_err, L`.
pub fn kepler_rows(method: &str, eccentricity: f64, h: f64, t_end: f64, samples: usize) -> Result<Vec<f64>, String> {
    let id: MethodId = method.parse().map_err(|e: geomint::Error| e.to_string())?;
    let method = id.hamiltonian().ok_or_else(|| format!("{id} does not apply to the Kepler problem"))?;
    let (sys, y0) = make_kepler(eccentricity).map_err(|e| e.to_string())?;
    let cfg = StepperConfig::new(h).map_err(|e| e.to_string())?;
    let every = ((t_end / h / samples.max(1) as f64).round() as usize).max(1);
    let h0 = sys.energy_at(&y0);
    // A diverging run keeps the states before the failing step.
    let (run, _) = integrate_until_failure(&sys, &method, &cfg, &y0, t_end).map_err(|e| e.to_string())?;
    let last = run.len() - 1;
    Ok(run
        .iter()
        .enumerate()
        .filter(|(k, _)| k % every == 0 || *k == last)
        .flat_map(|(_, (t, y))| [*t, y.q[0], y.q[1], (sys.energy_at(y) - h0) / h0.abs(), angular_momentum(y)])
        .collect())
}

/// FPU chain energies as rows `t, E_1, .., E_m, H_omega, H`.
pub fn fpu_rows(m: usize, omega: f64, filter: &str, h: f64, t_end: f64, samples: usize) -> Result<Vec<f64>, String> {
    let filters = match filter {
        "impulse" => FilterPair::IMPULSE,
        "mollified" => FilterPair::MOLLIFIED,
        other => return Err(format!("unknown filter {other:?}")),
    };
    let (sys, y0) = make_fpu_chain(m, omega).map_err(|e| e.to_string())?;
    let cfg = StepperConfig::new(h).map_err(|e| e.to_string())?;
    let every = ((t_end / h / samples.max(1) as f64).round() as usize).max(1);
    let run = integrate(&sys, &Trigonometric(filters), &cfg, &y0, t_end, every).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(run.len() * (m + 3));
    for (t, y) in &run {
        let e = oscillatory_energies(&sys, y).map_err(|e| e.to_string())?;
        out.push(*t);
        out.extend_from_slice(&e.per_block[1..]);
        out.push(e.h_omega);
        out.push(e.total);
    }
    Ok(out)
}

/// Errors at `t = 1` as rows `floor_exponent, best, ksl, strang, naive`,
/// with `naive = NaN` where the naive factor equations broke down.
pub fn lowrank_rows(size: usize, rank: usize, h: f64, tail_scale: f64, floors: &[f64]) -> Result<Vec<f64>, String> {
    let cfg = RobustnessConfig {
        size,
        rank,
        h,
        ..RobustnessConfig::default()
    };
    let rows = robustness_benchmark(&cfg, floors, &[tail_scale]).map_err(|e| e.to_string())?;
    Ok(rows
        .iter()
        .flat_map(|r| {
            [
                r.floor_exponent,
                r.best_error,
                r.ksl_error,
                r.strang_error,
                r.naive.error().unwrap_or(f64::NAN),
            ]
        })
        .collect())
}

/// Stride 5: `t, q1, q2, rel_H_err, L`.
#[wasm_bindgen]
pub fn kepler_orbit(method: &str, eccentricity: f64, h: f64, t_end: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    kepler_rows(method, eccentricity, h, t_end, samples).map_err(|e| JsError::new(&e))
}

/// Stride `m + 3`: `t, E_1..E_m, H_omega, H`.
#[wasm_bindgen]
pub fn fpu_energy_exchange(
    m: usize,
    omega: f64,
    filter: &str,
    h: f64,
    t_end: f64,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    fpu_rows(m, omega, filter, h, t_end, samples).map_err(|e| JsError::new(&e))
}

/// Stride 5: `floor_exponent, best, ksl, strang, naive`.
#[wasm_bindgen]
pub fn lowrank_robustness(size: usize, rank: usize, h: f64, tail_scale: f64, floors: Vec<f64>) -> Result<Vec<f64>, JsError> {
    lowrank_rows(size, rank, h, tail_scale, &floors).map_err(|e| JsError::new(&e))
}
