use super::config::MethodId;
use crate::densela::Matrix;
use crate::error::{Error, Result};
use crate::lowrank::{
    benchmark_singular_values, propagate_lowrank, robustness_flow, to_full, LowRankFactors, RobustnessConfig,
    Splitting,
};
use crate::models::make_kepler;
use crate::symplectic::{propagate, step_count, ClassicalRk4, StepperConfig};

/// Test problem for an order study.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvergenceProblem {
    /// Max-norm error of the Kepler state at `t_end` against fine RK4.
    Kepler { eccentricity: f64, t_end: f64 },
    /// Frobenius error of the low-rank approximation at `config.t_end` on the
    /// base benchmark spectrum, against fine Strang splitting.
    LowrankRobustness { config: RobustnessConfig },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub error: f64,
    /// `log2` ratio to the previous row, scaled by the step ratio.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub method: MethodId,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln error` against `ln h`.
    pub fitted_order: f64,
}

fn check_h_list(h_list: &[f64], t_end: f64) -> Result<()> {
    if h_list.len() < 3 {
        return Err(Error::contract("an order study needs at least three step sizes"));
    }
    if h_list.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(Error::contract("step sizes must be positive"));
    }
    let ratio = h_list[0] / h_list[1];
    if !(ratio > 1.0) {
        return Err(Error::contract("step sizes must decrease"));
    }
    for w in h_list.windows(2) {
        if ((w[0] / w[1]) / ratio - 1.0).abs() > 1e-9 {
            return Err(Error::contract("step sizes must form a geometric progression"));
        }
    }
    for &h in h_list {
        let n = step_count(t_end, h)?;
        if (n as f64 * h - t_end).abs() > 1e-9 * t_end {
            return Err(Error::contract(format!("h = {h} does not divide t_end = {t_end}")));
        }
    }
    Ok(())
}

fn fitted_slope(h: &[f64], e: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn convergence_table(problem: &ConvergenceProblem, method: MethodId, h_list: &[f64]) -> Result<ConvergenceTable> {
    let errors: Vec<f64> = match problem {
        ConvergenceProblem::Kepler { eccentricity, t_end } => {
            check_h_list(h_list, *t_end)?;
            let stepper = method
                .hamiltonian()
                .ok_or_else(|| Error::contract(format!("{method} does not apply to the Kepler problem")))?;
            let (sys, y0) = make_kepler(*eccentricity)?;
            let h_ref = h_list[h_list.len() - 1] / 64.0;
            let reference = propagate(&sys, &ClassicalRk4, &StepperConfig::new(h_ref)?, &y0, step_count(*t_end, h_ref)?)?;
            h_list
                .iter()
                .map(|&h| {
                    let y = propagate(&sys, &stepper, &StepperConfig::new(h)?, &y0, step_count(*t_end, h)?)?;
                    Ok(y.distance(&reference))
                })
                .collect::<Result<_>>()?
        }
        ConvergenceProblem::LowrankRobustness { config } => {
            check_h_list(h_list, config.t_end)?;
            let splitting = match method {
                MethodId::Ksl => Splitting::Lie,
                MethodId::KslStrang => Splitting::Strang,
                other => return Err(Error::contract(format!("{other} does not apply to the low-rank problem"))),
            };
            let d = benchmark_singular_values(config.size, config.rank, config.rank as f64, 1.0);
            let flow = robustness_flow(config, &d)?;
            let y0 = LowRankFactors::from_matrix(flow.d(), config.rank)?;
            let run = |s: Splitting, h: f64, substeps: usize| -> Result<Matrix> {
                let y = propagate_lowrank(&flow, s, &y0, 0.0, h, step_count(config.t_end, h)?, substeps)?;
                Ok(to_full(&y))
            };
            let h_ref = h_list[h_list.len() - 1] / 16.0;
            let reference = run(Splitting::Strang, h_ref, 4)?;
            h_list
                .iter()
                .map(|&h| Ok((&run(splitting, h, config.substeps)? - &reference).frobenius_norm()))
                .collect::<Result<_>>()?
        }
    };
    if errors.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::contract("order study produced a zero or non-finite error"));
    }
    let rows = h_list
        .iter()
        .zip(&errors)
        .enumerate()
        .map(|(i, (&h, &error))| ConvergenceRow {
            h,
            error,
            order: (i > 0).then(|| (errors[i - 1] / error).ln() / (h_list[i - 1] / h).ln()),
        })
        .collect();
    Ok(ConvergenceTable {
        method,
        rows,
        fitted_order: fitted_slope(h_list, &errors),
    })
}
