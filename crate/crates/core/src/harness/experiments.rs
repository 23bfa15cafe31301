use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Experiment, ExperimentConfig, MethodId};
use super::convergence::{convergence_table, ConvergenceProblem};
use crate::densela::Matrix;
use crate::error::{Error, Result};
use crate::lowrank::{
    integrate_lowrank, robustness_benchmark, LowRankFactors, LowRankRun, NaiveOutcome, Rotation, RotatingFamily,
    RobustnessConfig, Splitting,
};
use crate::models::{
    angular_momentum, make_fpu_chain, make_kepler, make_klein_gordon, make_outer_solar_system, oscillatory_energies,
    Hamiltonian, OscillatorySystem, PhaseState,
};
use crate::oscillatory::{
    energy_series, resonance_report, run_klein_gordon_decay, FilterPair, Trigonometric,
};
use crate::series::Series;
use crate::symplectic::{first_integral_series, step_count, Integral, OneStep, StepperConfig};

/// Result of one experiment.
#[derive(Debug)]
pub struct Outcome {
    pub series: Series,
    pub steps: usize,
    pub max_rel_h_err: Option<f64>,
    pub notes: Vec<String>,
    /// A failure after which the partial series is still worth writing.
    pub failure: Option<Error>,
}

impl Outcome {
    fn new(series: Series, steps: usize, max_rel_h_err: Option<f64>) -> Self {
        Outcome {
            series,
            steps,
            max_rel_h_err,
            notes: Vec::new(),
            failure: None,
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::Solar => solar(cfg),
        Experiment::KeplerLongtime => kepler_longtime(cfg),
        Experiment::FpuExchange => fpu_exchange(cfg),
        Experiment::FpuResonanceScan => fpu_resonance_scan(cfg),
        Experiment::KleinGordonDecay => klein_gordon_decay(cfg),
        Experiment::LowrankExactness => lowrank_exactness(cfg),
        Experiment::LowrankRobustness => lowrank_robustness(cfg),
        Experiment::ConvergenceOrders => convergence_orders(cfg),
    }
}

/// States of a run and the error that stopped it early, if any.
pub type PartialRun = (Vec<(f64, PhaseState)>, Option<Error>);

/// Relative energy errors `(t, rel_H_err)` and the error that stopped the run early, if any.
pub type EnergyErrors = (Vec<(f64, f64)>, Option<Error>);

/// Steps until `t_end` or the first failure, keeping every state.
pub fn integrate_until_failure<S: ?Sized, M: OneStep<S> + ?Sized>(
    sys: &S,
    method: &M,
    cfg: &StepperConfig,
    y0: &PhaseState,
    t_end: f64,
) -> Result<PartialRun> {
    let n = step_count(t_end, cfg.h)?;
    let mut run = Vec::with_capacity(n + 1);
    run.push((0.0, y0.clone()));
    let mut y = y0.clone();
    for k in 1..=n {
        let next = match method.step(sys, cfg, &y) {
            Ok(next) if next.is_finite() => next,
            Ok(_) => return Ok((run, Some(Error::Step { step: k, source: Box::new(Error::NonFinite) }))),
            Err(e) => return Ok((run, Some(Error::Step { step: k, source: Box::new(e) }))),
        };
        y = next;
        run.push((k as f64 * cfg.h, y.clone()));
    }
    Ok((run, None))
}

fn is_recorded(k: usize, n: usize, every: usize) -> bool {
    k.is_multiple_of(every) || k + 1 == n
}

fn relative(x: f64, x0: f64) -> f64 {
    if x0 != 0.0 {
        (x - x0) / x0.abs()
    } else {
        x - x0
    }
}

fn hamiltonian_method(cfg: &ExperimentConfig) -> Result<crate::symplectic::Method> {
    cfg.method
        .hamiltonian()
        .ok_or_else(|| Error::contract(format!("{} is not a canonical integrator", cfg.method)))
}

/// Relative energy error of the outer solar system at every step.
pub fn solar_energy_errors(method: MethodId, h: f64, t_end: f64) -> Result<EnergyErrors> {
    let m = method
        .hamiltonian()
        .ok_or_else(|| Error::contract(format!("{method} is not a canonical integrator")))?;
    let (sys, y0, _) = make_outer_solar_system()?;
    let (run, failure) = integrate_until_failure(&sys, &m, &StepperConfig::new(h)?, &y0, t_end)?;
    let h0 = sys.energy_at(&y0);
    Ok((
        run.iter().map(|(t, y)| (*t, relative(sys.energy_at(y), h0))).collect(),
        failure,
    ))
}

fn solar(cfg: &ExperimentConfig) -> Result<Outcome> {
    let method = hamiltonian_method(cfg)?;
    let (sys, y0, data) = make_outer_solar_system()?;
    let (run, failure) = integrate_until_failure(&sys, &method, &StepperConfig::new(cfg.h)?, &y0, cfg.t_end)?;
    let h0 = sys.energy_at(&y0);
    let mut cols: Vec<String> = ["t", "H", "rel_H_err"].map(String::from).to_vec();
    cols.extend(data.names.iter().skip(1).map(|n| format!("r_{}", &n[..1])));
    let mut series = Series::new(cols);
    let mut max_rel: f64 = 0.0;
    for (k, (t, y)) in run.iter().enumerate() {
        let e = sys.energy_at(y);
        let rel = relative(e, h0);
        max_rel = max_rel.max(rel.abs());
        if is_recorded(k, run.len(), cfg.record_every) {
            let mut row = vec![e, rel];
            for b in 1..data.bodies() {
                let d: f64 = (0..3).map(|c| (y.q[3 * b + c] - y.q[c]).powi(2)).sum();
                row.push(d.sqrt());
            }
            series.push_record(*t, &row)?;
        }
    }
    let mut out = Outcome::new(series, run.len() - 1, Some(max_rel));
    if let Some(err) = failure {
        if matches!(err.root(), Error::SolverDivergence { .. }) {
            out.notes.push("implicit solver diverged: the planets fell into the sun (expected for implicit Euler at large h)".into());
        }
        out.failure = Some(err);
    }
    Ok(out)
}

fn kepler_longtime(cfg: &ExperimentConfig) -> Result<Outcome> {
    let method = hamiltonian_method(cfg)?;
    let (sys, y0) = make_kepler(cfg.number("e")?)?;
    let (run, failure) = integrate_until_failure(&sys, &method, &StepperConfig::new(cfg.h)?, &y0, cfg.t_end)?;
    if let Some(err) = failure {
        return Err(err);
    }
    let n = run.len();
    let recorded: Vec<(f64, PhaseState)> = run
        .iter()
        .enumerate()
        .filter(|(k, _)| is_recorded(*k, n, cfg.record_every))
        .map(|(_, r)| r.clone())
        .collect();
    let series = first_integral_series(
        &recorded,
        &[Integral::energy(&sys), Integral::new("L", angular_momentum)],
    )?;
    let h0 = sys.energy_at(&y0);
    let max_rel = run
        .iter()
        .map(|(_, y)| relative(sys.energy_at(y), h0).abs())
        .fold(0.0, f64::max);
    let l0 = angular_momentum(&y0);
    let max_l = run
        .iter()
        .map(|(_, y)| (angular_momentum(y) - l0).abs())
        .fold(0.0, f64::max);
    let mut out = Outcome::new(series, n - 1, Some(max_rel));
    out.notes.push(format!("max|L-L0|={max_l:.3e}"));
    Ok(out)
}

fn oscillatory_method(id: MethodId) -> Box<dyn OneStep<OscillatorySystem> + Sync> {
    match id {
        MethodId::TrigImpulse => Box::new(Trigonometric(FilterPair::IMPULSE)),
        MethodId::TrigMollified => Box::new(Trigonometric(FilterPair::MOLLIFIED)),
        other => Box::new(other.hamiltonian().expect("checked by the registry")),
    }
}

fn is_trigonometric(id: MethodId) -> bool {
    matches!(id, MethodId::TrigImpulse | MethodId::TrigMollified)
}

fn require_admissible(sys: &OscillatorySystem, cfg: &ExperimentConfig) -> Result<()> {
    if is_trigonometric(cfg.method) {
        let report = resonance_report(sys, cfg.h, 1)?;
        if !report.admissible {
            return Err(Error::Inadmissible(Box::new(report)));
        }
    }
    Ok(())
}

fn fpu_exchange(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (sys, y0) = make_fpu_chain(cfg.count("m")?, cfg.number("omega")?)?;
    require_admissible(&sys, cfg)?;
    let method = oscillatory_method(cfg.method);
    let (run, failure) = integrate_until_failure(&sys, method.as_ref(), &StepperConfig::new(cfg.h)?, &y0, cfg.t_end)?;
    if let Some(err) = failure {
        return Err(err);
    }
    let n = run.len();
    let recorded: Vec<(f64, PhaseState)> = run
        .iter()
        .enumerate()
        .filter(|(k, _)| is_recorded(*k, n, cfg.record_every))
        .map(|(_, r)| r.clone())
        .collect();
    let energies = energy_series(&sys, &recorded)?;
    let mut cols = energies.columns().to_vec();
    cols.push("rel_H_err".into());
    let h_col = energies.column_index("H").expect("energy series has H");
    let h0 = energies.rows()[0][h_col];
    let mut series = Series::new(cols);
    for row in energies.rows() {
        let mut r = row.clone();
        r.push(relative(row[h_col], h0));
        series.push(r)?;
    }

    let e0 = oscillatory_energies(&sys, &y0)?;
    let (mut max_rel, mut max_omega, mut max_ej): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (_, y) in &run {
        let e = oscillatory_energies(&sys, y)?;
        max_rel = max_rel.max(relative(e.total, e0.total).abs());
        max_omega = max_omega.max((e.h_omega - e0.h_omega).abs());
        for (a, b) in e.per_block.iter().zip(&e0.per_block).skip(1) {
            max_ej = max_ej.max((a - b).abs());
        }
    }
    let mut out = Outcome::new(series, n - 1, Some(max_rel));
    out.notes.push(format!(
        "max|dH_omega|/H_omega(0)={:.3e} max|dE_j|/H_omega(0)={:.3e}",
        max_omega / e0.h_omega,
        max_ej / e0.h_omega
    ));
    Ok(out)
}

fn fpu_resonance_scan(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (sys, y0) = make_fpu_chain(cfg.count("m")?, cfg.number("omega")?)?;
    let (h_min, h_max) = (cfg.number("h_min")?, cfg.number("h_max")?);
    let count = cfg.count("count")?;
    let n = cfg.count("n")?;
    if !(h_min > 0.0 && h_max > h_min) || count < 2 {
        return Err(Error::contract("scan needs 0 < h_min < h_max and count >= 2"));
    }
    let method = oscillatory_method(cfg.method);
    let e0 = oscillatory_energies(&sys, &y0)?;
    let mut series = Series::new([
        "h",
        "min_distance",
        "admissible",
        "sum_distance",
        "sum_admissible",
        "near_resonances",
        "max_rel_H_err",
        "max_rel_H_omega_err",
    ]);
    let mut steps = 0;
    for i in 0..count {
        let h = h_min + (h_max - h_min) * i as f64 / (count - 1) as f64;
        let report = resonance_report(&sys, h, n)?;
        let (mut max_rel, mut max_omega) = (f64::NAN, f64::NAN);
        let stepper = StepperConfig::new(h)?;
        let (run, failure) = integrate_until_failure(&sys, method.as_ref(), &stepper, &y0, cfg.t_end)?;
        if failure.is_none() {
            max_rel = 0.0;
            max_omega = 0.0;
            for (_, y) in &run {
                let e = oscillatory_energies(&sys, y)?;
                max_rel = max_rel.max(relative(e.total, e0.total).abs());
                max_omega = max_omega.max(relative(e.h_omega, e0.h_omega).abs());
            }
        }
        steps += run.len() - 1;
        let min_distance = report.distances.iter().copied().fold(f64::INFINITY, f64::min);
        series.push(vec![
            h,
            min_distance,
            f64::from(u8::from(report.admissible)),
            report.sum_distance,
            f64::from(u8::from(report.sum_admissible)),
            report.near_resonances.len() as f64,
            max_rel,
            max_omega,
        ])?;
    }
    let worst = series
        .column("max_rel_H_err")
        .expect("column exists")
        .into_iter()
        .filter(|x| x.is_finite())
        .fold(0.0, f64::max);
    Ok(Outcome::new(series, steps, Some(worst)))
}

fn klein_gordon_decay(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (modes, rho, eps) = (cfg.count("modes")?, cfg.number("rho")?, cfg.number("epsilon")?);
    let (sys, _) = make_klein_gordon(modes, rho, eps)?;
    require_admissible(&sys, cfg)?;
    let method = oscillatory_method(cfg.method);
    let outcome = run_klein_gordon_decay(modes, rho, eps, method.as_ref(), cfg.h, cfg.t_end, cfg.record_every)?;
    let steps = step_count(cfg.t_end, cfg.h)?;
    let mut out = Outcome::new(outcome.series, steps, Some(outcome.max_rel_energy_error));
    out.notes.push(format!("decay slope of ln E_j (2<=j<=10) at t_end = {:.3}", outcome.slope));
    Ok(out)
}

/// A rank-`rank` rotating family of `size`×`size` matrices with nonzero
/// singular values `1, 1/2, ..., 2^(1-rank)`, rotations fixed by `seed`.
pub fn exact_lowrank_family(size: usize, rank: usize, seed: u64) -> Result<RotatingFamily> {
    if rank == 0 || rank > size {
        return Err(Error::contract("rank must lie in 1..=size"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let left = Rotation::random(size, &mut rng);
    let right = Rotation::random(size, &mut rng);
    let d: Vec<f64> = (0..size).map(|i| if i < rank { 0.5f64.powi(i as i32) } else { 0.0 }).collect();
    RotatingFamily::new(left, right, Matrix::diag(&d))
}

fn splitting(id: MethodId) -> Splitting {
    match id {
        MethodId::KslStrang => Splitting::Strang,
        _ => Splitting::Lie,
    }
}

fn lowrank_exactness(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (size, rank) = (cfg.count("size")?, cfg.count("rank")?);
    let flow = exact_lowrank_family(size, rank, cfg.seed)?;
    let y0 = LowRankFactors::from_matrix(flow.d(), rank)?;
    let mut opts = LowRankRun::new(splitting(cfg.method), cfg.h);
    opts.substeps = cfg.count("substeps")?;
    opts.record_every = cfg.record_every;
    let run = integrate_lowrank(&flow, &y0, 0.0, cfg.t_end, &opts)?;
    let mut series = Series::new(["t", "error", "best_error", "sigma_min", "curvature"]);
    let mut max_err: f64 = 0.0;
    for rec in &run {
        let err = rec.error.expect("explicit family");
        max_err = max_err.max(err);
        series.push_record(
            rec.t,
            &[
                err,
                rec.best_error.expect("explicit family"),
                *rec.singular_values.last().expect("rank >= 1"),
                rec.curvature,
            ],
        )?;
    }
    let mut out = Outcome::new(series, step_count(cfg.t_end, cfg.h)?, None);
    out.notes.push(format!("max error={max_err:.3e}"));
    Ok(out)
}

fn naive_status(n: &NaiveOutcome) -> f64 {
    match n {
        NaiveOutcome::Finished { .. } => 0.0,
        NaiveOutcome::Overflow { .. } => 1.0,
        NaiveOutcome::SingularCore { .. } => 2.0,
    }
}

fn lowrank_robustness(cfg: &ExperimentConfig) -> Result<Outcome> {
    let rcfg = RobustnessConfig {
        size: cfg.count("size")?,
        rank: cfg.count("rank")?,
        h: cfg.h,
        t_end: cfg.t_end,
        substeps: cfg.count("substeps")?,
        seed: cfg.seed,
    };
    let rows = robustness_benchmark(&rcfg, &cfg.list("floors")?, &cfg.list("tail_scales")?)?;
    let mut series = Series::new([
        "floor_exponent",
        "tail_scale",
        "sigma_r",
        "best_error",
        "ksl_error",
        "strang_error",
        "naive_error",
        "naive_status",
    ]);
    for r in &rows {
        series.push(vec![
            r.floor_exponent,
            r.tail_scale,
            r.sigma_r,
            r.best_error,
            r.ksl_error,
            r.strang_error,
            r.naive.error().unwrap_or(f64::NAN),
            naive_status(&r.naive),
        ])?;
    }
    let steps = rows.len() * step_count(cfg.t_end, cfg.h)?;
    let mut out = Outcome::new(series, steps, None);
    out.notes.push("naive_status: 0 finished, 1 overflow, 2 singular core".into());
    Ok(out)
}

fn convergence_orders(cfg: &ExperimentConfig) -> Result<Outcome> {
    let methods: Vec<MethodId> = if cfg.all_methods {
        Experiment::ConvergenceOrders.methods().to_vec()
    } else {
        vec![cfg.method]
    };
    let kepler = ConvergenceProblem::Kepler {
        eccentricity: cfg.number("e")?,
        t_end: cfg.t_end,
    };
    let lowrank = ConvergenceProblem::LowrankRobustness {
        config: RobustnessConfig {
            t_end: cfg.t_end,
            seed: cfg.seed,
            ..RobustnessConfig::default()
        },
    };
    let h_list = cfg.list("h_list")?;
    let ksl_h: Vec<f64> = vec![0.1, 0.05, 0.025];
    let mut series = Series::new(["method_id", "h", "error", "order"]);
    let mut notes = Vec::new();
    let mut steps = 0;
    for m in methods {
        let (problem, hs) = if m.hamiltonian().is_some() {
            (&kepler, &h_list)
        } else {
            (&lowrank, &ksl_h)
        };
        let table = convergence_table(problem, m, hs)?;
        let id = MethodId::ALL.iter().position(|&x| x == m).expect("registered") as f64;
        for row in &table.rows {
            steps += step_count(cfg.t_end, row.h)?;
            series.push(vec![id, row.h, row.error, row.order.unwrap_or(f64::NAN)])?;
        }
        notes.push(format!("{}={:.3}", m.name(), table.fitted_order));
    }
    let mut out = Outcome::new(series, steps, None);
    out.notes.push(format!("fitted orders: {}", notes.join(" ")));
    out.notes.push(format!(
        "method_id indexes [{}]",
        MethodId::ALL.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
    ));
    Ok(out)
}
