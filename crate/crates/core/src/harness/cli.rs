use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use super::config::{Experiment, Overrides};
use super::csv_io::emit_csv;
use super::experiments::run_experiment;
use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "geomint", version, about = "Structure-preserving integrators: experiments and CSV output")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its CSV.
    Run(RunArgs),
    /// Run several configuration files, possibly concurrently.
    Batch {
        /// Configuration files in `key = value` form.
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// List experiments, their methods and parameters.
    List,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Experiment name (see `geomint list`).
    experiment: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long = "record-every")]
    record_every: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model parameter, e.g. `--param omega=60`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Contract(_) | Error::Parse(_) | Error::Inadmissible(_) | Error::ResonantStep { .. } => 2,
        Error::SolverDivergence { .. }
        | Error::NonFinite
        | Error::Singular
        | Error::SingularCore
        | Error::RankDeficiency { .. } => 3,
        Error::Io(_) | Error::Csv(_) => 4,
        Error::Step { .. } => unreachable!("root strips step wrappers"),
    }
}

fn report(err: &Error) {
    eprintln!("error: {err}");
    if let Error::Inadmissible(r) = err.root() {
        eprintln!(
            "  distances of h*omega to nonzero multiples of pi: {:?} (need >= sqrt(h) = {:.4})",
            r.distances,
            r.h.sqrt()
        );
    }
}

fn overrides_for(args: RunArgs) -> Result<Overrides, Error> {
    let mut top = Overrides {
        experiment: args.experiment,
        method: args.method,
        h: args.h,
        t_end: args.t_end,
        record_every: args.record_every,
        out: args.out,
        seed: args.seed,
        ..Default::default()
    };
    for kv in &args.params {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--param expects KEY=VALUE, got {kv:?}")))?;
        top.params.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    let base = match args.config {
        Some(path) => Overrides::parse(&std::fs::read_to_string(path)?)?,
        None => Overrides::default(),
    };
    Ok(base.merged(top))
}

/// Resolves, runs and writes one experiment; returns its exit status.
fn execute(o: Overrides) -> i32 {
    let cfg = match o.resolve() {
        Ok(c) => c,
        Err(e) => {
            report(&e);
            return 2;
        }
    };
    let start = Instant::now();
    let outcome = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => {
            report(&e);
            return exit_code(&e);
        }
    };
    let wall = start.elapsed().as_secs_f64();
    if let Err(e) = emit_csv(&outcome.series, &cfg.out) {
        report(&e);
        return exit_code(&e);
    }
    let err = outcome
        .max_rel_h_err
        .map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"));
    println!(
        "{} {}: max|rel_H_err|={err} wall={wall:.3}s steps={} out={}",
        cfg.experiment,
        if cfg.all_methods { "all" } else { cfg.method.name() },
        outcome.steps,
        cfg.out.display()
    );
    for note in &outcome.notes {
        println!("  {note}");
    }
    match outcome.failure {
        Some(e) => {
            report(&e);
            exit_code(&e)
        }
        None => 0,
    }
}

fn list() {
    for e in Experiment::ALL {
        println!("{:<20} {}", e.name(), e.description());
        let methods: Vec<&str> = e.methods().iter().map(|m| m.name()).collect();
        println!("{:<20} methods: {} (default {})", "", methods.join(", "), e.default_method());
        if !e.parameters().is_empty() {
            let params: Vec<String> = e.parameters().iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("{:<20} params: {}", "", params.join(" "));
        }
    }
}

fn batch(configs: Vec<PathBuf>, jobs: usize) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    pool.install(|| {
        configs
            .into_par_iter()
            .map(|path| {
                let text = match std::fs::read_to_string(&path) {
                    Ok(t) => t,
                    Err(e) => {
                        eprintln!("error: {}: {e}", path.display());
                        return 4;
                    }
                };
                match Overrides::parse(&text) {
                    Ok(o) => execute(o),
                    Err(e) => {
                        report(&e);
                        exit_code(&e)
                    }
                }
            })
            .max()
            .unwrap_or(0)
    })
}

/// Runs the command line `args` (program name first) and returns the exit
/// status: 0 success, 1 usage, 2 contract violation, 3 divergence, 4 I/O.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match cli.command {
        Command::List => {
            list();
            0
        }
        Command::Batch { configs, jobs } => batch(configs, jobs),
        Command::Run(args) => {
            if args.experiment.is_none() && args.config.is_none() {
                eprintln!("error: no experiment given\n\nUsage: geomint run [EXPERIMENT] [OPTIONS]");
                return 1;
            }
            let unknown_name = args
                .experiment
                .as_deref()
                .filter(|e| e.parse::<Experiment>().is_err())
                .map(|e| format!("unknown experiment {e:?}"))
                .or_else(|| {
                    args.method
                        .as_deref()
                        .filter(|m| m.parse::<super::config::MethodId>().is_err())
                        .map(|m| format!("unknown method {m:?}"))
                });
            if let Some(msg) = unknown_name {
                eprintln!("error: {msg}\n\nUsage: geomint run [EXPERIMENT] [OPTIONS]\nSee `geomint list` for names.");
                return 1;
            }
            match overrides_for(args) {
                Ok(o) => execute(o),
                Err(e) => {
                    report(&e);
                    exit_code(&e)
                }
            }
        }
    }
}
