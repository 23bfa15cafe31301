//! Experiment registry, configuration, CSV output and the command line.

pub mod cli;
pub mod config;
pub mod convergence;
pub mod csv_io;
pub mod experiments;

pub use cli::{exit_code, run_cli};
pub use config::{Experiment, ExperimentConfig, MethodId, Overrides};
pub use convergence::{convergence_table, ConvergenceProblem, ConvergenceRow, ConvergenceTable};
pub use csv_io::{emit_csv, read_csv};
pub use experiments::{exact_lowrank_family, integrate_until_failure, run_experiment, solar_energy_errors, Outcome};
