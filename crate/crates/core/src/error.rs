use std::io;

use thiserror::Error;

use crate::oscillatory::ResonanceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller broke a precondition (shapes, ranges, non-finite data).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("implicit solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("state became non-finite")]
    NonFinite,

    #[error("resonant step: sinc(h*omega) vanishes for block {block} (h = {h})")]
    ResonantStep { block: usize, h: f64 },

    #[error("step size h = {} violates the numerical non-resonance condition", .0.h)]
    Inadmissible(Box<ResonanceReport>),

    #[error("rank deficiency in the {substep} substep: QR met a zero column")]
    RankDeficiency { substep: &'static str },

    #[error("core factor is singular (smallest singular value is zero)")]
    SingularCore,

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Strips `Step` wrappers and returns the innermost cause.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }
}
