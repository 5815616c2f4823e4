use thiserror::Error;

use crate::inverse::InverseTrace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("numerical failure: {0}")]
    NumericalFailure(&'static str),

    /// The tentative X + Y + Z vanished at `w`.
    #[error("singularity of phi hit at w = {w}")]
    SingularityHit { w: f64, trace: Option<InverseTrace> },

    #[error("no convergence after {} iterations (|phi| = {})", .trace.iterations, .trace.final_phi)]
    ConvergenceFailure { trace: InverseTrace },

    #[error("channel length mismatch: {0} / {1} / {2}")]
    LengthMismatch(usize, usize, usize),
}

impl Error {
    /// Short machine-friendly name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateInput(_) => "degenerate_input",
            Error::NumericalFailure(_) => "numerical_failure",
            Error::SingularityHit { .. } => "singularity_hit",
            Error::ConvergenceFailure { .. } => "convergence_failure",
            Error::LengthMismatch(..) => "length_mismatch",
        }
    }

    pub fn trace(&self) -> Option<&InverseTrace> {
        match self {
            Error::SingularityHit { trace, .. } => trace.as_ref(),
            Error::ConvergenceFailure { trace } => Some(trace),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
