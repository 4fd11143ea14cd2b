use thiserror::Error;

/// Errors raised by the solvers and evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("no sign change of {what} on bracket [{lo:e}, {hi:e}]")]
    Bracket { what: &'static str, lo: f64, hi: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("quadrature failed after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    Quadrature {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    #[error("operation `{op}` not defined for strategy kind {kind}")]
    WrongKind { op: &'static str, kind: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the inputs rather than by numerics.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::Bracket { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
