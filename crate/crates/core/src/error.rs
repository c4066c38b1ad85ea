use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates the precondition of the operation it was passed to.
    #[error("invalid {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    /// Step halving in the Lindblad integrator ran out of budget.
    #[error("integrator did not converge after {steps} steps (last change {last_change:e})")]
    NonConvergence { steps: usize, last_change: f64 },

    /// Every grid point has zero likelihood.
    #[error("data are inconsistent with every grid point (all log-weights are -inf)")]
    InconsistentData,

    #[error("Fisher information vanishes at this operating point; uncertainty is unbounded")]
    UnboundedUncertainty,
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }
}
