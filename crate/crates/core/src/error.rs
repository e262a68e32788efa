use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Network with a zero-impedance loop or a singular admittance matrix.
    #[error("degenerate network: {0}")]
    DegenerateNetwork(&'static str),

    #[error("invalid input `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },

    /// The load-angle search did not converge inside its bracket.
    #[error("angle search did not converge in bracket [{lo:.6}, {hi:.6}] rad")]
    NoConvergence { lo: f64, hi: f64 },

    #[error("pre-fault power {requested:.4} pu exceeds the static transfer limit {limit:.4} pu")]
    TransferLimit { requested: f64, limit: f64 },

    #[error("insufficient history: need {needed} samples, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    /// Nodal solve left a KCL residual above tolerance.
    #[error("implicit step at t = {t:.6} s failed: KCL residual {residual:.3e} pu")]
    StepFailed { t: f64, residual: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Invalid {
        field,
        reason: reason.into(),
    }
}
