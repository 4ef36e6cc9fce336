use thiserror::Error;

/// Unified error type for the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// Configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// An operation was handed arguments outside its domain.
    #[error("invalid input: {0}")]
    BadInput(String),

    /// Two fields were combined that live on different windows.
    #[error("window mismatch: expected [{expected_lo}, {expected_hi}], got [{got_lo}, {got_hi}]")]
    WindowMismatch {
        expected_lo: i64,
        expected_hi: i64,
        got_lo: i64,
        got_hi: i64,
    },

    /// Evaluation left the floating-point range (e.g. Toda exponential at
    /// extreme strain).
    #[error("non-physical input: {0}")]
    NonPhysical(String),

    /// The inverse symplectic operator was applied to data that does not
    /// decay toward the right window edge, so its tail sums are untrusted.
    #[error(
        "inverse symplectic sum divergent: right-edge amplitude {edge:.3e} exceeds {limit:.3e}"
    )]
    Divergence { edge: f64, limit: f64 },

    /// The integrator produced a non-finite or blown-up state.
    #[error("solution blow-up at t = {t}: amplitude {amplitude:.3e}")]
    BlowUp { t: f64, amplitude: f64 },

    /// An iterative solver stopped without reaching its tolerance.
    #[error("{what} did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence {
        what: String,
        residual: f64,
        iterations: usize,
    },

    /// A linear solve was rejected because its matrix is numerically singular.
    #[error("gram matrix ill-conditioned: cond = {cond:.3e}")]
    IllConditioned { cond: f64 },

    /// Backward-shooting differences failed to form a decreasing sequence.
    #[error("cauchy differences not decreasing: {detail}")]
    NotCauchy { detail: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn bad_input(msg: impl Into<String>) -> Self {
        Error::BadInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
