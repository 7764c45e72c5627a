//! Crate-wide error type.
//!
//! Operations distinguish precondition violations (bad inputs, support
//! mismatches, rates outside the window where a bound is defined) from
//! genuine numerical failures such as non-convergence. Extended-value
//! semantics (returning `+inf` where a divergence diverges) are selected per
//! call and never surface as errors.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^dagger| entry = {deviation:.3e} exceeds {tol:.3e}")]
    NonHermitian { deviation: f64, tol: f64 },

    #[error("operator has negative eigenvalue {eigenvalue:.6e} below -{tol:.3e}")]
    NegativeSpectrum { eigenvalue: f64, tol: f64 },

    #[error("dimension {dim} exceeds configured cap {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },

    #[error("support violation: {context}")]
    SupportViolation { context: String },

    #[error("Renyi order alpha = {alpha} outside (0,1) U (1,inf)")]
    AlphaOutOfRange { alpha: f64 },

    #[error("probability {value} outside [0,1]")]
    ProbabilityOutOfRange { value: f64 },

    #[error("symbol {symbol:?} not in channel alphabet")]
    UnknownSymbol { symbol: String },

    #[error("channel output average under the uniform input is rank-deficient (min eigenvalue {min_eigenvalue:.3e}); the model assumes a full-support image")]
    ChannelNotFullSupport { min_eigenvalue: f64 },

    #[error("optimizer did not reach tolerance {tol:.3e} after {iterations} iterations (best residual {residual:.3e})")]
    NonConvergence {
        tol: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("type-II error budget mu = {mu} outside (0,1)")]
    MuOutOfRange { mu: f64 },

    #[error("type-class count {count} exceeds cap {cap}")]
    TypeClassCapExceeded { count: u64, cap: u64 },

    #[error("relative-entropy variance is degenerate (V = {variance:.3e})")]
    DegenerateVariance { variance: f64 },

    #[error("channel is degenerate (V_W = {v_w:.3e} below tolerance)")]
    DegenerateChannel { v_w: f64 },

    #[error("tilt solving Lambda'(t) = {target:.6e} does not fall in the admissible interval: {context}")]
    TiltNotInUnitInterval { target: f64, context: String },

    #[error("conditional variance {variance:.6e} below requested floor nu = {nu:.6e}")]
    VarianceBelowNu { variance: f64, nu: f64 },

    #[error("rate {rate:.6e} outside the window (D_0, D) = ({d0:.6e}, {d:.6e})")]
    RateOutOfWindow { rate: f64, d0: f64, d: f64 },

    #[error("blocklength {n} below the smallest admissible N_0 = {required}")]
    BelowN0 { n: u64, required: u64 },

    #[error("log(gamma) = {log_gamma:.6e} must exceed D = {d:.6e}")]
    GammaBelowThreshold { log_gamma: f64, d: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
