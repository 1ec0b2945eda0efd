use thiserror::Error;

/// Errors produced by the design, factorization and certification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular reference system at frequencies (units of pi) {refs:?}")]
    SingularSystem { refs: Vec<f64> },

    #[error("exchange did not converge after {iterations} iterations (last deviation {last_delta:e})")]
    NonConvergence {
        iterations: usize,
        last_delta: f64,
        /// Reference frequencies (radians) of the last iterate.
        last_reference: Vec<f64>,
    },

    #[error("too few extrema in weighted error: found {found}, need {required}")]
    TooFewExtrema { found: usize, required: usize },

    #[error("weight bracket not found below {cap:e} for k_des = {k_des}")]
    BracketNotFound { k_des: f64, cap: f64 },

    #[error("weight search failed to reach tolerance: residual {residual:e} after {iterations} steps")]
    WeightNotConverged { residual: f64, iterations: usize },

    #[error("lifted spectrum is negative: P = {value:e} at {freq_pi} pi")]
    NegativeSpectrum { value: f64, freq_pi: f64 },

    #[error("unpaired zero {re} {im:+}j (closest reciprocal partner at distance {distance:e})")]
    UnpairedZero { re: f64, im: f64, distance: f64 },

    #[error("order {order} exceeds root-finding limit {limit}; use cepstral factorization")]
    RootLimitExceeded { order: usize, limit: usize },

    #[error("eigenvalue computation failed for degree-{0} polynomial")]
    EigenFailure(usize),

    #[error("cepstral factorization residual {residual:e} exceeds tolerance at fft length {fft_len}; increase fft_len")]
    CepstralResidual { residual: f64, fft_len: usize },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("internal consistency: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
