use thiserror::Error;

/// Errors produced by simulation, fractional-calculus and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sampled path is too coarse for the requested evaluation.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Grids that were expected to nest do not.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// A floating-point computation produced a non-finite or unusable value.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The diffusion coefficient vanished at an observed state, so its
    /// reciprocal is undefined.
    #[error("diffusion coefficient b vanishes at observation k = {k} (state x = {x})")]
    ZeroDiffusion { k: usize, x: f64 },

    /// The estimator denominator collapsed to zero.
    #[error("degenerate estimate: denominator = {denominator}")]
    DegenerateEstimate { denominator: f64 },

    /// Not enough data points for the requested fit or statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// An ensemble statistic was requested on an empty ensemble.
    #[error("empty ensemble")]
    EmptyEnsemble,
}

pub type Result<T> = std::result::Result<T, Error>;
