//! Simulation of stochastic differential equations driven by fractional
//! Brownian motion with `H > 1/2`, and drift estimation from discrete
//! observations on the dyadic design `t_k = k 2^{-n}`, `k = 0..=2^{2n}`.
//!
//! The crate provides
//!
//! * [`fbm`] - exact-covariance fBm sampling via circulant embedding;
//! * [`frac`] - fractional derivatives of sampled paths and the sup-ratio
//!   diagnostics controlling Young integral bounds;
//! * [`sde`] - coefficient models with non-degeneracy validation and the
//!   pathwise Euler solver;
//! * [`estimators`] - the Beta-weighted and unweighted drift estimators;
//! * [`experiment`] - a reproducible Monte Carlo harness with keyed RNG
//!   streams, relative-error aggregation and convergence-rate fits.

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod expr;
pub mod fbm;
pub mod frac;
pub mod rng;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
pub use estimators::{
    beta_weight_sum, estimate_theta1, estimate_theta2, weighted_kernel, EstimateResult,
    EstimateWarning, EstimatorKind,
};
pub use experiment::{
    pathology_run, rate_fit, run_experiment, run_experiment_timed, CellKey, CellReport,
    DriverAmplitude, EstimatorSet, ExperimentConfig, ExperimentReport, PathologyReport, RateFit,
    TimingReport,
};
pub use fbm::{
    embedding_spectrum, fbm_covariance, fgn_increments, generate_ensemble, generate_fbm, FbmPath,
    FineGrid, HurstParam,
};
pub use frac::{
    lambda_beta, lambda_beta_path, scaling_slope, theorem1_statistic, z_value, FracDerivSample,
    FracOrder, RatioStatistic,
};
pub use sde::{
    downsample, euler_with_driver, holder_diagnostic, simulate_sde, simulate_sde_with_driver,
    validate_coefficients, CoefficientModel, HolderDiagnostic, ObservationGrid, ObservationSeries,
    SdePath, ValidationReport,
};
