//! Monte Carlo harness: replicate simulation + estimation over a grid of
//! `(H, n)` cells, aggregate relative errors, and fit empirical convergence
//! rates.
//!
//! Replicate `r` of cell `(h_index, n)` draws its driver from the keyed
//! stream `replicate_seed(base_seed, h_index, n, r)`, and cells reduce in
//! ascending replicate order, so reports are bit-identical regardless of
//! how many worker threads run.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{estimate_theta1, estimate_theta2, EstimatorKind};
use crate::fbm::{self, FineGrid, HurstParam};
use crate::rng::replicate_seed;
use crate::sde::{downsample, euler_with_driver, CoefficientModel, ObservationGrid, ObservationSeries};
use crate::stats;

/// Amplitude convention for the driving fBm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriverAmplitude {
    /// Increments with exact variance `step^{2H}`; the driver is a true fBm
    /// on the expanding horizon. This is the model being studied.
    #[default]
    Exact,
    /// Increments rescaled by `horizon^{-H}`, i.e. the driver has unit
    /// variance at the horizon instead of `horizon^{2H}`. This is the
    /// convention behind the stored reference error tables; with it the
    /// mean relative errors decay like `2^{-n}` independently of H.
    UnitHorizon,
}

/// Which estimators a run should evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorSet {
    pub weighted: bool,
    pub simple: bool,
}

impl EstimatorSet {
    pub fn both() -> Self {
        Self { weighted: true, simple: true }
    }

    pub fn only(kind: EstimatorKind) -> Self {
        Self {
            weighted: kind == EstimatorKind::Weighted,
            simple: kind == EstimatorKind::Simple,
        }
    }

    pub fn contains(&self, kind: EstimatorKind) -> bool {
        match kind {
            EstimatorKind::Weighted => self.weighted,
            EstimatorKind::Simple => self.simple,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = EstimatorKind> + '_ {
        [EstimatorKind::Weighted, EstimatorKind::Simple]
            .into_iter()
            .filter(|k| self.contains(*k))
    }
}

/// Full description of a Monte Carlo experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub theta: f64,
    pub model: CoefficientModel,
    pub hurst_list: Vec<HurstParam>,
    pub n_list: Vec<u32>,
    pub replicates: usize,
    pub refinement: usize,
    pub base_seed: u64,
    pub estimators: EstimatorSet,
    pub x0: f64,
    pub driver: DriverAmplitude,
}

impl ExperimentConfig {
    /// Defaults: 20 replicates, refinement 8, `x0 = 0`, both estimators,
    /// exact driver.
    pub fn new(theta: f64, model: CoefficientModel) -> Self {
        Self {
            theta,
            model,
            hurst_list: Vec::new(),
            n_list: Vec::new(),
            replicates: 20,
            refinement: 8,
            base_seed: 0,
            estimators: EstimatorSet::both(),
            x0: 0.0,
            driver: DriverAmplitude::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta == 0.0 || !self.theta.is_finite() {
            return Err(Error::Domain(format!(
                "theta must be finite and nonzero, got {}",
                self.theta
            )));
        }
        if self.hurst_list.is_empty() {
            return Err(Error::Domain("hurst list is empty".into()));
        }
        for h in &self.hurst_list {
            if !h.is_long_range() {
                return Err(Error::Domain(format!(
                    "estimation requires H in (1/2, 1), got {}",
                    h.value()
                )));
            }
        }
        if self.n_list.is_empty() {
            return Err(Error::Domain("n list is empty".into()));
        }
        for &n in &self.n_list {
            ObservationGrid::new(n)?;
        }
        if self.replicates == 0 {
            return Err(Error::Domain("need at least one replicate".into()));
        }
        if self.refinement == 0 {
            return Err(Error::Domain("refinement must be at least 1".into()));
        }
        if !self.estimators.weighted && !self.estimators.simple {
            return Err(Error::Domain("no estimator selected".into()));
        }
        Ok(())
    }
}

/// Key of one `(H, n, estimator)` cell. `h_index` points into the config's
/// hurst list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub h_index: usize,
    pub n: u32,
    pub estimator: EstimatorKind,
}

/// Aggregated results of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub hurst: f64,
    /// `|theta_hat - theta| / |theta|` per successful replicate, in
    /// replicate order.
    pub rel_errors: Vec<f64>,
    /// Raw estimates per successful replicate.
    pub estimates: Vec<f64>,
    pub failures: usize,
    pub mean_rel_error: f64,
    pub median_rel_error: f64,
}

/// Least-squares fit of `log2(mean rel error)` against `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Everything an experiment run produces (timings are reported separately,
/// so this structure is bit-reproducible).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub theta: f64,
    pub hurst_values: Vec<f64>,
    pub n_values: Vec<u32>,
    pub cells: BTreeMap<CellKey, CellReport>,
    pub rate_fits: BTreeMap<(usize, EstimatorKind), RateFit>,
}

/// Mean wall time in milliseconds spent inside each estimator, per cell.
pub type TimingReport = BTreeMap<CellKey, f64>;

struct ReplicateOutcome {
    weighted: Option<Result<f64>>,
    simple: Option<Result<f64>>,
    weighted_ms: f64,
    simple_ms: f64,
}

fn run_replicate(
    config: &ExperimentConfig,
    h_index: usize,
    n: u32,
    replicate: usize,
) -> ReplicateOutcome {
    let hurst = config.hurst_list[h_index];
    let seed = replicate_seed(config.base_seed, h_index, n, replicate);
    let obs = match simulate_observations(config, hurst, n, seed) {
        Ok(obs) => obs,
        Err(e) => {
            let msg = format!("simulation failed: {e}");
            return ReplicateOutcome {
                weighted: config
                    .estimators
                    .weighted
                    .then(|| Err(Error::Numerical(msg.clone()))),
                simple: config.estimators.simple.then(|| Err(Error::Numerical(msg.clone()))),
                weighted_ms: 0.0,
                simple_ms: 0.0,
            };
        }
    };

    // Noise-free models are simulated with b = 0 but estimated with b = 1.
    let est_model = if config.model.is_noise_free() {
        let a = {
            let m = config.model.clone();
            Arc::new(move |x: f64| m.a(x)) as crate::sde::CoeffFn
        };
        CoefficientModel::new(
            format!("{} (unit diffusion for estimation)", config.model.label),
            a,
            Arc::new(|_| 1.0),
            config.model.bound_k + 1.0,
            config.model.lipschitz_l,
            None,
        )
    } else {
        config.model.clone()
    };

    let mut out = ReplicateOutcome {
        weighted: None,
        simple: None,
        weighted_ms: 0.0,
        simple_ms: 0.0,
    };
    if config.estimators.weighted {
        let t0 = Instant::now();
        let r = estimate_theta1(&obs, &est_model, hurst).map(|e| e.value);
        out.weighted_ms = t0.elapsed().as_secs_f64() * 1e3;
        out.weighted = Some(r);
    }
    if config.estimators.simple {
        let t0 = Instant::now();
        let r = estimate_theta2(&obs, &est_model).map(|e| e.value);
        out.simple_ms = t0.elapsed().as_secs_f64() * 1e3;
        out.simple = Some(r);
    }
    out
}

fn simulate_observations(
    config: &ExperimentConfig,
    hurst: HurstParam,
    n: u32,
    seed: u64,
) -> Result<ObservationSeries> {
    let obs_grid = ObservationGrid::new(n)?;
    let count = obs_grid.num_intervals() * config.refinement;
    let grid = FineGrid::new(obs_grid.horizon(), count)?;
    let mut increments = fbm::fgn_increments(hurst, &grid, seed)?;
    if config.driver == DriverAmplitude::UnitHorizon {
        let scale = obs_grid.horizon().powf(-hurst.value());
        for g in &mut increments {
            *g *= scale;
        }
    }
    let values = euler_with_driver(config.theta, &config.model, config.x0, &increments, grid.step())?;
    let path = crate::sde::SdePath {
        fine_grid: grid,
        values,
        theta: config.theta,
        x0: config.x0,
        hurst,
        driver_seed: seed,
        refinement: config.refinement,
    };
    downsample(&path, obs_grid)
}

/// Run the experiment; identical configs give bit-identical reports.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_timed(config).map(|(report, _)| report)
}

/// As [`run_experiment`], also returning mean per-cell estimator wall times
/// (timings are machine-dependent and excluded from the report proper).
pub fn run_experiment_timed(config: &ExperimentConfig) -> Result<(ExperimentReport, TimingReport)> {
    config.validate()?;
    let mut cells = BTreeMap::new();
    let mut timings = TimingReport::new();
    for (h_index, hurst) in config.hurst_list.iter().enumerate() {
        for &n in &config.n_list {
            let outcomes: Vec<ReplicateOutcome> = (0..config.replicates)
                .into_par_iter()
                .map(|r| run_replicate(config, h_index, n, r))
                .collect();
            for kind in config.estimators.iter() {
                let mut estimates = Vec::new();
                let mut rel_errors = Vec::new();
                let mut failures = 0usize;
                let mut ms = 0.0;
                for outcome in &outcomes {
                    let (slot, slot_ms) = match kind {
                        EstimatorKind::Weighted => (&outcome.weighted, outcome.weighted_ms),
                        EstimatorKind::Simple => (&outcome.simple, outcome.simple_ms),
                    };
                    ms += slot_ms;
                    match slot {
                        Some(Ok(value)) => {
                            estimates.push(*value);
                            rel_errors.push((value - config.theta).abs() / config.theta.abs());
                        }
                        Some(Err(_)) => failures += 1,
                        None => unreachable!("estimator {kind} was requested"),
                    }
                }
                let key = CellKey { h_index, n, estimator: kind };
                cells.insert(
                    key,
                    CellReport {
                        hurst: hurst.value(),
                        mean_rel_error: stats::mean(&rel_errors),
                        median_rel_error: stats::median(&rel_errors),
                        rel_errors,
                        estimates,
                        failures,
                    },
                );
                timings.insert(key, ms / config.replicates as f64);
            }
        }
    }
    let mut report = ExperimentReport {
        theta: config.theta,
        hurst_values: config.hurst_list.iter().map(|h| h.value()).collect(),
        n_values: config.n_list.clone(),
        cells,
        rate_fits: BTreeMap::new(),
    };
    if config.n_list.len() >= 3 {
        for h_index in 0..config.hurst_list.len() {
            for kind in config.estimators.iter() {
                if let Ok(fit) = rate_fit(&report, h_index, kind) {
                    report.rate_fits.insert((h_index, kind), fit);
                }
            }
        }
    }
    Ok((report, timings))
}

/// Least-squares slope of `log2(mean rel error)` against `n` for one
/// `(H, estimator)` series; the slope is the empirical rate exponent.
pub fn rate_fit(report: &ExperimentReport, h_index: usize, kind: EstimatorKind) -> Result<RateFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in &report.n_values {
        let key = CellKey { h_index, n, estimator: kind };
        if let Some(cell) = report.cells.get(&key) {
            if cell.mean_rel_error.is_finite() && cell.mean_rel_error > 0.0 {
                xs.push(n as f64);
                ys.push(cell.mean_rel_error.log2());
            } else if cell.mean_rel_error == 0.0 {
                return Err(Error::Numerical(
                    "mean relative error is exactly zero; no rate to fit".into(),
                ));
            }
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs at least 3 values of n, found {}",
            xs.len()
        )));
    }
    let (slope, intercept) = stats::linear_fit(&xs, &ys);
    Ok(RateFit { slope, intercept })
}

/// Raw estimates of a degenerate-coefficient run, with dispersion summaries.
#[derive(Debug, Clone)]
pub struct PathologyReport {
    pub weighted: Vec<f64>,
    pub simple: Vec<f64>,
    pub failures: usize,
    /// interquartile range / |theta| per estimator
    pub iqr_over_theta_weighted: f64,
    pub iqr_over_theta_simple: f64,
    pub median_weighted: f64,
    pub median_simple: f64,
}

/// Run `replicates` estimates of a (typically condition-violating) model at
/// a single `(H, n)` cell and return the raw estimates unaggregated.
#[allow(clippy::too_many_arguments)]
pub fn pathology_run(
    model: &CoefficientModel,
    theta: f64,
    hurst: HurstParam,
    n: u32,
    replicates: usize,
    refinement: usize,
    base_seed: u64,
    driver: DriverAmplitude,
) -> Result<PathologyReport> {
    let mut config = ExperimentConfig::new(theta, model.clone());
    config.hurst_list = vec![hurst];
    config.n_list = vec![n];
    config.replicates = replicates;
    config.refinement = refinement;
    config.base_seed = base_seed;
    config.driver = driver;
    let report = run_experiment(&config)?;
    let weighted = report.cells[&CellKey { h_index: 0, n, estimator: EstimatorKind::Weighted }].clone();
    let simple = report.cells[&CellKey { h_index: 0, n, estimator: EstimatorKind::Simple }].clone();
    Ok(PathologyReport {
        iqr_over_theta_weighted: stats::interquartile_range(&weighted.estimates) / theta.abs(),
        iqr_over_theta_simple: stats::interquartile_range(&simple.estimates) / theta.abs(),
        median_weighted: stats::median(&weighted.estimates),
        median_simple: stats::median(&simple.estimates),
        failures: weighted.failures + simple.failures,
        weighted: weighted.estimates,
        simple: simple.estimates,
    })
}
