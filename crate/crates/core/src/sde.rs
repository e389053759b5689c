//! Coefficient models, the pathwise Euler solver for
//! `dX_t = theta a(X_t) dt + b(X_t) dB^H_t`, and observation-grid plumbing.
//!
//! For `H > 1/2` the diffusion integral is a Young limit, so the forward
//! Euler recursion on a refined grid is consistent; no higher-order
//! correction terms are applied.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr;
use crate::fbm::{self, FbmPath, FineGrid, HurstParam};

pub type CoeffFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Largest observation level accepted; `n = 12` already means 16.7M
/// observations.
pub const MAX_OBS_LEVEL: u32 = 12;

/// Drift/diffusion pair `(a, b)` with its declared regularity constants.
///
/// `bound_k`, `lipschitz_l` and `lower_m` are the declared boundedness,
/// Lipschitz and non-degeneracy constants; `lower_m` is absent for pairs
/// that change sign. [`validate_coefficients`] produces measured
/// counterparts on a probe grid.
#[derive(Clone)]
pub struct CoefficientModel {
    a: CoeffFn,
    b: CoeffFn,
    pub bound_k: f64,
    pub lipschitz_l: f64,
    pub lower_m: Option<f64>,
    /// Holder exponent of b' assumed by the well-posedness conditions;
    /// recorded as metadata, not verified numerically.
    pub holder_delta: f64,
    pub label: String,
    noise_free: bool,
}

impl std::fmt::Debug for CoefficientModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientModel")
            .field("label", &self.label)
            .field("bound_k", &self.bound_k)
            .field("lipschitz_l", &self.lipschitz_l)
            .field("lower_m", &self.lower_m)
            .field("noise_free", &self.noise_free)
            .finish()
    }
}

const SQRT2X2: f64 = 2.0 * std::f64::consts::SQRT_2;

impl CoefficientModel {
    pub fn new(
        label: impl Into<String>,
        a: CoeffFn,
        b: CoeffFn,
        bound_k: f64,
        lipschitz_l: f64,
        lower_m: Option<f64>,
    ) -> Self {
        Self {
            a,
            b,
            bound_k,
            lipschitz_l,
            lower_m,
            holder_delta: 1.0,
            label: label.into(),
            noise_free: false,
        }
    }

    /// Drift-only model with `b ≡ 0`, admitted for testing: simulation runs
    /// without noise, and the Monte Carlo harness estimates such models with
    /// `b ≡ 1` substituted (exact only for constant drift, which is what the
    /// tests use).
    pub fn noise_free(label: impl Into<String>, a: CoeffFn, bound_k: f64) -> Self {
        let mut model = Self::new(label, a, Arc::new(|_| 0.0), bound_k, 0.0, None);
        model.noise_free = true;
        model
    }

    pub fn is_noise_free(&self) -> bool {
        self.noise_free
    }

    pub fn a(&self, x: f64) -> f64 {
        (self.a)(x)
    }

    pub fn b(&self, x: f64) -> f64 {
        (self.b)(x)
    }

    /// The simulation benchmark pairs plus constant conveniences:
    ///
    /// * `tame` - a = 2 sin x + 3, b = 2 cos x + 3 (well separated from 0)
    /// * `near-critical` - a = 2 sin x + 2.1, b = 2 cos x + 2.1
    /// * `drift-degenerate` - a = 2 cos x + 1 changes sign
    /// * `diffusion-degenerate` - b = 2 sin x + 1 changes sign
    /// * `unit` - a = b = 1
    /// * `noiseless` - a = 1, b = 0 (testing hook)
    pub fn builtin(name: &str) -> Result<Self> {
        let m = match name {
            "tame" => Self::new(
                "tame",
                Arc::new(|x: f64| 2.0 * x.sin() + 3.0),
                Arc::new(|x: f64| 2.0 * x.cos() + 3.0),
                6.0 + SQRT2X2,
                SQRT2X2,
                Some(1.0),
            ),
            "near-critical" => Self::new(
                "near-critical",
                Arc::new(|x: f64| 2.0 * x.sin() + 2.1),
                Arc::new(|x: f64| 2.0 * x.cos() + 2.1),
                4.2 + SQRT2X2,
                SQRT2X2,
                Some(0.1),
            ),
            "drift-degenerate" => Self::new(
                "drift-degenerate",
                Arc::new(|x: f64| 2.0 * x.cos() + 1.0),
                Arc::new(|x: f64| 2.0 * x.sin() + 3.0),
                8.0,
                SQRT2X2,
                None,
            ),
            "diffusion-degenerate" => Self::new(
                "diffusion-degenerate",
                Arc::new(|x: f64| 2.0 * x.cos() + 3.0),
                Arc::new(|x: f64| 2.0 * x.sin() + 1.0),
                8.0,
                SQRT2X2,
                None,
            ),
            "unit" => Self::new("unit", Arc::new(|_| 1.0), Arc::new(|_| 1.0), 2.0, 0.0, Some(1.0)),
            "noiseless" => Self::noise_free("noiseless", Arc::new(|_| 1.0), 1.0),
            other => {
                return Err(Error::Domain(format!(
                    "unknown builtin coefficient pair '{other}' (available: tame, near-critical, \
                     drift-degenerate, diffusion-degenerate, unit, noiseless)"
                )))
            }
        };
        Ok(m)
    }

    /// Build a model from two expression strings in `x`; the declared
    /// constants are measured on a dense probe of `[-20, 20]`.
    pub fn from_exprs(a_src: &str, b_src: &str) -> Result<Self> {
        let a_expr = expr::parse(a_src)?;
        let b_expr = expr::parse(b_src)?;
        let a_fn: CoeffFn = {
            let e = a_expr.clone();
            Arc::new(move |x| e.eval(x))
        };
        let b_fn: CoeffFn = {
            let e = b_expr.clone();
            Arc::new(move |x| e.eval(x))
        };
        let mut model = Self::new(
            format!("a={a_src}; b={b_src}"),
            a_fn,
            b_fn,
            f64::NAN,
            f64::NAN,
            None,
        );
        let report = validate_coefficients(&model, -20.0, 20.0, 100_001)?;
        model.bound_k = report.k_hat;
        model.lipschitz_l = report.l_hat;
        model.lower_m = if report.condition_d_ok {
            Some(report.m_hat)
        } else {
            None
        };
        let probe: Vec<f64> = (0..=1000).map(|i| -20.0 + 0.04 * i as f64).collect();
        model.noise_free = probe.iter().all(|&x| model.b(x) == 0.0);
        Ok(model)
    }
}

/// Measured coefficient bounds on a probe grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// max |a| + |b|
    pub k_hat: f64,
    /// max difference quotient of |a(x)-a(y)| + |b(x)-b(y)| over adjacent
    /// probe points
    pub l_hat: f64,
    /// min of min(|a|, |b|)
    pub m_hat: f64,
    /// whether both coefficients stay away from zero with constant sign
    pub condition_d_ok: bool,
}

/// Probe `[lo, hi]` with `count` uniform points and report measured bounds.
/// Reports rather than rejects, so degenerate pairs can still be simulated.
pub fn validate_coefficients(
    model: &CoefficientModel,
    lo: f64,
    hi: f64,
    count: usize,
) -> Result<ValidationReport> {
    if lo >= hi || lo.is_nan() || hi.is_nan() {
        return Err(Error::Domain(format!("empty probe interval [{lo}, {hi}]")));
    }
    if count < 2 {
        return Err(Error::Domain("probe needs at least 2 points".into()));
    }
    let dx = (hi - lo) / (count - 1) as f64;
    let mut k_hat = f64::NEG_INFINITY;
    let mut m_hat = f64::INFINITY;
    let mut l_hat = 0.0_f64;
    let mut prev: Option<(f64, f64)> = None;
    let mut sign_a: Option<f64> = None;
    let mut sign_b: Option<f64> = None;
    let mut signs_ok = true;
    for i in 0..count {
        let x = lo + dx * i as f64;
        let a = model.a(x);
        let b = model.b(x);
        k_hat = k_hat.max(a.abs() + b.abs());
        m_hat = m_hat.min(a.abs().min(b.abs()));
        if let Some((pa, pb)) = prev {
            l_hat = l_hat.max(((a - pa).abs() + (b - pb).abs()) / dx);
        }
        prev = Some((a, b));
        for (value, sign) in [(a, &mut sign_a), (b, &mut sign_b)] {
            match *sign {
                None if value != 0.0 => *sign = Some(value.signum()),
                Some(s) if value != 0.0 && value.signum() != s => signs_ok = false,
                _ => {}
            }
        }
    }
    Ok(ValidationReport {
        k_hat,
        l_hat,
        m_hat,
        condition_d_ok: m_hat > 0.0 && signs_ok,
    })
}

/// The dyadic observation design: `t_k = k 2^{-n}`, `k = 0..=2^{2n}`, on
/// the horizon `[0, 2^n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationGrid {
    n: u32,
}

impl ObservationGrid {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_OBS_LEVEL {
            return Err(Error::Domain(format!(
                "observation level n must lie in 1..={MAX_OBS_LEVEL}, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn level(self) -> u32 {
        self.n
    }

    /// Number of observation intervals, `2^{2n}`.
    pub fn num_intervals(self) -> usize {
        1usize << (2 * self.n)
    }

    pub fn num_points(self) -> usize {
        self.num_intervals() + 1
    }

    /// Observation spacing `2^{-n}`.
    pub fn spacing(self) -> f64 {
        0.5_f64.powi(self.n as i32)
    }

    /// Horizon `2^n`.
    pub fn horizon(self) -> f64 {
        2.0_f64.powi(self.n as i32)
    }

    pub fn time(self, k: usize) -> f64 {
        k as f64 * self.spacing()
    }
}

/// An Euler-simulated solution path on the fine grid.
#[derive(Debug, Clone)]
pub struct SdePath {
    pub fine_grid: FineGrid,
    pub values: Vec<f64>,
    pub theta: f64,
    pub x0: f64,
    pub hurst: HurstParam,
    pub driver_seed: u64,
    pub refinement: usize,
}

/// Solution values restricted to an observation grid; the estimators' only
/// path input.
#[derive(Debug, Clone)]
pub struct ObservationSeries {
    pub grid: ObservationGrid,
    pub values: Vec<f64>,
}

/// Forward Euler against an explicit driver increment sequence.
///
/// `values[j+1] = values[j] + theta a(values[j]) dt + b(values[j]) inc[j]`.
/// The diffusion increment is added last, so a zero-drift unit-diffusion
/// model replays the driver bit for bit.
pub fn euler_with_driver(
    theta: f64,
    model: &CoefficientModel,
    x0: f64,
    increments: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(increments.len() + 1);
    let mut x = x0;
    values.push(x);
    for (j, g) in increments.iter().enumerate() {
        x = (x + theta * model.a(x) * dt) + model.b(x) * g;
        if !x.is_finite() {
            return Err(Error::Numerical(format!(
                "simulation blew up at step {} (t = {}): non-finite state",
                j + 1,
                (j + 1) as f64 * dt
            )));
        }
        values.push(x);
    }
    Ok(values)
}

/// Simulate the SDE on `[0, 2^n]` with `refinement` Euler sub-steps per
/// observation interval, driven by the exact-covariance fBm keyed by `seed`.
pub fn simulate_sde(
    theta: f64,
    model: &CoefficientModel,
    x0: f64,
    hurst: HurstParam,
    obs_n: u32,
    refinement: usize,
    seed: u64,
) -> Result<SdePath> {
    Ok(simulate_sde_with_driver(theta, model, x0, hurst, obs_n, refinement, seed)?.0)
}

/// As [`simulate_sde`], also returning the driving fBm path (used by the
/// Holder and increment-bound diagnostics).
pub fn simulate_sde_with_driver(
    theta: f64,
    model: &CoefficientModel,
    x0: f64,
    hurst: HurstParam,
    obs_n: u32,
    refinement: usize,
    seed: u64,
) -> Result<(SdePath, FbmPath)> {
    if !hurst.is_long_range() {
        return Err(Error::Domain(format!(
            "pathwise Euler for this model requires H > 1/2, got {}",
            hurst.value()
        )));
    }
    if refinement == 0 {
        return Err(Error::Domain("refinement must be at least 1".into()));
    }
    let obs = ObservationGrid::new(obs_n)?;
    let count = obs
        .num_intervals()
        .checked_mul(refinement)
        .ok_or_else(|| Error::Domain("fine grid size overflows".into()))?;
    let grid = FineGrid::new(obs.horizon(), count)?;
    let increments = fbm::fgn_increments(hurst, &grid, seed)?;
    let values = euler_with_driver(theta, model, x0, &increments, grid.step())?;
    let mut driver_values = Vec::with_capacity(grid.num_points());
    driver_values.push(0.0);
    let mut acc = 0.0;
    for g in &increments {
        acc += g;
        driver_values.push(acc);
    }
    let driver = FbmPath {
        grid: grid.clone(),
        values: driver_values,
        hurst,
        seed,
    };
    let path = SdePath {
        fine_grid: grid,
        values,
        theta,
        x0,
        hurst,
        driver_seed: seed,
        refinement,
    };
    Ok((path, driver))
}

/// Copy (never interpolate) the fine-grid values at the observation points.
pub fn downsample(path: &SdePath, grid: ObservationGrid) -> Result<ObservationSeries> {
    let intervals = grid.num_intervals();
    if !path.fine_grid.count().is_multiple_of(intervals) {
        return Err(Error::Alignment(format!(
            "fine grid ({} steps) does not refine the observation grid ({} intervals)",
            path.fine_grid.count(),
            intervals
        )));
    }
    let refinement = path.fine_grid.count() / intervals;
    if (path.fine_grid.horizon() - grid.horizon()).abs() > 1e-9 * grid.horizon() {
        return Err(Error::Alignment(format!(
            "horizon mismatch: fine grid ends at {}, observation grid at {}",
            path.fine_grid.horizon(),
            grid.horizon()
        )));
    }
    let values = (0..=intervals).map(|k| path.values[k * refinement]).collect();
    Ok(ObservationSeries { grid, values })
}

/// Empirical Holder diagnostic of a solution path.
#[derive(Debug, Clone, Copy)]
pub struct HolderDiagnostic {
    /// max |X_{t2} - X_{t1}| / ((t2-t1)^beta (log(t2+2))^kappa)
    pub zeta_hat: f64,
    /// the pair attaining the maximum
    pub max_pair: (f64, f64),
}

/// Scan dyadic pairs with `t2 - t1 <= 1` for the largest normalized
/// increment, `kappa = gamma / beta`.
pub fn holder_diagnostic(path: &SdePath, beta: f64, gamma_exp: f64) -> Result<HolderDiagnostic> {
    let h = path.hurst.value();
    if !(beta > 0.5 && beta < h) {
        return Err(Error::Domain(format!(
            "beta must lie in (1/2, H) = (0.5, {h}), got {beta}"
        )));
    }
    if gamma_exp <= 0.5 {
        return Err(Error::Domain(format!(
            "gamma must exceed 1/2, got {gamma_exp}"
        )));
    }
    let kappa = gamma_exp / beta;
    let grid = &path.fine_grid;
    let max_span = (1.0 / grid.step()).floor().max(1.0) as usize;
    let mut zeta_hat = 0.0_f64;
    let mut max_pair = (0.0, 0.0);
    let mut span = 1usize;
    while span <= grid.count() {
        if span <= max_span {
            let stride = (span / 2).max(1);
            let mut u = 0usize;
            while u + span <= grid.count() {
                let v = u + span;
                let dt = span as f64 * grid.step();
                let t2 = grid.time(v);
                let ratio = (path.values[v] - path.values[u]).abs()
                    / (dt.powf(beta) * (t2 + 2.0).ln().powf(kappa));
                if ratio > zeta_hat {
                    zeta_hat = ratio;
                    max_pair = (grid.time(u), t2);
                }
                u += stride;
            }
        }
        span *= 2;
    }
    Ok(HolderDiagnostic { zeta_hat, max_pair })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    #[test]
    fn validation_measures_the_analytic_bounds() {
        let tame = CoefficientModel::builtin("tame").unwrap();
        let report = validate_coefficients(&tame, -20.0, 20.0, 100_001).unwrap();
        // min |2 sin x + 3| = 1, attained inside the probe window
        assert!((report.m_hat - 1.0).abs() < 1e-4, "m_hat = {}", report.m_hat);
        assert!(report.condition_d_ok);
        assert!((report.k_hat - (6.0 + SQRT2X2)).abs() < 1e-4);
        assert!((report.l_hat - SQRT2X2).abs() < 1e-3);
    }

    #[test]
    fn sign_change_fails_condition_d() {
        let m = CoefficientModel::builtin("drift-degenerate").unwrap();
        let report = validate_coefficients(&m, -20.0, 20.0, 10_001).unwrap();
        assert!(!report.condition_d_ok);
    }

    #[test]
    fn constant_pair_has_flat_bounds() {
        let m = CoefficientModel::builtin("unit").unwrap();
        let report = validate_coefficients(&m, -5.0, 5.0, 101).unwrap();
        assert_eq!(report.k_hat, 2.0);
        assert_eq!(report.l_hat, 0.0);
        assert_eq!(report.m_hat, 1.0);
        assert!(report.condition_d_ok);
    }

    #[test]
    fn validation_rejects_bad_probes() {
        let m = CoefficientModel::builtin("unit").unwrap();
        assert!(validate_coefficients(&m, 1.0, 1.0, 100).is_err());
        assert!(validate_coefficients(&m, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn noise_free_constant_drift_is_exact() {
        // b = 0, a = 1, theta = 2: X_t = 2t at every fine-grid point.
        let model = CoefficientModel::builtin("noiseless").unwrap();
        let path = simulate_sde(2.0, &model, 0.0, h(0.7), 3, 8, 123).unwrap();
        for j in 0..=path.fine_grid.count() {
            let expect = 2.0 * path.fine_grid.time(j);
            assert!(
                (path.values[j] - expect).abs() <= 1e-12 * expect.max(1.0),
                "j = {j}"
            );
        }
    }

    #[test]
    fn zero_drift_unit_diffusion_replays_the_driver_bitwise() {
        let model = CoefficientModel::builtin("unit").unwrap();
        let (path, driver) = simulate_sde_with_driver(0.0, &model, 0.0, h(0.7), 3, 8, 7).unwrap();
        assert_eq!(path.values, driver.values);
        let fbm_direct = fbm::generate_fbm(h(0.7), &path.fine_grid, 7).unwrap();
        assert_eq!(path.values, fbm_direct.values);
    }

    #[test]
    fn blow_up_names_the_step() {
        let model = CoefficientModel::new(
            "exploding",
            Arc::new(|x: f64| x.exp()),
            Arc::new(|_| 0.0),
            f64::INFINITY,
            f64::INFINITY,
            None,
        );
        let err = simulate_sde(1e6, &model, 10.0, h(0.7), 2, 1, 3).unwrap_err();
        match err {
            Error::Numerical(msg) => assert!(msg.contains("step"), "{msg}"),
            other => panic!("expected numerical blow-up, got {other:?}"),
        }
    }

    #[test]
    fn downsample_copies_exact_values() {
        let model = CoefficientModel::builtin("tame").unwrap();
        let obs_grid = ObservationGrid::new(3).unwrap();

        // refinement 1: identity copy
        let path1 = simulate_sde(2.0, &model, 0.0, h(0.7), 3, 1, 5).unwrap();
        let series1 = downsample(&path1, obs_grid).unwrap();
        assert_eq!(series1.values, path1.values);

        // refinement 8 at n = 3: 2^6 + 1 = 65 points
        let path8 = simulate_sde(2.0, &model, 0.0, h(0.7), 3, 8, 5).unwrap();
        let series8 = downsample(&path8, obs_grid).unwrap();
        assert_eq!(series8.values.len(), 65);
        for (k, v) in series8.values.iter().enumerate() {
            assert_eq!(*v, path8.values[k * 8]);
        }

        // driver identity survives downsampling bitwise
        let unit = CoefficientModel::builtin("unit").unwrap();
        let (p, driver) = simulate_sde_with_driver(0.0, &unit, 0.0, h(0.7), 3, 8, 5).unwrap();
        let s = downsample(&p, obs_grid).unwrap();
        for (k, v) in s.values.iter().enumerate() {
            assert_eq!(*v, driver.values[k * 8]);
        }
    }

    #[test]
    fn downsample_rejects_misaligned_grids() {
        let model = CoefficientModel::builtin("unit").unwrap();
        let path = simulate_sde(1.0, &model, 0.0, h(0.7), 3, 8, 5).unwrap();
        let wrong = ObservationGrid::new(4).unwrap();
        assert!(matches!(downsample(&path, wrong), Err(Error::Alignment(_))));
    }

    #[test]
    fn holder_diagnostic_flat_and_linear_paths() {
        let noiseless = CoefficientModel::noise_free("still", Arc::new(|_| 0.0), 0.0);
        let flat = simulate_sde(1.0, &noiseless, 0.0, h(0.7), 2, 4, 1).unwrap();
        assert_eq!(holder_diagnostic(&flat, 0.6, 0.6).unwrap().zeta_hat, 0.0);

        // X_t = t: exhaustive scan over all pairs with t2 - t1 <= 1 agrees
        // with the dyadicscan exactly (max attained at the pair (0, 1)).
        let line = simulate_sde(1.0, &CoefficientModel::builtin("noiseless").unwrap(), 0.0, h(0.7), 2, 4, 1).unwrap();
        let dyadic = holder_diagnostic(&line, 0.6, 0.6).unwrap();
        let grid = &line.fine_grid;
        let kappa = 0.6 / 0.6;
        let max_span = (1.0 / grid.step()) as usize;
        let mut brute = 0.0_f64;
        for u in 0..grid.count() {
            for v in u + 1..=(u + max_span).min(grid.count()) {
                let dt = (v - u) as f64 * grid.step();
                let r = (line.values[v] - line.values[u]).abs()
                    / (dt.powf(0.6) * (grid.time(v) + 2.0).ln().powf(kappa));
                brute = brute.max(r);
            }
        }
        assert!((dyadic.zeta_hat - brute).abs() <= 1e-12 * brute);
        assert_eq!(dyadic.max_pair, (0.0, 1.0));
    }

    #[test]
    fn holder_diagnostic_rejects_bad_exponents() {
        let line = simulate_sde(1.0, &CoefficientModel::builtin("noiseless").unwrap(), 0.0, h(0.7), 2, 4, 1).unwrap();
        assert!(holder_diagnostic(&line, 0.8, 0.6).is_err());
        assert!(holder_diagnostic(&line, 0.6, 0.4).is_err());
    }

    #[test]
    fn expression_models_match_builtins() {
        let from_expr = CoefficientModel::from_exprs("2*sin(x)+3", "2*cos(x)+3").unwrap();
        let builtin = CoefficientModel::builtin("tame").unwrap();
        for x in [-3.0, 0.0, 0.5, 11.0] {
            assert!((from_expr.a(x) - builtin.a(x)).abs() < 1e-15);
            assert!((from_expr.b(x) - builtin.b(x)).abs() < 1e-15);
        }
        assert!(!from_expr.is_noise_free());
        assert!(CoefficientModel::from_exprs("1", "0").unwrap().is_noise_free());
    }

    #[test]
    fn observation_grid_arithmetic() {
        let g = ObservationGrid::new(3).unwrap();
        assert_eq!(g.num_intervals(), 64);
        assert_eq!(g.num_points(), 65);
        assert_eq!(g.spacing(), 0.125);
        assert_eq!(g.horizon(), 8.0);
        assert_eq!(g.time(64), 8.0);
        assert!(ObservationGrid::new(0).is_err());
        assert!(ObservationGrid::new(13).is_err());
    }
}
