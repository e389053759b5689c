//! Exact-covariance fractional Brownian motion on uniform grids.
//!
//! A fractional Brownian motion with Hurst parameter `H` is the centered
//! Gaussian process with covariance
//!
//! $$ E[B_t B_s] = \tfrac12 (s^{2H} + t^{2H} - |t-s|^{2H}). $$
//!
//! Sampling goes through circulant embedding of the stationary increment
//! covariance (exact in distribution, `O(N log N)`); when the embedding
//! spectrum has eigenvalues below `-1e-8 * max` the generator falls back to a
//! dense Cholesky factorization for grids up to 4096 increments.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::rng::keyed_rng;

/// Relative tolerance on negative embedding eigenvalues before the dense
/// fallback kicks in.
const SPECTRUM_TOL: f64 = 1e-8;

/// Largest grid the dense Cholesky fallback will attempt.
const CHOLESKY_MAX: usize = 4096;

/// Hurst parameter `H` of a fractional Brownian motion, `0 < H < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!(
                "Hurst parameter must lie in (0, 1), got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Whether `H > 1/2`, the long-range-dependent regime required by the
    /// drift estimators.
    pub fn is_long_range(self) -> bool {
        self.0 > 0.5
    }
}

/// Uniform simulation grid `{ j * step : j = 0..=count }` with
/// `count * step = horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct FineGrid {
    horizon: f64,
    step: f64,
    count: usize,
}

impl FineGrid {
    pub fn new(horizon: f64, count: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        if count == 0 {
            return Err(Error::Domain("grid needs at least one step".into()));
        }
        Ok(Self {
            horizon,
            step: horizon / count as f64,
            count,
        })
    }

    pub fn with_step(step: f64, count: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Domain(format!("step must be positive, got {step}")));
        }
        if count == 0 {
            return Err(Error::Domain("grid needs at least one step".into()));
        }
        Ok(Self {
            horizon: step * count as f64,
            step,
            count,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of steps; the grid has `count + 1` points.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn num_points(&self) -> usize {
        self.count + 1
    }

    /// Time of grid point `j`.
    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    /// Index of the grid point at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let j = (t / self.step).round();
        let idx = j as usize;
        if j >= 0.0 && idx <= self.count && (self.time(idx) - t).abs() <= 1e-9 * self.horizon.max(1.0) {
            Ok(idx)
        } else {
            Err(Error::Alignment(format!(
                "time {t} is not a grid point (step {})",
                self.step
            )))
        }
    }
}

/// A sampled fractional Brownian motion trajectory, `values[0] = 0`.
#[derive(Debug, Clone)]
pub struct FbmPath {
    pub grid: FineGrid,
    pub values: Vec<f64>,
    pub hurst: HurstParam,
    pub seed: u64,
}

impl FbmPath {
    /// Path value at grid index `j`.
    pub fn value_at(&self, j: usize) -> f64 {
        self.values[j]
    }
}

/// Covariance kernel of fBm: `0.5 (s^{2H} + t^{2H} - |t-s|^{2H})`.
pub fn fbm_covariance(s: f64, t: f64, hurst: HurstParam) -> Result<f64> {
    if s < 0.0 || t < 0.0 {
        return Err(Error::Domain(format!(
            "covariance requires nonnegative times, got ({s}, {t})"
        )));
    }
    let h2 = 2.0 * hurst.value();
    Ok(0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2)))
}

/// Autocovariance of the stationary increment sequence at lag `k`:
/// `0.5 step^{2H} (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H})`.
pub fn increment_autocovariance(k: usize, step: f64, hurst: HurstParam) -> f64 {
    let h2 = 2.0 * hurst.value();
    let k = k as f64;
    0.5 * step.powf(h2) * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Eigenvalues of the circulant extension (size `2 * count`) of the increment
/// autocovariance. Entries can dip slightly below zero from rounding; callers
/// decide how to treat them.
pub fn embedding_spectrum(count: usize, step: f64, hurst: HurstParam) -> Vec<f64> {
    let m = 2 * count;
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    for j in 0..=count {
        row.push(Complex::new(increment_autocovariance(j, step, hurst), 0.0));
    }
    for j in count + 1..m {
        row.push(row[m - j]);
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut row);
    row.into_iter().map(|z| z.re).collect()
}

/// Sample `count` stationary fBm increments with spacing `step`.
///
/// Circulant embedding consumes exactly `2 * count` standard normals from the
/// keyed stream, in a fixed order, so the output is a pure function of
/// `(hurst, grid, seed)`.
pub fn fgn_increments(hurst: HurstParam, grid: &FineGrid, seed: u64) -> Result<Vec<f64>> {
    fgn_increments_stream(hurst, grid, seed, 0)
}

/// As [`fgn_increments`] but drawing from stream `stream` of `seed`; used for
/// ensembles keyed by path index.
pub fn fgn_increments_stream(
    hurst: HurstParam,
    grid: &FineGrid,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    let n = grid.count();
    let spectrum = embedding_spectrum(n, grid.step(), hurst);
    let max_ev = spectrum.iter().cloned().fold(0.0_f64, f64::max);
    let min_ev = spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut rng = keyed_rng(seed, stream);

    if min_ev < -SPECTRUM_TOL * max_ev {
        return cholesky_increments(hurst, grid, &mut rng, min_ev);
    }

    let m = 2 * n;
    let scale = 1.0 / (m as f64).sqrt();
    let mut v: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); m];
    let ev = |k: usize| spectrum[k].max(0.0);
    let z0: f64 = rng.sample(StandardNormal);
    v[0] = Complex::new(ev(0).sqrt() * z0, 0.0);
    for k in 1..n {
        let u: f64 = rng.sample(StandardNormal);
        let w: f64 = rng.sample(StandardNormal);
        let r = (ev(k) / 2.0).sqrt();
        v[k] = Complex::new(r * u, r * w);
        v[m - k] = v[k].conj();
    }
    let zn: f64 = rng.sample(StandardNormal);
    v[n] = Complex::new(ev(n).sqrt() * zn, 0.0);

    FftPlanner::new().plan_fft_forward(m).process(&mut v);
    Ok(v[..n].iter().map(|z| z.re * scale).collect())
}

fn cholesky_increments(
    hurst: HurstParam,
    grid: &FineGrid,
    rng: &mut impl Rng,
    min_ev: f64,
) -> Result<Vec<f64>> {
    let n = grid.count();
    if n > CHOLESKY_MAX {
        return Err(Error::Numerical(format!(
            "circulant embedding spectrum has eigenvalue {min_ev} below tolerance and the grid \
             ({n} increments) exceeds the dense Cholesky fallback limit {CHOLESKY_MAX}"
        )));
    }
    let cov = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        increment_autocovariance(i.abs_diff(j), grid.step(), hurst)
    });
    let chol = nalgebra::Cholesky::new(cov).ok_or_else(|| {
        Error::Numerical(format!(
            "increment covariance is not positive definite under rounding \
             (H = {}, step = {}, {n} increments)",
            hurst.value(),
            grid.step()
        ))
    })?;
    let g = nalgebra::DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok((chol.l() * g).iter().cloned().collect())
}

/// Generate one fBm path on `grid`: cumulative sum of exact-covariance
/// increments, starting at zero.
pub fn generate_fbm(hurst: HurstParam, grid: &FineGrid, seed: u64) -> Result<FbmPath> {
    generate_fbm_stream(hurst, grid, seed, 0)
}

fn generate_fbm_stream(hurst: HurstParam, grid: &FineGrid, seed: u64, stream: u64) -> Result<FbmPath> {
    let inc = fgn_increments_stream(hurst, grid, seed, stream)?;
    let mut values = Vec::with_capacity(grid.num_points());
    values.push(0.0);
    let mut acc = 0.0;
    for g in &inc {
        acc += g;
        values.push(acc);
    }
    Ok(FbmPath {
        grid: grid.clone(),
        values,
        hurst,
        seed,
    })
}

/// Generate `paths` independent fBm paths; path `i` uses stream `i` of
/// `seed`, so the ensemble does not depend on scheduling order.
pub fn generate_ensemble(
    hurst: HurstParam,
    grid: &FineGrid,
    seed: u64,
    paths: usize,
) -> Result<Vec<FbmPath>> {
    (0..paths)
        .into_par_iter()
        .map(|i| generate_fbm_stream(hurst, grid, seed, i as u64))
        .collect()
}
