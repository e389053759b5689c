//! The two discrete-observation drift estimators.
//!
//! With observations `X_{t_k}` on the dyadic design `t_k = k 2^{-n}`,
//! `k = 0..=2^{2n}`, and `lambda = 1/2 - H`:
//!
//! $$ \hat\theta_n^{(1)} = \frac{\sum_{k=1}^{2^{2n}-1} t_k^\lambda (2^n-t_k)^\lambda\,
//!    b^{-1}(X_{t_{k-1}}) (X_{t_k}-X_{t_{k-1}})}{\sum_{k=1}^{2^{2n}-1}
//!    t_k^\lambda (2^n-t_k)^\lambda\, b^{-1}(X_{t_{k-1}}) a(X_{t_{k-1}})\, 2^{-n}} $$
//!
//! and the unweighted variant `theta2` (a discretized MLE shape) with all
//! weights equal to one. Both sums stop at `k = 2^{2n} - 1`: the endpoint
//! weight `(2^n - t_k)^lambda` is singular there for `lambda < 0`, so the
//! final increment is unused.
//!
//! Sums run in ascending `k` with compensated summation; weights are
//! evaluated in log space for `lambda < 0` so endpoint factors neither
//! overflow nor lose digits.

use crate::error::{Error, Result};
use crate::fbm::HurstParam;
use crate::sde::{CoefficientModel, ObservationSeries};
use crate::stats::KahanSum;

/// Which estimator produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EstimatorKind {
    /// Beta-weighted estimator; requires knowing H through `lambda = 1/2 - H`.
    Weighted,
    /// Unweighted discretized-MLE estimator.
    Simple,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorKind::Weighted => write!(f, "weighted"),
            EstimatorKind::Simple => write!(f, "simple"),
        }
    }
}

/// Attached when the estimate touched nearly-degenerate diffusion values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateWarning {
    NearZeroDiffusion { min_abs_b: f64 },
}

/// A drift estimate with its raw numerator and denominator.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub kind: EstimatorKind,
    pub value: f64,
    pub n: u32,
    pub numerator: f64,
    pub denominator: f64,
    pub hurst_used: Option<HurstParam>,
    pub warning: Option<EstimateWarning>,
}

/// Numerator, denominator and minimum touched `|b|` of the weighted-sum
/// kernel shared by both estimators: `theta1` uses the Beta weights at
/// `lambda = 1/2 - H`, `theta2` the constant weight 1. With `lambda = 0`
/// the two coincide bit for bit.
pub fn weighted_kernel(
    obs: &ObservationSeries,
    model: &CoefficientModel,
    lambda: f64,
) -> Result<(f64, f64, f64)> {
    let horizon = obs.grid.horizon();
    let dt = obs.grid.spacing();
    weighted_estimate(obs, model, move |k: usize| {
        if lambda == 0.0 {
            1.0
        } else {
            let t = k as f64 * dt;
            (lambda * (t.ln() + (horizon - t).ln())).exp()
        }
    })
}

fn weighted_estimate<W: Fn(usize) -> f64>(
    obs: &ObservationSeries,
    model: &CoefficientModel,
    weight: W,
) -> Result<(f64, f64, f64)> {
    let dt = obs.grid.spacing();
    let last = obs.grid.num_intervals(); // sums stop one short of this index
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    let mut min_abs_b = f64::INFINITY;
    for k in 1..last {
        let x_prev = obs.values[k - 1];
        let b = model.b(x_prev);
        if b == 0.0 {
            return Err(Error::ZeroDiffusion { k, x: x_prev });
        }
        min_abs_b = min_abs_b.min(b.abs());
        let w_binv = weight(k) / b;
        num.add(w_binv * (obs.values[k] - x_prev));
        den.add(w_binv * model.a(x_prev) * dt);
    }
    let (num, den) = (num.value(), den.value());
    if !num.is_finite() || !den.is_finite() {
        return Err(Error::Numerical(format!(
            "estimator sums are not finite (numerator {num}, denominator {den})"
        )));
    }
    if den == 0.0 {
        return Err(Error::DegenerateEstimate { denominator: den });
    }
    Ok((num, den, min_abs_b))
}

fn warn_if_degenerate(min_abs_b: f64) -> Option<EstimateWarning> {
    (min_abs_b < 0.01).then_some(EstimateWarning::NearZeroDiffusion { min_abs_b })
}

/// Beta-weighted estimator; `H` enters through `lambda = 1/2 - H`.
pub fn estimate_theta1(
    obs: &ObservationSeries,
    model: &CoefficientModel,
    hurst: HurstParam,
) -> Result<EstimateResult> {
    if !hurst.is_long_range() {
        return Err(Error::Domain(format!(
            "the weighted estimator requires H in (1/2, 1), got {}",
            hurst.value()
        )));
    }
    let lambda = 0.5 - hurst.value();
    let (num, den, min_abs_b) = weighted_kernel(obs, model, lambda)?;
    Ok(EstimateResult {
        kind: EstimatorKind::Weighted,
        value: num / den,
        n: obs.grid.level(),
        numerator: num,
        denominator: den,
        hurst_used: Some(hurst),
        warning: warn_if_degenerate(min_abs_b),
    })
}

/// Unweighted estimator; does not involve H.
pub fn estimate_theta2(obs: &ObservationSeries, model: &CoefficientModel) -> Result<EstimateResult> {
    let (num, den, min_abs_b) = weighted_kernel(obs, model, 0.0)?;
    Ok(EstimateResult {
        kind: EstimatorKind::Simple,
        value: num / den,
        n: obs.grid.level(),
        numerator: num,
        denominator: den,
        hurst_used: None,
        warning: warn_if_degenerate(min_abs_b),
    })
}

/// Riemann sum of the Beta-weight normalizer:
/// `gamma_n = sum_{k=1}^{2^{2n}-1} (k/2^{2n})^lambda (1 - k/2^{2n})^lambda 2^{-2n}`,
/// which converges to `B(1 + lambda, 1 + lambda)`.
pub fn beta_weight_sum(n: u32, lambda: f64) -> Result<f64> {
    if lambda <= -1.0 {
        return Err(Error::Domain(format!(
            "weights diverge: lambda must exceed -1, got {lambda}"
        )));
    }
    if n == 0 || n > 15 {
        return Err(Error::Domain(format!("n must lie in 1..=15, got {n}")));
    }
    let total = 1u64 << (2 * n);
    let dt = 1.0 / total as f64;
    let mut sum = KahanSum::new();
    for k in 1..total {
        let x = k as f64 * dt;
        sum.add(x.powf(lambda) * (1.0 - x).powf(lambda) * dt);
    }
    Ok(sum.value())
}
