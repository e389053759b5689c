//! Benchmark-only crate; see the `benches/` targets.

use fbmdrift::{
    downsample, simulate_sde, CoefficientModel, HurstParam, ObservationGrid, ObservationSeries,
};

/// One simulated observation series for benchmarking the estimators.
pub fn bench_observations(n: u32) -> (ObservationSeries, CoefficientModel, HurstParam) {
    let hurst = HurstParam::new(0.7).unwrap();
    let model = CoefficientModel::builtin("tame").unwrap();
    let path = simulate_sde(2.0, &model, 0.0, hurst, n, 8, 42).unwrap();
    let obs = downsample(&path, ObservationGrid::new(n).unwrap()).unwrap();
    (obs, model, hurst)
}
