use std::fs;
use std::path::Path;

use fbmdrift::{
    downsample, estimate_theta1, estimate_theta2, generate_ensemble, generate_fbm, run_experiment_timed,
    scaling_slope, simulate_sde, theorem1_statistic, EstimateWarning, FineGrid, FracOrder,
    HurstParam, ObservationGrid, ObservationSeries,
};

use crate::config::{self, manifest_for_experiment, parse_coeff_spec, Overrides, RunManifest};
use crate::output;
use crate::{CliError, EstimateArgs, ExperimentArgs, FbmArgs, FracDerivArgs, SdeArgs};

/// Write `data` to `out` (manifest goes next to it) or to stdout.
fn emit(data: &str, out: Option<&Path>, manifest: RunManifest) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, data).map_err(|e| CliError::Io(format!("writing {path:?}: {e}")))?;
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| ".".into());
            manifest.write(&dir)?;
            Ok(())
        }
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

pub fn fbm(args: FbmArgs) -> Result<(), CliError> {
    let hurst = HurstParam::new(args.hurst).map_err(CliError::config)?;
    if args.step <= 0.0 || args.horizon <= 0.0 {
        return Err(CliError::Config(format!(
            "horizon and step must be positive, got {} and {}",
            args.horizon, args.step
        )));
    }
    let count = (args.horizon / args.step).round();
    if count < 1.0 || (count * args.step - args.horizon).abs() > 1e-9 * args.horizon {
        return Err(CliError::Config(format!(
            "step {} does not divide horizon {}",
            args.step, args.horizon
        )));
    }
    let grid = FineGrid::with_step(args.step, count as usize).map_err(CliError::config)?;
    let path = generate_fbm(hurst, &grid, args.seed).map_err(CliError::numerical)?;
    let csv = output::path_csv((0..=grid.count()).map(|j| grid.time(j)), &path.values);

    let mut manifest = RunManifest::new("fbm", args.seed);
    manifest.record("hurst", args.hurst);
    manifest.record("horizon", args.horizon);
    manifest.record("step", args.step);
    manifest.record("seed", args.seed);
    emit(&csv, args.out.as_deref(), manifest)
}

pub fn sde(args: SdeArgs) -> Result<(), CliError> {
    let hurst = HurstParam::new(args.hurst).map_err(CliError::config)?;
    let model = parse_coeff_spec(&args.coeff)?;
    let path = simulate_sde(
        args.theta,
        &model,
        args.x0,
        hurst,
        args.n,
        args.refinement,
        args.seed,
    )
    .map_err(CliError::numerical)?;
    let grid = ObservationGrid::new(args.n).map_err(CliError::config)?;
    let series = downsample(&path, grid).map_err(CliError::numerical)?;
    let csv = output::series_csv((0..series.values.len()).map(|k| grid.time(k)), &series.values);

    let mut manifest = RunManifest::new("sde", args.seed);
    manifest.record("theta", args.theta);
    manifest.record("hurst", args.hurst);
    manifest.record("n", args.n);
    manifest.record("refinement", args.refinement);
    manifest.record("seed", args.seed);
    manifest.record("x0", args.x0);
    manifest.record("coeff", &args.coeff);
    emit(&csv, args.out.as_deref(), manifest)
}

/// Parse a k,t,x observation CSV and rebuild the dyadic grid it lives on.
fn read_observations(path: &Path) -> Result<ObservationSeries, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {path:?}: {e}")))?;
    let mut values = Vec::new();
    let mut times = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && line.trim_start().starts_with(['k', 'K']) {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CliError::Config(format!(
                "{path:?}:{}: expected 3 comma-separated fields (k,t,x)",
                i + 1
            )));
        }
        let t: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{path:?}:{}: malformed time", i + 1)))?;
        let x: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{path:?}:{}: malformed value", i + 1)))?;
        times.push(t);
        values.push(x);
    }
    let intervals = values.len().saturating_sub(1);
    if intervals == 0 {
        return Err(CliError::Config(format!("{path:?}: no observations")));
    }
    // 2^{2n} observations: infer n and check the spacing matches
    let two_n = (intervals as f64).log2();
    if two_n.fract() != 0.0 || !(two_n as u32).is_multiple_of(2) {
        return Err(CliError::Config(format!(
            "{path:?}: {intervals} intervals is not 2^(2n) for integer n"
        )));
    }
    let n = two_n as u32 / 2;
    let grid = ObservationGrid::new(n).map_err(CliError::config)?;
    for (k, &t) in times.iter().enumerate() {
        if (t - grid.time(k)).abs() > 1e-9 * grid.horizon() {
            return Err(CliError::Config(format!(
                "{path:?}: observation {k} at t = {t} is off the dyadic grid (expected {})",
                grid.time(k)
            )));
        }
    }
    Ok(ObservationSeries { grid, values })
}

pub fn estimate(args: EstimateArgs) -> Result<(), CliError> {
    let obs = read_observations(&args.input)?;
    let model = parse_coeff_spec(&args.coeff)?;
    let mut results = Vec::new();
    let want_weighted = args.estimator == "weighted" || args.estimator == "both";
    let want_simple = args.estimator == "simple" || args.estimator == "both";
    if !want_weighted && !want_simple {
        return Err(CliError::Config(format!(
            "estimator must be weighted, simple or both, got '{}'",
            args.estimator
        )));
    }
    if want_weighted {
        let hurst = args.hurst.ok_or_else(|| {
            CliError::Config("--hurst is required for the weighted estimator".into())
        })?;
        let hurst = HurstParam::new(hurst).map_err(CliError::config)?;
        results.push(estimate_theta1(&obs, &model, hurst).map_err(CliError::numerical)?);
    }
    if want_simple {
        results.push(estimate_theta2(&obs, &model).map_err(CliError::numerical)?);
    }

    let mut csv = String::from("estimator,n,value,numerator,denominator\n");
    for r in &results {
        if let Some(EstimateWarning::NearZeroDiffusion { min_abs_b }) = r.warning {
            eprintln!(
                "warning: {} estimate touched |b| = {min_abs_b:.3e} < 0.01; condition (D) is \
                 likely violated and the estimate may be unstable",
                r.kind
            );
        }
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.kind,
            r.n,
            output::fmt17(r.value),
            output::fmt17(r.numerator),
            output::fmt17(r.denominator),
        ));
    }

    let mut manifest = RunManifest::new("estimate", 0);
    manifest.record("input", args.input.display());
    manifest.record("coeff", &args.coeff);
    if let Some(h) = args.hurst {
        manifest.record("hurst", h);
        manifest.record("lambda", 0.5 - h);
    }
    manifest.record("estimator", &args.estimator);
    emit(&csv, args.out.as_deref(), manifest)
}

pub fn experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("reading {:?}: {e}", args.config)))?;
    let overrides = Overrides {
        theta: args.theta,
        replicates: args.replicates,
        refinement: args.refinement,
        seed: args.seed,
        driver: args.driver.as_deref().map(config::parse_driver).transpose()?,
    };
    let (experiment_config, coeff_text) = config::parse_config(&text, &overrides)?;
    let (report, timings) = run_experiment_timed(&experiment_config).map_err(CliError::numerical)?;

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Io(format!("creating {:?}: {e}", args.out_dir)))?;
    let write = |name: &str, data: String| -> Result<(), CliError> {
        let path = args.out_dir.join(name);
        fs::write(&path, data).map_err(|e| CliError::Io(format!("writing {path:?}: {e}")))
    };
    write("report.csv", output::report_csv(&report, &timings))?;
    write("rates.csv", output::rates_csv(&report))?;
    write("estimates.csv", output::estimates_csv(&report))?;
    if args.markdown {
        write("report.md", output::report_markdown(&report))?;
    }
    manifest_for_experiment(&experiment_config, &coeff_text, args.markdown).write(&args.out_dir)?;

    let failures: usize = report.cells.values().map(|c| c.failures).sum();
    eprintln!(
        "wrote {} cells to {:?} ({failures} failed replicates)",
        report.cells.len(),
        args.out_dir
    );
    Ok(())
}

pub fn frac_deriv(args: FracDerivArgs) -> Result<(), CliError> {
    let hurst = HurstParam::new(args.hurst).map_err(CliError::config)?;
    let alpha = FracOrder::new(args.alpha, hurst).map_err(CliError::config)?;
    if args.paths == 0 {
        return Err(CliError::Config("need at least one path".into()));
    }
    let count = (args.horizon / args.step).round() as usize;
    if count == 0 || (count as f64 * args.step - args.horizon).abs() > 1e-9 * args.horizon {
        return Err(CliError::Config(format!(
            "step {} does not divide horizon {}",
            args.step, args.horizon
        )));
    }
    let grid = FineGrid::with_step(args.step, count).map_err(CliError::config)?;
    let ensemble =
        generate_ensemble(hurst, &grid, args.seed, args.paths).map_err(CliError::numerical)?;
    let stat = theorem1_statistic(&ensemble, alpha, args.gamma).map_err(CliError::numerical)?;
    let slope = scaling_slope(&ensemble[0], alpha, args.gamma, &[2, 3, 4, 5, 6])
        .map_err(CliError::numerical)?;

    println!("hurst,alpha,gamma,paths,horizon,seed,statistic,pair_count,scaling_slope");
    println!(
        "{},{},{},{},{},{},{},{},{}",
        args.hurst,
        args.alpha,
        args.gamma,
        args.paths,
        args.horizon,
        args.seed,
        output::fmt17(stat.value),
        stat.pair_count,
        output::fmt17(slope)
    );
    Ok(())
}
