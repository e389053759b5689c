//! End-to-end tests of the `fbmdrift` binary: exit codes, file formats and
//! reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fbmdrift"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn workspace_config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn fbm_writes_csv_and_manifest_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let r = run(&[
            "fbm",
            "--hurst",
            "0.7",
            "--horizon",
            "4",
            "--step",
            "0.25",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", stderr(&r));
    }
    let a = std::fs::read_to_string(&out_a).unwrap();
    let b = std::fs::read_to_string(&out_b).unwrap();
    assert_eq!(a, b, "same seed must give byte-identical output");
    assert_eq!(a.lines().next().unwrap(), "t,value");
    assert_eq!(a.lines().count(), 18); // header + 17 grid points
    assert!(dir.path().join("run_manifest.json").exists());

    // 17-significant-digit round trip
    for line in a.lines().skip(1) {
        for field in line.split(',') {
            let x: f64 = field.parse().unwrap();
            assert_eq!(format!("{x:.16e}"), field);
        }
    }
}

#[test]
fn sde_estimate_pipeline_recovers_noise_free_drift() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    let r = run(&[
        "sde",
        "--theta",
        "2",
        "--hurst",
        "0.7",
        "--n",
        "2",
        "--refinement",
        "4",
        "--seed",
        "3",
        "--coeff",
        "builtin:noiseless",
        "--out",
        obs.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", stderr(&r));

    // noiseless builtin simulates with b = 0; estimate against unit b
    let est = run(&[
        "estimate",
        "--input",
        obs.to_str().unwrap(),
        "--coeff",
        "1;1",
        "--hurst",
        "0.7",
        "--estimator",
        "both",
    ]);
    assert!(est.status.success(), "{}", stderr(&est));
    let text = stdout(&est);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "estimator,n,value,numerator,denominator"
    );
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], "2");
        let value: f64 = fields[2].parse().unwrap();
        assert!((value - 2.0).abs() < 1e-12, "{line}");
    }
}

#[test]
fn estimate_requires_hurst_for_the_weighted_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    std::fs::write(&obs, "k,t,x\n0,0.0,0.0\n1,0.5,1.0\n2,1.0,2.0\n3,1.5,3.0\n4,2.0,4.0\n").unwrap();
    let r = run(&[
        "estimate",
        "--input",
        obs.to_str().unwrap(),
        "--coeff",
        "1;1",
        "--estimator",
        "weighted",
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("--hurst"));
}

#[test]
fn estimate_rejects_non_dyadic_observation_counts() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    std::fs::write(&obs, "k,t,x\n0,0.0,0.0\n1,0.5,1.0\n2,1.0,2.0\n").unwrap();
    let r = run(&[
        "estimate",
        "--input",
        obs.to_str().unwrap(),
        "--coeff",
        "1;1",
        "--estimator",
        "simple",
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("2^(2n)"));
}

#[test]
fn vanishing_diffusion_exits_with_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.csv");
    std::fs::write(&obs, "k,t,x\n0,0.0,0.0\n1,0.5,1.0\n2,1.0,2.0\n3,1.5,3.0\n4,2.0,4.0\n").unwrap();
    let r = run(&[
        "estimate",
        "--input",
        obs.to_str().unwrap(),
        "--coeff",
        "1;0",
        "--estimator",
        "simple",
    ]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn empty_experiment_config_lists_required_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "").unwrap();
    let r = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let err = stderr(&r);
    for key in ["theta", "coeff", "hurst", "n"] {
        assert!(err.contains(key), "missing '{key}' in: {err}");
    }
}

#[test]
fn unknown_config_keys_are_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "theta = 2.0\ncoeff = \"builtin:tame\"\nhurst = [0.7]\nn = [2]\nbogus = 1\n",
    )
    .unwrap();
    let r = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("bogus"));
}

#[test]
fn out_of_range_hurst_is_rejected_with_the_key_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.toml");
    std::fs::write(
        &cfg,
        "theta = 2.0\ncoeff = \"builtin:tame\"\nhurst = [0.4]\nn = [2]\n",
    )
    .unwrap();
    let r = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(stderr(&r).contains("hurst"));
}

#[test]
fn shipped_reference_config_round_trips() {
    // The shipped config must parse to the exact setup the acceptance suite
    // runs: theta 2, tame coefficients, H 0.6..0.9, n 3..6, 20 replicates,
    // refinement 8, seed 42, both estimators, exact driver.
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let r = run(&[
        "experiment",
        "--config",
        &workspace_config("table1.toml"),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--replicates",
        "2",
        "--markdown",
    ]);
    assert!(r.status.success(), "{}", stderr(&r));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("run_manifest.json")).unwrap())
            .unwrap();
    let cfg = &manifest["resolved_config"];
    assert_eq!(cfg["theta"], "2");
    assert_eq!(cfg["hurst"], "[0.6, 0.7, 0.8, 0.9]");
    assert_eq!(cfg["n"], "[3, 4, 5, 6]");
    assert_eq!(cfg["refinement"], "8");
    assert_eq!(cfg["seed"], "42");
    assert_eq!(cfg["estimator"], "both");
    assert_eq!(cfg["driver"], "exact");
    assert_eq!(cfg["replicates"], "2"); // flag override wins
    assert_eq!(
        cfg["lambda"],
        "[-0.09999999999999998, -0.19999999999999996, -0.30000000000000004, -0.4]"
    );

    // markdown table: header + separator + one row per n, 8 error columns
    let md = std::fs::read_to_string(out_dir.join("report.md")).unwrap();
    let lines: Vec<&str> = md.lines().collect();
    assert_eq!(lines.len(), 2 + 4);
    assert_eq!(lines[0].matches('|').count(), 10);

    // report.csv numbers round-trip at 17 significant digits
    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let mean_field = row.split(',').nth(3).unwrap();
    let x: f64 = mean_field.parse().unwrap();
    assert_eq!(format!("{x:.16e}"), mean_field);
}

#[test]
fn experiment_outputs_are_reproducible_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(
        &cfg,
        "theta = 2.0\ncoeff = \"builtin:tame\"\nhurst = [0.7]\nn = [2, 3]\nreplicates = 4\nrefinement = 2\nseed = 11\n",
    )
    .unwrap();
    let mut reports = Vec::new();
    for (name, threads) in [("r1", "1"), ("r2", "3")] {
        let out_dir = dir.path().join(name);
        let r = bin()
            .env("FBMDRIFT_THREADS", threads)
            .args([
                "experiment",
                "--config",
                cfg.to_str().unwrap(),
                "--out-dir",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(r.status.success(), "{}", stderr(&r));
        let mut csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
        // wall-time column is machine noise; strip it before comparing
        csv = csv
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
            .join("\n");
        reports.push(csv);
        let estimates = std::fs::read_to_string(out_dir.join("estimates.csv")).unwrap();
        reports.push(estimates);
    }
    assert_eq!(reports[0], reports[2], "report.csv differs across thread counts");
    assert_eq!(reports[1], reports[3], "estimates.csv differs across thread counts");
}

#[test]
fn verify_frac_deriv_emits_one_csv_row() {
    let r = run(&[
        "verify",
        "frac-deriv",
        "--hurst",
        "0.7",
        "--alpha",
        "0.35",
        "--gamma",
        "0.6",
        "--paths",
        "5",
        "--horizon",
        "4",
        "--seed",
        "2",
    ]);
    assert!(r.status.success(), "{}", stderr(&r));
    let text = stdout(&r);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "hurst,alpha,gamma,paths,horizon,seed,statistic,pair_count,scaling_slope"
    );
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), 9);
    let stat: f64 = fields[6].parse().unwrap();
    assert!(stat.is_finite() && stat > 0.0);
}

#[test]
fn alpha_outside_the_admissible_window_is_a_config_error() {
    let r = run(&[
        "verify",
        "frac-deriv",
        "--hurst",
        "0.7",
        "--alpha",
        "0.25",
        "--paths",
        "2",
        "--horizon",
        "4",
    ]);
    assert_eq!(r.status.code(), Some(2));
}
