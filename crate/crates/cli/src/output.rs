//! CSV and Markdown emission. All floating-point values print with 17
//! significant digits so files round-trip bit-exactly; the Markdown table
//! rounds to 3 decimals for display.

use std::fmt::Write as _;

use fbmdrift::{CellKey, EstimatorKind, ExperimentReport, TimingReport};

/// 17 significant digits; `parse::<f64>` recovers the exact bits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `t,value` rows of a sampled path.
pub fn path_csv(times: impl Iterator<Item = f64>, values: &[f64]) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in times.zip(values) {
        let _ = writeln!(out, "{},{}", fmt17(t), fmt17(*v));
    }
    out
}

/// `k,t,x` rows of an observation or solution series.
pub fn series_csv(times: impl Iterator<Item = f64>, values: &[f64]) -> String {
    let mut out = String::from("k,t,x\n");
    for (k, (t, v)) in times.zip(values).enumerate() {
        let _ = writeln!(out, "{k},{},{}", fmt17(t), fmt17(*v));
    }
    out
}

/// Aggregate cell table: one row per (H, n, estimator).
pub fn report_csv(report: &ExperimentReport, timings: &TimingReport) -> String {
    let mut out = String::from("H,n,estimator,mean_rel_error,median_rel_error,failures,wall_time_ms\n");
    for (key, cell) in &report.cells {
        let ms = timings.get(key).copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.4}",
            cell.hurst,
            key.n,
            key.estimator,
            fmt17(cell.mean_rel_error),
            fmt17(cell.median_rel_error),
            cell.failures,
            ms
        );
    }
    out
}

/// Per-replicate estimates: one row per (H, n, estimator, replicate).
pub fn estimates_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("H,n,estimator,replicate,estimate,rel_error\n");
    for (key, cell) in &report.cells {
        for (r, (est, err)) in cell.estimates.iter().zip(&cell.rel_errors).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{r},{},{}",
                cell.hurst,
                key.n,
                key.estimator,
                fmt17(*est),
                fmt17(*err)
            );
        }
    }
    out
}

/// Rate fits: one row per (H, estimator).
pub fn rates_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("H,estimator,slope,intercept\n");
    for ((h_index, kind), fit) in &report.rate_fits {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            report.hurst_values[*h_index],
            kind,
            fmt17(fit.slope),
            fmt17(fit.intercept)
        );
    }
    out
}

/// Markdown table shaped like the published error tables: rows indexed by
/// n, a (d1, d2) column pair per Hurst value, 3-decimal display.
pub fn report_markdown(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "| n |");
    for h in &report.hurst_values {
        let _ = write!(out, " H={h} d1 | H={h} d2 |");
    }
    out.push('\n');
    let _ = write!(out, "|---|");
    for _ in &report.hurst_values {
        let _ = write!(out, "---|---|");
    }
    out.push('\n');
    for &n in &report.n_values {
        let _ = write!(out, "| {n} |");
        for h_index in 0..report.hurst_values.len() {
            for kind in [EstimatorKind::Weighted, EstimatorKind::Simple] {
                let key = CellKey { h_index, n, estimator: kind };
                match report.cells.get(&key) {
                    Some(cell) => {
                        let _ = write!(out, " {:.3} |", cell.mean_rel_error);
                    }
                    None => {
                        let _ = write!(out, " - |");
                    }
                }
            }
        }
        out.push('\n');
    }
    out
}
