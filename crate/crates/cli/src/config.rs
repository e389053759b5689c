//! Experiment config files and the run manifest.
//!
//! Configs are plain key-value TOML. Example:
//!
//! ```toml
//! theta = 2.0
//! coeff.a = "2*sin(x)+3"
//! coeff.b = "2*cos(x)+3"
//! hurst = [0.6, 0.7, 0.8, 0.9]
//! n = [3, 4, 5, 6]
//! replicates = 20
//! refinement = 8
//! seed = 42
//! ```
//!
//! `coeff = "builtin:tame"` selects a built-in pair instead of expressions.
//! Unknown keys are rejected. Optional keys and defaults: `replicates = 20`,
//! `refinement = 8`, `x0 = 0`, `seed = 0`, `estimator = "both"`,
//! `driver = "exact"`.

use std::collections::BTreeMap;

use fbmdrift::{
    CoefficientModel, DriverAmplitude, EstimatorKind, EstimatorSet, ExperimentConfig, HurstParam,
};
use serde::Serialize;

use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "theta",
    "coeff",
    "hurst",
    "n",
    "replicates",
    "refinement",
    "seed",
    "x0",
    "estimator",
    "driver",
];

/// Flag-level overrides applied on top of file values.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub theta: Option<f64>,
    pub replicates: Option<usize>,
    pub refinement: Option<usize>,
    pub seed: Option<u64>,
    pub driver: Option<DriverAmplitude>,
}

/// Parse `--coeff` style specs: `builtin:<name>` or `"a_expr ; b_expr"`
/// (a comma works as the separator too).
pub fn parse_coeff_spec(spec: &str) -> Result<CoefficientModel, CliError> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return CoefficientModel::builtin(name.trim()).map_err(CliError::config);
    }
    let sep = if spec.contains(';') { ';' } else { ',' };
    let parts: Vec<&str> = spec.splitn(2, sep).collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!(
            "coefficient spec '{spec}' must be 'builtin:<name>' or '<a expr>{sep}<b expr>'"
        )));
    }
    CoefficientModel::from_exprs(parts[0].trim(), parts[1].trim()).map_err(CliError::config)
}

fn take_float(value: &toml::Value, key: &str) -> Result<f64, CliError> {
    match value {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(CliError::Config(format!(
            "key '{key}' must be a number, got {other}"
        ))),
    }
}

fn take_int(value: &toml::Value, key: &str) -> Result<i64, CliError> {
    match value {
        toml::Value::Integer(i) => Ok(*i),
        other => Err(CliError::Config(format!(
            "key '{key}' must be an integer, got {other}"
        ))),
    }
}

fn parse_estimators(name: &str) -> Result<EstimatorSet, CliError> {
    match name {
        "both" => Ok(EstimatorSet::both()),
        "weighted" => Ok(EstimatorSet::only(EstimatorKind::Weighted)),
        "simple" => Ok(EstimatorSet::only(EstimatorKind::Simple)),
        other => Err(CliError::Config(format!(
            "estimator must be weighted, simple or both, got '{other}'"
        ))),
    }
}

pub fn parse_driver(name: &str) -> Result<DriverAmplitude, CliError> {
    match name {
        "exact" => Ok(DriverAmplitude::Exact),
        "unit-horizon" => Ok(DriverAmplitude::UnitHorizon),
        other => Err(CliError::Config(format!(
            "driver must be 'exact' or 'unit-horizon', got '{other}'"
        ))),
    }
}

/// Parse a config file and apply flag overrides; also returns the coefficient
/// spec text for the manifest.
pub fn parse_config(src: &str, overrides: &Overrides) -> Result<(ExperimentConfig, String), CliError> {
    let table: toml::Table = src
        .parse()
        .map_err(|e| CliError::Config(format!("malformed config: {e}")))?;

    for key in table.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!(
                "unknown key '{key}' (known keys: {})",
                KNOWN_KEYS.join(", ")
            )));
        }
    }
    let missing: Vec<&str> = ["theta", "coeff", "hurst", "n"]
        .into_iter()
        .filter(|k| !table.contains_key(*k))
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Config(format!(
            "missing required keys: {}",
            missing.join(", ")
        )));
    }

    let (model, coeff_text) = match &table["coeff"] {
        toml::Value::String(s) => (parse_coeff_spec(s)?, s.clone()),
        toml::Value::Table(t) => {
            for key in t.keys() {
                if key != "a" && key != "b" {
                    return Err(CliError::Config(format!("unknown key 'coeff.{key}'")));
                }
            }
            let a = t
                .get("a")
                .and_then(|v| v.as_str())
                .ok_or_else(|| CliError::Config("coeff.a must be an expression string".into()))?;
            let b = t
                .get("b")
                .and_then(|v| v.as_str())
                .ok_or_else(|| CliError::Config("coeff.b must be an expression string".into()))?;
            (
                CoefficientModel::from_exprs(a, b).map_err(CliError::config)?,
                format!("a={a}; b={b}"),
            )
        }
        other => {
            return Err(CliError::Config(format!(
                "key 'coeff' must be a string or a table, got {other}"
            )))
        }
    };

    let mut config = ExperimentConfig::new(take_float(&table["theta"], "theta")?, model);

    let hurst = table["hurst"]
        .as_array()
        .ok_or_else(|| CliError::Config("key 'hurst' must be an array".into()))?;
    for v in hurst {
        let value = take_float(v, "hurst")?;
        let h = HurstParam::new(value).map_err(CliError::config)?;
        if !h.is_long_range() {
            return Err(CliError::Config(format!(
                "key 'hurst': estimation requires H in (1/2, 1), got {value}"
            )));
        }
        config.hurst_list.push(h);
    }
    let levels = table["n"]
        .as_array()
        .ok_or_else(|| CliError::Config("key 'n' must be an array".into()))?;
    for v in levels {
        let n = take_int(v, "n")?;
        if !(1..=12).contains(&n) {
            return Err(CliError::Config(format!(
                "key 'n': observation level must lie in 1..=12, got {n}"
            )));
        }
        config.n_list.push(n as u32);
    }

    if let Some(v) = table.get("replicates") {
        config.replicates = take_int(v, "replicates")? as usize;
    }
    if let Some(v) = table.get("refinement") {
        config.refinement = take_int(v, "refinement")? as usize;
    }
    if let Some(v) = table.get("seed") {
        config.base_seed = take_int(v, "seed")? as u64;
    }
    if let Some(v) = table.get("x0") {
        config.x0 = take_float(v, "x0")?;
    }
    if let Some(v) = table.get("estimator") {
        let name = v
            .as_str()
            .ok_or_else(|| CliError::Config("key 'estimator' must be a string".into()))?;
        config.estimators = parse_estimators(name)?;
    }
    if let Some(v) = table.get("driver") {
        let name = v
            .as_str()
            .ok_or_else(|| CliError::Config("key 'driver' must be a string".into()))?;
        config.driver = parse_driver(name)?;
    }

    if let Some(theta) = overrides.theta {
        config.theta = theta;
    }
    if let Some(r) = overrides.replicates {
        config.replicates = r;
    }
    if let Some(r) = overrides.refinement {
        config.refinement = r;
    }
    if let Some(s) = overrides.seed {
        config.base_seed = s;
    }
    if let Some(d) = overrides.driver {
        config.driver = d;
    }

    config.validate().map_err(CliError::config)?;
    Ok((config, coeff_text))
}

/// Written alongside every output file; replaying the resolved config
/// reproduces the outputs bit-identically (timestamp excluded).
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub resolved_config: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            resolved_config: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.resolved_config.insert(key.to_string(), value.to_string());
    }

    pub fn write(&self, dir: &std::path::Path) -> Result<std::path::PathBuf, CliError> {
        let path = dir.join("run_manifest.json");
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("serializing manifest: {e}")))?;
        std::fs::write(&path, json).map_err(|e| CliError::Io(format!("writing {path:?}: {e}")))?;
        Ok(path)
    }
}

/// Record the resolved experiment config into a manifest.
pub fn manifest_for_experiment(
    config: &ExperimentConfig,
    coeff_text: &str,
    markdown: bool,
) -> RunManifest {
    let mut manifest = RunManifest::new("experiment", config.base_seed);
    manifest.record("theta", config.theta);
    manifest.record("coeff", coeff_text);
    manifest.record(
        "hurst",
        format!(
            "[{}]",
            config
                .hurst_list
                .iter()
                .map(|h| h.value().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    if config.estimators.weighted {
        // the weighted estimator's lambda = 1/2 - H per Hurst value
        manifest.record(
            "lambda",
            format!(
                "[{}]",
                config
                    .hurst_list
                    .iter()
                    .map(|h| (0.5 - h.value()).to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        );
    }
    manifest.record(
        "n",
        format!(
            "[{}]",
            config
                .n_list
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    manifest.record("replicates", config.replicates);
    manifest.record("refinement", config.refinement);
    manifest.record("seed", config.base_seed);
    manifest.record("x0", config.x0);
    manifest.record(
        "estimator",
        match (config.estimators.weighted, config.estimators.simple) {
            (true, true) => "both",
            (true, false) => "weighted",
            _ => "simple",
        },
    );
    manifest.record(
        "driver",
        match config.driver {
            DriverAmplitude::Exact => "exact",
            DriverAmplitude::UnitHorizon => "unit-horizon",
        },
    );
    manifest.record("markdown", markdown);
    manifest
}
