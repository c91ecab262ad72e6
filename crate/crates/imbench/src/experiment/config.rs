//! Experiment configuration file (TOML).

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::classifiers::ClassifierKind;
use crate::data::SynthFamily;
use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::params::ParamValue;
use crate::strategies::StrategyKind;

use super::space::{ParamRange, SearchSpace};

fn default_repetitions() -> usize {
    3
}
fn default_inner_folds() -> usize {
    3
}
fn default_candidates() -> usize {
    10
}
fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_inner_folds")]
    pub inner_folds: usize,
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub output_path: PathBuf,
    pub rates: Vec<f64>,
    pub metrics: Vec<String>,
    pub datasets: Vec<DatasetConfig>,
    pub solutions: Vec<SolutionConfig>,
}

/// Either a CSV on disk (`path` + `label`) or a synthetic spec (`family`
/// + generator parameters). `name` keys results and must be unique.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    pub path: Option<PathBuf>,
    pub label: Option<String>,
    pub positive_label: Option<String>,
    pub family: Option<String>,
    pub n: Option<usize>,
    pub dim: Option<usize>,
    pub overlap: Option<f64>,
    pub rate: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionConfig {
    pub strategy: String,
    pub classifier: Option<String>,
    /// Fixed SMOTE neighbor count (not searched).
    pub smote_k: Option<usize>,
    /// Per-parameter overrides of the default search space.
    #[serde(default)]
    pub space: std::collections::BTreeMap<String, SpaceOverride>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceOverride {
    UniformInt([i64; 2]),
    LogUniformInt([i64; 2]),
    LogUniform([f64; 2]),
    Choice(Vec<ParamValue>),
}

impl SpaceOverride {
    pub fn to_range(&self) -> ParamRange {
        match self {
            SpaceOverride::UniformInt([lo, hi]) => ParamRange::UniformInt { lo: *lo, hi: *hi },
            SpaceOverride::LogUniformInt([lo, hi]) => {
                ParamRange::LogUniformInt { lo: *lo, hi: *hi }
            }
            SpaceOverride::LogUniform([lo, hi]) => ParamRange::LogUniform { lo: *lo, hi: *hi },
            SpaceOverride::Choice(values) => ParamRange::Choice(values.clone()),
        }
    }
}

impl SolutionConfig {
    pub fn strategy_kind(&self) -> Result<StrategyKind> {
        StrategyKind::from_str(&self.strategy)
    }

    pub fn classifier_kind(&self) -> Result<ClassifierKind> {
        match (&self.classifier, self.strategy_kind()?) {
            (_, StrategyKind::Rusboost) => Ok(ClassifierKind::Cart),
            (Some(c), _) => ClassifierKind::from_str(c),
            (None, s) => Err(Error::InvalidArgument(format!(
                "solution '{s}' needs a classifier"
            ))),
        }
    }

    pub fn apply_space_overrides(&self, mut space: SearchSpace) -> SearchSpace {
        for (name, over) in &self.space {
            space.insert(name.clone(), over.to_range());
        }
        space
    }
}

/// Parse and validate a config file. Dataset paths are checked up front so
/// a typo fails before any training starts.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let config: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    validate(&config, path)?;
    Ok(config)
}

fn config_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn validate(config: &ExperimentConfig, path: &Path) -> Result<()> {
    if config.repetitions == 0 || config.candidates == 0 {
        return Err(config_err(
            path,
            "repetitions and candidates must be positive",
        ));
    }
    if config.inner_folds < 2 {
        return Err(config_err(path, "inner_folds must be at least 2"));
    }
    if !(config.test_fraction > 0.0 && config.test_fraction < 1.0) {
        return Err(config_err(path, "test_fraction must be in (0,1)"));
    }
    if config.rates.is_empty() || config.datasets.is_empty() || config.solutions.is_empty() {
        return Err(config_err(
            path,
            "rates, datasets, and solutions must be non-empty",
        ));
    }
    for r in &config.rates {
        if !(*r > 0.0 && *r <= 0.5) {
            return Err(config_err(path, format!("rate {r} outside (0, 0.5]")));
        }
    }
    for m in &config.metrics {
        MetricKind::from_str(m).map_err(|e| config_err(path, e.to_string()))?;
    }
    if config.metrics.is_empty() {
        return Err(config_err(path, "metrics must be non-empty"));
    }

    let mut names = std::collections::BTreeSet::new();
    let base = path.parent().unwrap_or(Path::new("."));
    for ds in &config.datasets {
        if !names.insert(&ds.name) {
            return Err(config_err(
                path,
                format!("duplicate dataset name '{}'", ds.name),
            ));
        }
        // names key the results CSV rows
        if ds.name.is_empty() || ds.name.contains([',', '\n', '\x1f']) {
            return Err(config_err(
                path,
                format!(
                    "dataset name '{}' must be non-empty without commas",
                    ds.name
                ),
            ));
        }
        match (&ds.path, &ds.family) {
            (Some(p), None) => {
                if ds.label.is_none() {
                    return Err(config_err(
                        path,
                        format!("dataset '{}' needs a label column", ds.name),
                    ));
                }
                let resolved = resolve_path(base, p);
                if !resolved.exists() {
                    return Err(config_err(
                        path,
                        format!(
                            "dataset '{}': file '{}' not found",
                            ds.name,
                            resolved.display()
                        ),
                    ));
                }
            }
            (None, Some(f)) => {
                SynthFamily::from_str(f).map_err(|e| config_err(path, e.to_string()))?;
                if ds.n.is_none() || ds.dim.is_none() || ds.rate.is_none() {
                    return Err(config_err(
                        path,
                        format!("synthetic dataset '{}' needs n, dim, and rate", ds.name),
                    ));
                }
            }
            _ => {
                return Err(config_err(
                    path,
                    format!("dataset '{}' must set exactly one of path/family", ds.name),
                ));
            }
        }
    }
    for sol in &config.solutions {
        let strategy = sol
            .strategy_kind()
            .map_err(|e| config_err(path, e.to_string()))?;
        if strategy.uses_base_classifier() && sol.classifier.is_none() {
            return Err(config_err(
                path,
                format!("solution '{}' needs a classifier", sol.strategy),
            ));
        }
        sol.classifier_kind()
            .map_err(|e| config_err(path, e.to_string()))?;
    }
    Ok(())
}

/// Paths in a config resolve relative to the config file's directory.
pub fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
