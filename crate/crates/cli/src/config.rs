//! Flat TOML settings file. Every key is optional; command-line flags and `P53QPN_*`
//! environment variables take precedence over it.

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use p53qpn::qpn::Optimizer;
use serde::Deserialize;

use crate::UsageError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub utr_offset: Option<i64>,
    pub gc_threshold: Option<f64>,
    pub match_score: Option<i32>,
    pub mismatch: Option<i32>,
    pub gap: Option<i32>,

    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
    pub max_epochs: Option<usize>,
    pub min_error_improvement: Option<f64>,
    pub denom_floor: Option<f64>,
    pub seed: Option<u64>,
    pub init_range: Option<f64>,
    pub optimizer: Option<String>,
    pub hidden: Option<usize>,

    pub train_fraction: Option<f64>,
    pub validation_fraction: Option<f64>,
    pub test_fraction: Option<f64>,
    pub drop_file_no: Option<bool>,

    pub data: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub normal: Option<PathBuf>,
    pub patient: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config file {}: {e}", path.display())))?;
        let config: FileConfig =
            toml::from_str(&text).map_err(|e| UsageError(format!("invalid config file {}: {e}", path.display())))?;
        if let Some(name) = &config.optimizer {
            parse_optimizer(name)?;
        }
        Ok(config)
    }
}

pub fn parse_optimizer(name: &str) -> Result<Optimizer> {
    match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
        "quickprop" => Ok(Optimizer::Quickprop),
        "gradient_descent" | "gd" => Ok(Optimizer::GradientDescent),
        other => {
            Err(UsageError(format!("unknown optimizer '{other}' (expected quickprop or gradient_descent)")).into())
        }
    }
}

/// First of flag/env value, config value, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn require_path(flag: Option<PathBuf>, file: Option<PathBuf>, name: &str) -> Result<PathBuf> {
    match flag.or(file) {
        Some(p) => Ok(p),
        None => bail!(UsageError(format!(
            "--{name} is required (flag, P53QPN_{} or config key)",
            name.to_ascii_uppercase().replace('-', "_")
        ))),
    }
}

pub fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| UsageError(format!("cannot open {}: {e}", path.display())).into())
}
