//! JSON run configuration shared by every subcommand.

use std::path::Path;

use mlct_learn::{LpdShape, TrainConfig};
use mlct_phantom::DatasetConfig;
use mlct_radon::{Restriction, Window};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Uniform projection angles over `[0, pi)`.
    pub angles: usize,
    /// Restriction applied by `restrict` and assumed by `train`/`eval`.
    pub restriction: Option<Restriction>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { angles: 60, restriction: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconConfig {
    pub window: Window,
    pub tikhonov_lambda: f64,
    pub tikhonov_iterations: usize,
    pub tv_lambda: f64,
    pub tv_iterations: usize,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            window: Window::None,
            tikhonov_lambda: 0.05,
            tikhonov_iterations: 500,
            tv_lambda: mlct_recon::TV_DEFAULT_LAMBDA,
            tv_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub dataset: DatasetConfig,
    pub geometry: GeometryConfig,
    pub noise: f64,
    pub recon: ReconConfig,
    pub lpd: LpdShape,
    pub train: TrainConfig,
    /// Relative threshold of the gradient wavefront estimator.
    pub estimate_rel: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            geometry: GeometryConfig::default(),
            noise: 0.05,
            recon: ReconConfig::default(),
            lpd: LpdShape::default(),
            train: TrainConfig::default(),
            estimate_rel: 0.25,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }
}
