//! Experiment configuration.
//!
//! TOML with four optional tables; every key has a default, unknown keys
//! are rejected with their full path:
//!
//! ```toml
//! [network]            # any NetworkConfig field
//! lambda_d = 1.0
//! theta = 1.0
//! rounds = 100
//!
//! [task]
//! kind = "quadratic"   # or "logistic"
//! l0 = 0.5
//! sigma2 = 1.0
//!
//! [run]
//! scheme = "digital"   # or "analog"
//! mobility = "low"     # or "high"
//! mode = "analytic-matched"
//! paths = 10
//! seed_base = 0
//!
//! [sweep]
//! parameter = "theta"
//! values = [0.5, 1.0, 2.0, 4.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::{Mobility, Scheme};
use crate::error::{FeelError, Result};
use crate::learning::{LearningTask, LogisticParams, LogisticTask, QuadraticTask};
use crate::rng::rng_from_seed;
use crate::simulator::{trial_seed, InterferenceMode, RunOptions};
use crate::NetworkConfig;

/// Network fields that a sweep may vary.
pub const SWEEPABLE: &[&str] = &[
    "lambda_d", "radius", "subcarriers", "bandwidth", "theta", "alpha", "power", "g_th", "dim",
    "bits", "t_cmp", "t_bc", "delta", "epsilon0", "rounds",
];

const INTEGER_FIELDS: &[&str] = &["subcarriers", "dim", "bits", "rounds"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub task: TaskConfig,
    pub run: RunConfig,
    pub sweep: Option<SweepConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TaskConfig {
    Quadratic(QuadraticConfig),
    Logistic(LogisticConfig),
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self::Quadratic(QuadraticConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadraticConfig {
    pub l0: f64,
    pub sigma2: f64,
    /// Seed of the standard-normal optimum.
    pub optimum_seed: u64,
}

impl Default for QuadraticConfig {
    fn default() -> Self {
        Self {
            l0: 0.5,
            sigma2: 1.0,
            optimum_seed: 0,
        }
    }
}

/// Logistic task parameters; the dimension comes from `network.dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    pub samples_per_device: usize,
    pub class_separation: f64,
    pub calibration_devices: usize,
    pub test_samples: usize,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        let p = LogisticParams::default();
        Self {
            samples_per_device: p.samples_per_device,
            class_separation: p.class_separation,
            calibration_devices: p.calibration_devices,
            test_samples: p.test_samples,
            init_scale: p.init_scale,
            seed: p.seed,
        }
    }
}

impl TaskConfig {
    pub fn build(&self, dim: usize) -> Result<Box<dyn LearningTask>> {
        match self {
            Self::Quadratic(q) => {
                let mut rng = rng_from_seed(q.optimum_seed);
                Ok(Box::new(QuadraticTask::random(dim, q.l0, q.sigma2, &mut rng)?))
            }
            Self::Logistic(l) => Ok(Box::new(LogisticTask::new(LogisticParams {
                dim,
                samples_per_device: l.samples_per_device,
                class_separation: l.class_separation,
                calibration_devices: l.calibration_devices,
                test_samples: l.test_samples,
                init_scale: l.init_scale,
                seed: l.seed,
            })?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub mobility: Mobility,
    pub mode: InterferenceMode,
    /// Number of independent typical-cell realizations.
    pub paths: usize,
    pub seed_base: u64,
    /// Explicit trial seeds; the first `paths` are used.
    pub seeds: Option<Vec<u64>>,
    pub freeze_channel: bool,
    pub window_half_width: f64,
    /// Spatially averaged accuracy that defines the latency in sweeps.
    pub accuracy_target: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let o = RunOptions::default();
        Self {
            scheme: Scheme::Digital,
            mobility: Mobility::Low,
            mode: o.mode,
            paths: 10,
            seed_base: 0,
            seeds: None,
            freeze_channel: o.freeze_channel,
            window_half_width: o.window_half_width,
            accuracy_target: None,
        }
    }
}

impl RunConfig {
    pub fn options(&self) -> RunOptions {
        RunOptions {
            mode: self.mode,
            freeze_channel: self.freeze_channel,
            window_half_width: self.window_half_width,
        }
    }

    pub fn trial_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(list) => list.iter().take(self.paths).copied().collect(),
            None => (0..self.paths).map(|i| trial_seed(self.seed_base, i)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: String,
    pub values: Vec<f64>,
}

fn config_error(key: impl Into<String>, message: impl Into<String>) -> FeelError {
    FeelError::Config {
        key: key.into(),
        message: message.into(),
    }
}

fn keyed(section: &str, err: FeelError) -> FeelError {
    match err {
        FeelError::InvalidParameter { name, reason } => config_error(format!("{section}.{name}"), reason),
        other => other,
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| config_error("<root>", e.to_string()))?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "<root>".to_string() } else { path };
        config_error(key, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(path.display().to_string(), e.to_string()))?;
    parse_config(&text)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.network.validate().map_err(|e| keyed("network", e))?;
        match &self.task {
            TaskConfig::Quadratic(q) => {
                if !(q.l0 > 0.0) || !q.l0.is_finite() {
                    return Err(config_error("task.l0", "must be positive"));
                }
                if !(q.sigma2 >= 0.0) || !q.sigma2.is_finite() {
                    return Err(config_error("task.sigma2", "must be >= 0"));
                }
            }
            TaskConfig::Logistic(_) => {}
        }
        if self.run.paths == 0 {
            return Err(config_error("run.paths", "must be at least 1"));
        }
        if let Some(seeds) = &self.run.seeds {
            if seeds.len() < self.run.paths {
                return Err(config_error(
                    "run.seeds",
                    format!("{} seeds for {} paths", seeds.len(), self.run.paths),
                ));
            }
        }
        if !(self.run.window_half_width > self.network.radius) {
            return Err(config_error("run.window_half_width", "must exceed the cell radius"));
        }
        if let Some(t) = self.run.accuracy_target {
            if !(0.0..=1.0).contains(&t) {
                return Err(config_error("run.accuracy_target", "must lie in [0, 1]"));
            }
        }
        if self.sweep.is_some() {
            self.sweep_points()?;
        }
        Ok(())
    }

    /// One network configuration per sweep value, or the base one alone.
    pub fn sweep_points(&self) -> Result<Vec<(Option<f64>, NetworkConfig)>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![(None, self.network.clone())]);
        };
        let name = sweep.parameter.as_str();
        if !SWEEPABLE.contains(&name) {
            return Err(config_error(
                "sweep.parameter",
                format!("`{name}` is not a network field (expected one of {})", SWEEPABLE.join(", ")),
            ));
        }
        if sweep.values.is_empty() {
            return Err(config_error("sweep.values", "must not be empty"));
        }
        let base = serde_json::to_value(&self.network)?;
        sweep
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let key = format!("sweep.values[{i}]");
                let mut obj = base.clone();
                let value = if INTEGER_FIELDS.contains(&name) {
                    if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
                        return Err(config_error(key, format!("`{name}` takes non-negative integers, got {v}")));
                    }
                    serde_json::json!(v as u64)
                } else {
                    serde_json::json!(v)
                };
                obj[name] = value;
                let cfg: NetworkConfig = serde_json::from_value(obj)?;
                cfg.validate().map_err(|e| match e {
                    FeelError::InvalidParameter { reason, .. } => config_error(key, reason),
                    other => other,
                })?;
                Ok((Some(v), cfg))
            })
            .collect()
    }
}
