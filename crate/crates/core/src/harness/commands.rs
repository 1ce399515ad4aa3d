use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::output::{write_json, write_trials};
use super::validate::{run_validation, ValidationReport, ValidationSettings};
use crate::analytics::LatencyEntry;
use crate::error::{FeelError, Result};
use crate::simulator::{
    rounds_to_accuracy, rounds_to_target, run_spatial_experiment, InterferenceMode, Simulation, SpatialSummary,
    TargetOutcome, TrialRecord,
};
use crate::{BoundReport, NetworkConfig, TaskSpec};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "FEEL_WORKERS";

/// Thread pool sized from [`WORKERS_ENV`], or rayon's default when unset.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| FeelError::Config {
            key: WORKERS_ENV.to_string(),
            message: format!("expected a positive integer, got `{v}`"),
        })?;
        if n == 0 {
            return Err(FeelError::Config {
                key: WORKERS_ENV.to_string(),
                message: "must be at least 1".to_string(),
            });
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| FeelError::Config { key: WORKERS_ENV.to_string(), message: e.to_string() })
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed_base: Option<u64>,
    pub paths: Option<usize>,
    pub mode: Option<InterferenceMode>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(s) = self.seed_base {
            cfg.run.seed_base = s;
        }
        if let Some(p) = self.paths {
            cfg.run.paths = p;
        }
        if let Some(m) = self.mode {
            cfg.run.mode = m;
        }
        cfg.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPoint {
    pub sweep_value: Option<f64>,
    pub network: NetworkConfig,
    pub task: TaskSpec,
    pub report: BoundReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticOutput {
    pub config: ExperimentConfig,
    pub points: Vec<AnalyticPoint>,
}

/// Closed forms for every sweep point (or the base network).
pub fn cmd_analytic(cfg: &ExperimentConfig) -> Result<AnalyticOutput> {
    let points = cfg
        .sweep_points()?
        .into_iter()
        .map(|(sweep_value, network)| {
            let task = cfg.task.build(network.dim)?.spec();
            let report = BoundReport::compute(&network, &task)?;
            Ok(AnalyticPoint { sweep_value, network, task, report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalyticOutput { config: cfg.clone(), points })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationPoint {
    pub sweep_value: Option<f64>,
    pub network: NetworkConfig,
    pub task: TaskSpec,
    pub summary: SpatialSummary,
    /// Empirical rounds for the spatial criterion `(ε0, δ)`.
    pub rounds_to_target: TargetOutcome,
    pub latency_to_target_s: Option<f64>,
    pub rounds_to_accuracy: Option<TargetOutcome>,
    pub latency_to_accuracy_s: Option<f64>,
    /// Closed-form round and latency bounds for the same scheme and mobility.
    pub analytic: Option<LatencyEntry<f64>>,
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub config: ExperimentConfig,
    pub points: Vec<SimulationPoint>,
}

impl SimulationOutput {
    /// True when some point missed its spatial criterion within the round budget.
    pub fn any_not_reached(&self) -> bool {
        self.points.iter().any(|p| p.rounds_to_target.rounds().is_none())
    }
}

fn simulate_point(cfg: &ExperimentConfig, sweep_value: Option<f64>, network: NetworkConfig) -> Result<SimulationPoint> {
    let task = cfg.task.build(network.dim)?;
    let spec = task.spec();
    let sim = Simulation::with_spec(&network, task.as_ref(), spec.clone(), cfg.run.scheme, cfg.run.mobility, cfg.run.options())?;
    let (trials, summary) = run_spatial_experiment(&sim, &cfg.run.trial_seeds())?;
    let target = rounds_to_target(&trials, network.epsilon0, network.delta);
    let accuracy = cfg.run.accuracy_target.map(|a| rounds_to_accuracy(&trials, a));
    let analytic = BoundReport::compute(&network, &spec)
        .ok()
        .and_then(|r| r.latency_for(cfg.run.scheme, cfg.run.mobility).cloned());
    let latency = |o: &TargetOutcome| o.rounds().map(|r| r as f64 * summary.per_round_latency);
    Ok(SimulationPoint {
        sweep_value,
        latency_to_target_s: latency(&target),
        latency_to_accuracy_s: accuracy.as_ref().and_then(latency),
        rounds_to_target: target,
        rounds_to_accuracy: accuracy,
        network,
        task: spec,
        summary,
        analytic,
        trials,
    })
}

/// Runs the base network of `cfg`, ignoring any sweep table.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<SimulationOutput> {
    let point = simulate_point(cfg, None, cfg.network.clone())?;
    Ok(SimulationOutput { config: cfg.clone(), points: vec![point] })
}

/// Runs every point of the sweep table.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SimulationOutput> {
    if cfg.sweep.is_none() {
        return Err(FeelError::Config { key: "sweep".to_string(), message: "a [sweep] table is required".to_string() });
    }
    let points = cfg
        .sweep_points()?
        .into_iter()
        .map(|(v, network)| simulate_point(cfg, v, network))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationOutput { config: cfg.clone(), points })
}

/// Runs the check registry; interference is always analytic-matched.
pub fn cmd_validate(settings: &ValidationSettings) -> Result<ValidationReport> {
    run_validation(settings)
}

pub fn write_analytic(out: &Path, result: &AnalyticOutput) -> Result<()> {
    std::fs::create_dir_all(out)?;
    write_json(&out.join("bounds.json"), "analytic", result)
}

/// `trials.csv` and `summary.json` for a single run; for a sweep, one
/// `point_NNN/trials.csv` per value and a shared `summary.json`.
pub fn write_simulation(out: &Path, result: &SimulationOutput, sweep: bool) -> Result<()> {
    std::fs::create_dir_all(out)?;
    if sweep {
        for (i, p) in result.points.iter().enumerate() {
            let dir = out.join(format!("point_{i:03}"));
            std::fs::create_dir_all(&dir)?;
            write_trials(&dir.join("trials.csv"), &p.trials)?;
        }
        write_json(&out.join("summary.json"), "sweep", result)
    } else {
        write_trials(&out.join("trials.csv"), &result.points[0].trials)?;
        write_json(&out.join("summary.json"), "simulate", result)
    }
}

#[derive(Serialize)]
struct ValidationBody<'a> {
    passed: bool,
    scale: f64,
    seed: u64,
    checks: &'a [super::validate::CheckRecord],
}

pub fn write_validation(out: &Path, settings: &ValidationSettings, report: &ValidationReport) -> Result<()> {
    std::fs::create_dir_all(out)?;
    write_json(
        &out.join("validation.json"),
        "validate",
        &ValidationBody { passed: report.passed(), scale: settings.scale, seed: settings.seed, checks: &report.checks },
    )
}
