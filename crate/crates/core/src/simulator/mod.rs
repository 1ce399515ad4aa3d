//! Round-by-round FEEL in the typical cell.
//!
//! A [`Simulation`] fixes the network, the task, the scheme and the
//! mobility model; each trial draws its own devices, fading, hopping and
//! interference from streams derived from the trial seed, so a trial's
//! output does not depend on which worker runs it.

mod experiment;

pub use experiment::{
    accuracy_after_rounds, rounds_to_accuracy, rounds_to_target, run_spatial_experiment, trial_seed, SpatialSummary,
    TargetOutcome,
};

use serde::{Deserialize, Serialize};

use crate::analytics::{
    activation_stats, analog_eta, expected_inverse_effective_rounds, per_round_latency,
    successful_device_stats, Mobility, Scheme,
};
use crate::channel::{
    annulus_interference_power, interference_vector_from_power, matched_field_success, path_gain_sq, FadingDraw,
    TRUNCATION_RADIUS,
};
use crate::error::{FeelError, Result};
use crate::geometry::{partition_typical_cell, sample_ppp, sample_ppp_in_disk};
use crate::learning::{aggregate_digital, analog_uplink, global_update, AnalogDevice, LearningTask};
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::{HexGrid, NetworkConfig, Point, TaskSpec};

const POSITIONS: u64 = 1;
const CHANNEL: u64 = 2;
const ROUND: u64 = 3;
const DATA: u64 = 4;
const INTERFERENCE: u64 = 5;

/// Where interferers come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterferenceMode {
    /// Idealized Poisson fields matching the closed-form assumptions.
    #[default]
    AnalyticMatched,
    /// Actual out-of-cell devices of a hexagonal window realization.
    Cellular,
}

impl std::fmt::Display for InterferenceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AnalyticMatched => "analytic-matched",
            Self::Cellular => "cellular",
        })
    }
}

impl std::str::FromStr for InterferenceMode {
    type Err = FeelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic-matched" => Ok(Self::AnalyticMatched),
            "cellular" => Ok(Self::Cellular),
            other => Err(FeelError::param(
                "mode",
                format!("expected analytic-matched or cellular, got {other}"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOptions {
    pub mode: InterferenceMode,
    /// Keep in-cell fading, hopping and digital interference fixed for the
    /// whole trial (low mobility only), so the number of successful devices
    /// is the same every round.
    pub freeze_channel: bool,
    /// Half-width of the square window in cellular mode.
    pub window_half_width: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mode: InterferenceMode::AnalyticMatched,
            freeze_channel: false,
            window_half_width: 25.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    /// 1-based round index.
    pub round: usize,
    pub active_count: usize,
    pub effective: bool,
    /// `F(w)` at the model used in this round.
    pub loss: f64,
    /// `‖∇F(w)‖²` at the model used in this round.
    pub grad_norm_sq: f64,
    pub round_latency: f64,
    /// Per-coefficient interference power at the base station (analog only).
    pub interference_power: Option<f64>,
    pub accuracy: Option<f64>,
    /// Hash of the learner positions used in this round.
    #[serde(skip)]
    pub cell_digest: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub mobility: Mobility,
    pub rounds: Vec<RoundOutcome>,
    /// Number of rounds with at least one active device.
    pub effective_rounds: usize,
    /// Mean of `grad_norm_sq` over effective rounds; `None` when there are none.
    pub averaged_grad_norm: Option<f64>,
    pub cumulative_latency: f64,
    /// Loss and accuracy after the last update.
    pub final_loss: f64,
    pub final_accuracy: Option<f64>,
    /// Devices in the disk in the first round.
    pub initial_devices: usize,
}

impl TrialRecord {
    /// Averaged gradient norm over the effective rounds among the first `n`.
    pub fn averaged_grad_norm_upto(&self, n: usize) -> Option<f64> {
        let (sum, count) = self
            .rounds
            .iter()
            .take(n)
            .filter(|r| r.effective)
            .fold((0.0, 0usize), |(s, c), r| (s + r.grad_norm_sq, c + 1));
        (count > 0).then(|| sum / count as f64)
    }

    /// True when no round had an active device.
    pub fn is_empty(&self) -> bool {
        self.effective_rounds == 0
    }
}

/// One in-cell learner for a round.
#[derive(Clone, Copy, Debug)]
struct Learner {
    distance: f64,
    position: Point,
}

fn cell_digest(learners: &[Learner]) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for l in learners {
        l.position.x.to_bits().hash(&mut h);
        l.position.y.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Fixed ingredients of a batch of trials.
pub struct Simulation<'a> {
    cfg: NetworkConfig,
    task: &'a dyn LearningTask,
    spec: TaskSpec,
    scheme: Scheme,
    mobility: Mobility,
    options: RunOptions,
    learning_rate: f64,
    eta: f64,
    round_latency: f64,
    grid: Option<HexGrid>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        cfg: &NetworkConfig,
        task: &'a dyn LearningTask,
        scheme: Scheme,
        mobility: Mobility,
        options: RunOptions,
    ) -> Result<Self> {
        let spec = task.spec();
        Self::with_spec(cfg, task, spec, scheme, mobility, options)
    }

    /// Same as [`Simulation::new`] with precomputed task constants.
    pub fn with_spec(
        cfg: &NetworkConfig,
        task: &'a dyn LearningTask,
        spec: TaskSpec,
        scheme: Scheme,
        mobility: Mobility,
        options: RunOptions,
    ) -> Result<Self> {
        cfg.validate()?;
        spec.validate()?;
        if cfg.dim != task.dim() {
            return Err(FeelError::DimensionMismatch {
                expected: cfg.dim,
                got: task.dim(),
            });
        }
        let n = cfg.rounds as f64;
        let low_rate = 1.0 / (spec.l0 * n.sqrt());
        let learning_rate = match mobility {
            Mobility::Low => low_rate,
            Mobility::High => {
                let p_null = match scheme {
                    Scheme::Digital => successful_device_stats(cfg)?.p_null,
                    Scheme::Analog => activation_stats(cfg)?.p_null,
                };
                if cfg.rounds < 2 {
                    1.0 / spec.l0
                } else if p_null >= 1.0 {
                    low_rate
                } else {
                    expected_inverse_effective_rounds(p_null, cfg.rounds)?.exact.sqrt() / spec.l0
                }
            }
        };
        let eta = match scheme {
            Scheme::Analog => analog_eta(cfg)?,
            Scheme::Digital => f64::NAN,
        };
        let grid = match options.mode {
            InterferenceMode::Cellular => Some(HexGrid::new(cfg.radius, options.window_half_width)?),
            InterferenceMode::AnalyticMatched => None,
        };
        Ok(Self {
            cfg: cfg.clone(),
            task,
            spec,
            scheme,
            mobility,
            options,
            learning_rate,
            eta,
            round_latency: per_round_latency(cfg, scheme),
            grid,
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn mobility(&self) -> Mobility {
        self.mobility
    }

    pub fn options(&self) -> RunOptions {
        self.options
    }

    /// Devices of one realization: learners in the disk plus, in cellular
    /// mode, out-of-cell interferer positions.
    fn draw_cell(&self, rng: &mut SimRng) -> Result<(Vec<Learner>, Vec<Point>)> {
        let learners = |pts: Vec<Point>| {
            pts.into_iter()
                .map(|p| Learner { distance: p.norm(), position: p })
                .collect::<Vec<_>>()
        };
        match &self.grid {
            None => Ok((learners(sample_ppp_in_disk(self.cfg.lambda_d, self.cfg.radius, rng)?), Vec::new())),
            Some(grid) => {
                let pts = sample_ppp(self.cfg.lambda_d, grid.window_half_width(), rng)?;
                let cell = partition_typical_cell(&pts, grid);
                Ok((learners(cell.in_disk), cell.interferers))
            }
        }
    }

    /// Indices of the learners that get through this round.
    fn digital_success(&self, learners: &[Learner], outside: &[Point], rng: &mut SimRng) -> Vec<usize> {
        let cfg = &self.cfg;
        let m = cfg.subcarriers;
        let gains: Vec<f64> = learners.iter().map(|_| FadingDraw::<f64>::sample(rng).gain).collect();
        match self.options.mode {
            InterferenceMode::AnalyticMatched => {
                let density = cfg.lambda_d / m as f64;
                (0..learners.len())
                    .filter(|&i| matched_field_success(learners[i].distance, gains[i], density, cfg.alpha, cfg.theta, rng))
                    .collect()
            }
            InterferenceMode::Cellular => {
                let mut per_channel = vec![0.0; m as usize];
                for p in outside {
                    let ch = if m > 1 { rand::Rng::random_range(rng, 0..m) } else { 0 } as usize;
                    let g = FadingDraw::<f64>::sample(rng).gain;
                    per_channel[ch] += g * path_gain_sq(p.norm_sq(), cfg.alpha);
                }
                let channels: Vec<usize> = learners
                    .iter()
                    .map(|_| if m > 1 { rand::Rng::random_range(rng, 0..m) as usize } else { 0 })
                    .collect();
                let received: Vec<f64> = learners
                    .iter()
                    .zip(&gains)
                    .map(|(l, g)| g * path_gain_sq(l.position.norm_sq(), cfg.alpha))
                    .collect();
                let mut in_cell = vec![0.0; m as usize];
                for (ch, r) in channels.iter().zip(&received) {
                    in_cell[*ch] += r;
                }
                (0..learners.len())
                    .filter(|&i| {
                        let ch = channels[i];
                        let interference = per_channel[ch] + in_cell[ch] - received[i];
                        // Guard against cancellation when the device is alone.
                        let interference = if interference <= received[i] * 1e-12 { 0.0 } else { interference };
                        interference == 0.0 || received[i] >= cfg.theta * interference
                    })
                    .collect()
            }
        }
    }

    /// Per-coefficient interference power at the base station for an
    /// analog round.
    fn analog_interference(&self, outside: &[Point], rng: &mut SimRng) -> f64 {
        let cfg = &self.cfg;
        let m = cfg.subcarriers as f64;
        match self.options.mode {
            InterferenceMode::AnalyticMatched => annulus_interference_power(
                cfg.lambda_d / m,
                cfg.radius,
                TRUNCATION_RADIUS,
                cfg.alpha,
                cfg.power,
                None,
                rng,
            ),
            InterferenceMode::Cellular => {
                let mut total = 0.0;
                for p in outside {
                    let co_channel = rand::Rng::random::<f64>(rng) * m < 1.0;
                    let g = FadingDraw::<f64>::sample(rng).gain;
                    if co_channel {
                        total += cfg.power * g * path_gain_sq(p.norm_sq(), cfg.alpha);
                    }
                }
                total
            }
        }
    }

    /// Runs one trial.
    pub fn run_trial(&self, trial_id: usize, seed: u64) -> Result<TrialRecord> {
        let cfg = &self.cfg;
        let task = self.task;
        let frozen = self.options.freeze_channel && self.mobility == Mobility::Low;

        let mut w = task.initial_model();
        let mut rounds = Vec::with_capacity(cfg.rounds);
        let mut cell = None;
        let mut frozen_digital: Option<Vec<usize>> = None;
        let mut frozen_gains: Option<Vec<f64>> = None;
        let mut initial_devices = 0;
        let mut cumulative = 0.0;

        for n in 1..=cfg.rounds {
            if cell.is_none() || self.mobility == Mobility::High {
                let label = match self.mobility {
                    Mobility::Low => 0,
                    Mobility::High => n as u64,
                };
                let mut pos_rng = rng_from_seed(derive_seed(seed, &[POSITIONS, label]));
                cell = Some(self.draw_cell(&mut pos_rng)?);
            }
            let (learners, outside) = cell.as_ref().expect("cell drawn above");
            if n == 1 {
                initial_devices = learners.len();
            }
            let mut round_rng = rng_from_seed(derive_seed(seed, &[ROUND, n as u64]));
            let data_label = |i: usize| match self.mobility {
                Mobility::Low => derive_seed(seed, &[DATA, i as u64]),
                Mobility::High => derive_seed(seed, &[DATA, n as u64, i as u64]),
            };

            let loss = task.loss(&w);
            let grad = task.gradient(&w);
            let grad_norm_sq = grad.iter().map(|g| g * g).sum::<f64>();
            let accuracy = task.accuracy(&w);

            let (active_count, interference_power, g_bar) = match self.scheme {
                Scheme::Digital => {
                    let success = if frozen {
                        frozen_digital
                            .get_or_insert_with(|| {
                                let mut ch_rng = rng_from_seed(derive_seed(seed, &[CHANNEL]));
                                self.digital_success(learners, outside, &mut ch_rng)
                            })
                            .clone()
                    } else {
                        let mut ch_rng = rng_from_seed(derive_seed(seed, &[CHANNEL, n as u64]));
                        self.digital_success(learners, outside, &mut ch_rng)
                    };
                    let grads: Vec<_> = success
                        .iter()
                        .map(|&i| task.local_gradient(&w, data_label(i), &mut round_rng))
                        .collect();
                    (success.len(), None, aggregate_digital(&grads))
                }
                Scheme::Analog => {
                    let gains = if frozen {
                        frozen_gains
                            .get_or_insert_with(|| {
                                let mut ch_rng = rng_from_seed(derive_seed(seed, &[CHANNEL]));
                                learners.iter().map(|_| FadingDraw::<f64>::sample(&mut ch_rng).gain).collect()
                            })
                            .clone()
                    } else {
                        let mut ch_rng = rng_from_seed(derive_seed(seed, &[CHANNEL, n as u64]));
                        learners.iter().map(|_| FadingDraw::<f64>::sample(&mut ch_rng).gain).collect()
                    };
                    let devices: Vec<AnalogDevice> = learners
                        .iter()
                        .zip(&gains)
                        .enumerate()
                        .filter(|(_, (_, &g))| g >= cfg.g_th)
                        .map(|(i, (l, &g))| AnalogDevice {
                            gradient: task.local_gradient(&w, data_label(i), &mut round_rng),
                            gain: g,
                            distance: l.distance,
                        })
                        .collect();
                    let mut int_rng = rng_from_seed(derive_seed(seed, &[INTERFERENCE, n as u64]));
                    let power = self.analog_interference(outside, &mut int_rng);
                    let noise = interference_vector_from_power(power, cfg.dim, &mut int_rng);
                    let aggregate = if devices.is_empty() {
                        None
                    } else {
                        let norm = task.normalization(&w);
                        analog_uplink(&devices, self.eta, cfg.g_th, cfg.alpha, &noise, norm.nu, norm.sigma_tilde)?
                    };
                    (devices.len(), Some(power), aggregate.map(|a| a.g_bar))
                }
            };

            if let Some(g_bar) = &g_bar {
                w = global_update(&w, g_bar, self.learning_rate)?;
            }
            cumulative += self.round_latency;
            rounds.push(RoundOutcome {
                round: n,
                active_count,
                effective: active_count > 0,
                loss,
                grad_norm_sq,
                round_latency: self.round_latency,
                interference_power,
                accuracy,
                cell_digest: cell_digest(learners),
            });
        }

        let mut record = TrialRecord {
            trial_id,
            seed,
            scheme: self.scheme,
            mobility: self.mobility,
            effective_rounds: rounds.iter().filter(|r| r.effective).count(),
            averaged_grad_norm: None,
            cumulative_latency: cumulative,
            final_loss: task.loss(&w),
            final_accuracy: task.accuracy(&w),
            initial_devices,
            rounds,
        };
        record.averaged_grad_norm = record.averaged_grad_norm_upto(cfg.rounds);
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::QuadraticTask;
    use approx::assert_relative_eq;

    fn cfg(lambda: f64, rounds: usize) -> NetworkConfig {
        NetworkConfig {
            lambda_d: lambda,
            dim: 3,
            rounds,
            ..Default::default()
        }
    }

    #[test]
    fn void_network_never_updates() {
        let task = QuadraticTask::new(vec![1.0, 2.0, 3.0], 0.5, 1.0).unwrap();
        for scheme in [Scheme::Digital, Scheme::Analog] {
            let sim = Simulation::new(&cfg(0.0, 5), &task, scheme, Mobility::Low, RunOptions::default()).unwrap();
            let rec = sim.run_trial(0, 9).unwrap();
            assert_eq!(rec.effective_rounds, 0);
            assert!(rec.averaged_grad_norm.is_none());
            assert_relative_eq!(rec.final_loss, task.loss(&[0.0; 3]));
            assert!(rec.rounds.iter().all(|r| r.round_latency > 0.0));
        }
    }

    #[test]
    fn noiseless_quadratic_decays_geometrically() {
        // One device, no interferers: every round succeeds with the exact gradient.
        let task = QuadraticTask::new(vec![1.0, -1.0, 2.0], 0.5, 0.0).unwrap();
        let c = NetworkConfig {
            lambda_d: 0.4,
            theta: 1e-9,
            ..cfg(0.4, 16)
        };
        let sim = Simulation::new(&c, &task, Scheme::Digital, Mobility::Low, RunOptions::default()).unwrap();
        let mu = sim.learning_rate();
        assert_relative_eq!(mu, 1.0 / (0.5 * 4.0));
        let mut checked = false;
        for seed in 0..20 {
            let rec = sim.run_trial(0, seed).unwrap();
            if rec.rounds.iter().all(|r| r.effective) {
                let f0 = rec.rounds[0].loss;
                for r in &rec.rounds {
                    let expect = (1.0 - mu * 0.5f64).powi(2 * (r.round as i32 - 1)) * f0;
                    assert_relative_eq!(r.loss, expect, max_relative = 1e-12);
                }
                checked = true;
            }
        }
        assert!(checked);
    }

    #[test]
    fn frozen_channel_fixes_active_count() {
        let task = QuadraticTask::new(vec![1.0; 3], 0.5, 1.0).unwrap();
        let options = RunOptions { freeze_channel: true, ..Default::default() };
        for scheme in [Scheme::Digital, Scheme::Analog] {
            let sim = Simulation::new(&cfg(3.0, 10), &task, scheme, Mobility::Low, options).unwrap();
            for seed in 0..5 {
                let rec = sim.run_trial(0, seed).unwrap();
                let a = rec.rounds[0].active_count;
                assert!(rec.rounds.iter().all(|r| r.active_count == a));
            }
        }
    }

    #[test]
    fn trial_is_reproducible_and_cellular_runs() {
        let task = QuadraticTask::new(vec![1.0; 3], 0.5, 1.0).unwrap();
        let options = RunOptions { mode: InterferenceMode::Cellular, window_half_width: 8.0, ..Default::default() };
        for scheme in [Scheme::Digital, Scheme::Analog] {
            for mobility in [Mobility::Low, Mobility::High] {
                let sim = Simulation::new(&cfg(2.0, 6), &task, scheme, mobility, options).unwrap();
                let a = sim.run_trial(3, 77).unwrap();
                let b = sim.run_trial(3, 77).unwrap();
                assert_eq!(a, b);
                assert!(a.effective_rounds > 0);
            }
        }
    }

    #[test]
    fn mode_parses() {
        assert_eq!("cellular".parse::<InterferenceMode>().unwrap(), InterferenceMode::Cellular);
        assert!("torus".parse::<InterferenceMode>().is_err());
        assert_eq!(InterferenceMode::AnalyticMatched.to_string(), "analytic-matched");
    }
}
