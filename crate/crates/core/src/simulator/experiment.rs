use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Simulation, TrialRecord};
use crate::error::{FeelError, Result};
use crate::rng::derive_seed;

/// Seed of trial `trial_id` under `seed_base`.
pub fn trial_seed(seed_base: u64, trial_id: usize) -> u64 {
    derive_seed(seed_base, &[trial_id as u64])
}

/// Spatial averages over independent typical-cell realizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialSummary {
    pub paths: usize,
    pub rounds: usize,
    pub learning_rate: f64,
    pub per_round_latency: f64,
    /// Per-round averages over all paths.
    pub mean_loss: Vec<f64>,
    pub mean_accuracy: Option<Vec<f64>>,
    pub mean_active: Vec<f64>,
    pub mean_active_count: f64,
    pub mean_initial_devices: f64,
    /// Fraction of trials without a single effective round.
    pub empty_trial_fraction: f64,
    pub mean_effective_rounds: f64,
    /// `Pr(averaged gradient norm > ε0)` among non-empty trials.
    pub criterion_violation_probability: Option<f64>,
    /// Whether empty trials plus violations stay within `δ`.
    pub spatial_criterion_met: bool,
    pub mean_averaged_grad_norm: Option<f64>,
    pub mean_cumulative_latency: f64,
    pub mean_final_loss: f64,
    pub mean_final_accuracy: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl SpatialSummary {
    pub fn from_trials(sim: &Simulation<'_>, trials: &[TrialRecord]) -> Result<Self> {
        if trials.is_empty() {
            return Err(FeelError::param("n_sample_paths", "must be at least 1"));
        }
        let cfg = sim.config();
        let rounds = cfg.rounds;
        let per_round = |f: &dyn Fn(&super::RoundOutcome) -> f64| -> Vec<f64> {
            (0..rounds).map(|n| mean(trials.iter().map(|t| f(&t.rounds[n])))).collect()
        };
        let mean_loss = per_round(&|r| r.loss);
        let mean_active = per_round(&|r| r.active_count as f64);
        let mean_accuracy = trials[0].rounds[0]
            .accuracy
            .is_some()
            .then(|| per_round(&|r| r.accuracy.unwrap_or(f64::NAN)));

        let nonempty: Vec<&TrialRecord> = trials.iter().filter(|t| !t.is_empty()).collect();
        let violations = nonempty
            .iter()
            .filter(|t| t.averaged_grad_norm.is_some_and(|g| g > cfg.epsilon0))
            .count();
        let empty = trials.len() - nonempty.len();
        let paths = trials.len() as f64;

        Ok(Self {
            paths: trials.len(),
            rounds,
            learning_rate: sim.learning_rate(),
            per_round_latency: sim.round_latency,
            mean_active_count: mean(mean_active.iter().copied()),
            mean_loss,
            mean_accuracy,
            mean_active,
            mean_initial_devices: mean(trials.iter().map(|t| t.initial_devices as f64)),
            empty_trial_fraction: empty as f64 / paths,
            mean_effective_rounds: mean(trials.iter().map(|t| t.effective_rounds as f64)),
            criterion_violation_probability: (!nonempty.is_empty())
                .then(|| violations as f64 / nonempty.len() as f64),
            spatial_criterion_met: (empty + violations) as f64 / paths <= cfg.delta,
            mean_averaged_grad_norm: (!nonempty.is_empty())
                .then(|| mean(nonempty.iter().filter_map(|t| t.averaged_grad_norm))),
            mean_cumulative_latency: mean(trials.iter().map(|t| t.cumulative_latency)),
            mean_final_loss: mean(trials.iter().map(|t| t.final_loss)),
            mean_final_accuracy: trials[0]
                .final_accuracy
                .is_some()
                .then(|| mean(trials.iter().map(|t| t.final_accuracy.unwrap_or(f64::NAN)))),
        })
    }
}

/// Runs one trial per seed, in parallel, and returns them in seed order.
pub fn run_spatial_experiment(
    sim: &Simulation<'_>,
    seeds: &[u64],
) -> Result<(Vec<TrialRecord>, SpatialSummary)> {
    let trials = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| sim.run_trial(i, seed))
        .collect::<Result<Vec<_>>>()?;
    let summary = SpatialSummary::from_trials(sim, &trials)?;
    Ok((trials, summary))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TargetOutcome {
    Reached { rounds: usize },
    NotReached { max_rounds: usize },
}

impl TargetOutcome {
    pub fn rounds(&self) -> Option<usize> {
        match self {
            Self::Reached { rounds } => Some(*rounds),
            Self::NotReached { .. } => None,
        }
    }
}

/// Smallest `N` at which the empirical spatial criterion holds: the share
/// of trials that are empty or exceed `ε0` over their first `N` rounds is
/// at most `δ`.
pub fn rounds_to_target(trials: &[TrialRecord], epsilon0: f64, delta: f64) -> TargetOutcome {
    let max_rounds = trials.iter().map(|t| t.rounds.len()).min().unwrap_or(0);
    if trials.is_empty() {
        return TargetOutcome::NotReached { max_rounds };
    }
    for n in 1..=max_rounds {
        let misses = trials
            .iter()
            .filter(|t| t.averaged_grad_norm_upto(n).is_none_or(|g| g > epsilon0))
            .count();
        if misses as f64 <= delta * trials.len() as f64 {
            return TargetOutcome::Reached { rounds: n };
        }
    }
    TargetOutcome::NotReached { max_rounds }
}

/// Spatially averaged accuracy after `k` updates, `k = 0..=N`.
pub fn accuracy_after_rounds(trials: &[TrialRecord]) -> Option<Vec<f64>> {
    let first = trials.first()?;
    let n = first.rounds.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let values = trials.iter().map(|t| {
            if k < n {
                t.rounds[k].accuracy
            } else {
                t.final_accuracy
            }
        });
        let collected: Option<Vec<f64>> = values.collect();
        out.push(mean(collected?.into_iter()));
    }
    Some(out)
}

/// Fewest updates after which the spatially averaged accuracy reaches `target`.
pub fn rounds_to_accuracy(trials: &[TrialRecord], target: f64) -> TargetOutcome {
    let max_rounds = trials.first().map_or(0, |t| t.rounds.len());
    match accuracy_after_rounds(trials).and_then(|acc| acc.iter().position(|&a| a >= target)) {
        Some(k) => TargetOutcome::Reached { rounds: k },
        None => TargetOutcome::NotReached { max_rounds },
    }
}
