//! Distributed SGD: local gradients, digital and over-the-air
//! aggregation, the global update, and two synthetic tasks whose
//! constants are known.

mod aggregate;
mod logistic;
mod quadratic;

pub use aggregate::{aggregate_digital, analog_uplink, global_update, AnalogAggregate, AnalogDevice};
pub use logistic::{LogisticParams, LogisticTask};
pub use quadratic::QuadraticTask;

use serde::{Deserialize, Serialize};

use crate::TaskSpec;
use crate::rng::SimRng;

pub type ModelVector = Vec<f64>;

/// Gradient computed by one device in one round.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalGradient {
    pub device: u64,
    pub g: Vec<f64>,
}

/// Per-coefficient mean and standard deviation of the local gradients,
/// assumed known to every device for analog normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub nu: f64,
    pub sigma_tilde: f64,
}

/// A learning problem with a ground-truth loss and per-device gradients.
pub trait LearningTask: Send + Sync {
    fn dim(&self) -> usize;

    fn initial_model(&self) -> ModelVector;

    /// Ground-truth loss `F(w)`.
    fn loss(&self, w: &[f64]) -> f64;

    /// Ground-truth gradient `∇F(w)`.
    fn gradient(&self, w: &[f64]) -> Vec<f64>;

    /// Gradient reported by `device` at model `w`.
    ///
    /// `device` identifies the device's data; `rng` supplies any
    /// per-round sampling noise.
    fn local_gradient(&self, w: &[f64], device: u64, rng: &mut SimRng) -> LocalGradient;

    /// Normalization statistics at model `w`.
    fn normalization(&self, w: &[f64]) -> Normalization;

    /// Constants of the problem, evaluated at the initial model.
    fn spec(&self) -> TaskSpec;

    /// Held-out classification accuracy, for tasks that have one.
    fn accuracy(&self, _w: &[f64]) -> Option<f64> {
        None
    }
}

pub(crate) fn squared_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Population mean and variance of a coefficient vector.
pub(crate) fn coefficient_moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}
