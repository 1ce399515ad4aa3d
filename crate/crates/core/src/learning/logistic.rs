use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{dot, squared_norm, LearningTask, LocalGradient, ModelVector, Normalization};
use crate::TaskSpec;
use crate::error::{FeelError, Result};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

const DEVICE_STREAM: u64 = 0x0D;
const TEST_STREAM: u64 = 0x7E;

/// Half-width and step of the trapezoid rule for Gaussian expectations.
/// The integrands are analytic, so the rule converges geometrically.
const GAUSS_HALF_WIDTH: f64 = 12.0;
const GAUSS_STEP: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticParams {
    pub dim: usize,
    /// Samples per device, split evenly between the two classes.
    pub samples_per_device: usize,
    /// Distance between each class mean and the origin.
    pub class_separation: f64,
    /// Devices whose gradients calibrate σ² and the normalization statistics.
    pub calibration_devices: usize,
    pub test_samples: usize,
    /// Initial model is `-init_scale` times the unit class-mean direction.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            dim: 10,
            samples_per_device: 20,
            class_separation: 1.0,
            calibration_devices: 32,
            test_samples: 2000,
            init_scale: 0.0,
            seed: 0,
        }
    }
}

/// Two Gaussian classes `u = y·m + N(0, I)`, `y = ±1`, with mean
/// `m = (separation/√S)·1`, trained with the logistic loss.
#[derive(Clone, Debug)]
pub struct LogisticTask {
    params: LogisticParams,
    mean: Vec<f64>,
    w0: Vec<f64>,
    sigma2: f64,
    test: Vec<(Vec<f64>, f64)>,
}

/// `log(1 + e^{-t})` without overflow.
fn softplus_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `1/(1 + e^{t})`.
fn sigmoid_neg(t: f64) -> f64 {
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// `E[f(a + bξ)]` for `ξ ~ N(0, 1)`.
fn gaussian_expectation<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    if b == 0.0 {
        return f(a);
    }
    let steps = (2.0 * GAUSS_HALF_WIDTH / GAUSS_STEP).round() as i64;
    let norm = GAUSS_STEP / (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for i in 0..=steps {
        let xi = -GAUSS_HALF_WIDTH + i as f64 * GAUSS_STEP;
        total += (-0.5 * xi * xi).exp() * f(a + b * xi);
    }
    total * norm
}

impl LogisticTask {
    pub fn new(params: LogisticParams) -> Result<Self> {
        if params.dim == 0 {
            return Err(FeelError::param("dim", "must be at least 1"));
        }
        if params.samples_per_device < 2 || params.samples_per_device % 2 != 0 {
            return Err(FeelError::param(
                "samples_per_device",
                "must be a positive even number",
            ));
        }
        if !(params.class_separation > 0.0) || !params.class_separation.is_finite() {
            return Err(FeelError::param("class_separation", "must be positive"));
        }
        if params.calibration_devices < 2 {
            return Err(FeelError::param("calibration_devices", "must be at least 2"));
        }
        if params.test_samples == 0 {
            return Err(FeelError::param("test_samples", "must be at least 1"));
        }
        if !(params.init_scale >= 0.0) || !params.init_scale.is_finite() {
            return Err(FeelError::param("init_scale", "must be >= 0"));
        }
        let s = params.dim;
        let per = params.class_separation / (s as f64).sqrt();
        let mean = vec![per; s];
        let w0 = vec![-params.init_scale / (s as f64).sqrt(); s];

        let mut rng = rng_from_seed(derive_seed(params.seed, &[TEST_STREAM]));
        let test = (0..params.test_samples)
            .map(|i| {
                let y = if i % 2 == 0 { 1.0 } else { -1.0 };
                let u = sample_point(&mean, y, &mut rng);
                (u, y)
            })
            .collect();

        let mut task = Self {
            params,
            mean,
            w0,
            sigma2: 0.0,
            test,
        };
        task.sigma2 = task.calibrated_variance(&task.w0.clone());
        Ok(task)
    }

    pub fn params(&self) -> &LogisticParams {
        &self.params
    }

    pub fn class_mean(&self) -> &[f64] {
        &self.mean
    }

    /// Labelled samples of one device, regenerated from its identifier.
    pub fn device_dataset(&self, device: u64) -> Vec<(Vec<f64>, f64)> {
        let mut rng = rng_from_seed(derive_seed(self.params.seed, &[DEVICE_STREAM, device]));
        (0..self.params.samples_per_device)
            .map(|i| {
                let y = if i % 2 == 0 { 1.0 } else { -1.0 };
                (sample_point(&self.mean, y, &mut rng), y)
            })
            .collect()
    }

    /// Empirical-risk gradient over a labelled dataset.
    pub fn dataset_gradient(&self, w: &[f64], data: &[(Vec<f64>, f64)]) -> Vec<f64> {
        let mut g = vec![0.0; w.len()];
        for (u, y) in data {
            let coef = -y * sigmoid_neg(y * dot(w, u));
            for (gi, ui) in g.iter_mut().zip(u) {
                *gi += coef * ui;
            }
        }
        let n = data.len() as f64;
        g.iter_mut().for_each(|x| *x /= n);
        g
    }

    fn calibration_gradients(&self, w: &[f64]) -> Vec<Vec<f64>> {
        (0..self.params.calibration_devices as u64)
            .map(|d| self.dataset_gradient(w, &self.device_dataset(u64::MAX - d)))
            .collect()
    }

    /// Mean squared deviation of device gradients from `∇F(w)`.
    pub fn calibrated_variance(&self, w: &[f64]) -> f64 {
        let truth = self.gradient(w);
        let grads = self.calibration_gradients(w);
        let total: f64 = grads
            .iter()
            .map(|g| g.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .sum();
        total / grads.len() as f64
    }
}

fn sample_point(mean: &[f64], y: f64, rng: &mut SimRng) -> Vec<f64> {
    mean.iter()
        .map(|m| {
            let z: f64 = StandardNormal.sample(rng);
            y * m + z
        })
        .collect()
}

impl LearningTask for LogisticTask {
    fn dim(&self) -> usize {
        self.params.dim
    }

    fn initial_model(&self) -> ModelVector {
        self.w0.clone()
    }

    fn loss(&self, w: &[f64]) -> f64 {
        let a = dot(w, &self.mean);
        let b = squared_norm(w).sqrt();
        gaussian_expectation(a, b, softplus_neg)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        // y·u ~ N(m, I), so the margin z = w·(y·u) ~ N(w·m, ‖w‖²) and
        // Stein's identity turns E[σ(-z)·y·u] into m·E[σ(-z)] - w·E[σ'(-z)].
        let a = dot(w, &self.mean);
        let b = squared_norm(w).sqrt();
        let e1 = gaussian_expectation(a, b, sigmoid_neg);
        let e2 = gaussian_expectation(a, b, |t| {
            let s = sigmoid_neg(t);
            s * (1.0 - s)
        });
        self.mean
            .iter()
            .zip(w)
            .map(|(m, wi)| -m * e1 + wi * e2)
            .collect()
    }

    fn local_gradient(&self, w: &[f64], device: u64, _rng: &mut SimRng) -> LocalGradient {
        LocalGradient {
            device,
            g: self.dataset_gradient(w, &self.device_dataset(device)),
        }
    }

    fn normalization(&self, w: &[f64]) -> Normalization {
        let pooled: Vec<f64> = self.calibration_gradients(w).into_iter().flatten().collect();
        let (nu, var) = super::coefficient_moments(&pooled);
        Normalization {
            nu,
            sigma_tilde: var.sqrt(),
        }
    }

    fn spec(&self) -> TaskSpec {
        let norm = self.normalization(&self.w0);
        let sep2 = self.params.class_separation.powi(2);
        TaskSpec {
            f0: self.loss(&self.w0),
            f_star: 0.0,
            // Hessian ≼ E[uuᵀ]/4 = (I + m·mᵀ)/4.
            l0: (1.0 + sep2) / 4.0,
            sigma2: self.sigma2,
            nu: norm.nu,
            sigma_tilde2: norm.sigma_tilde * norm.sigma_tilde,
        }
    }

    fn accuracy(&self, w: &[f64]) -> Option<f64> {
        let correct = self
            .test
            .iter()
            .filter(|(u, y)| {
                let predicted = if dot(w, u) >= 0.0 { 1.0 } else { -1.0 };
                predicted == *y
            })
            .count();
        Some(correct as f64 / self.test.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn task() -> LogisticTask {
        LogisticTask::new(LogisticParams { dim: 4, samples_per_device: 10, seed: 5, ..Default::default() }).unwrap()
    }

    #[test]
    fn zero_model_gradient_is_class_mean_difference() {
        let t = task();
        let w = vec![0.0; 4];
        let data = t.device_dataset(7);
        let (mut pos, mut neg) = (vec![0.0; 4], vec![0.0; 4]);
        for (u, y) in &data {
            let target = if *y > 0.0 { &mut pos } else { &mut neg };
            for (a, b) in target.iter_mut().zip(u) {
                *a += b / 5.0;
            }
        }
        let g = t.dataset_gradient(&w, &data);
        for i in 0..4 {
            assert_relative_eq!(g[i], -(pos[i] - neg[i]) / 4.0, max_relative = 1e-12);
        }
        // Population version: -m/2.
        let pop = t.gradient(&w);
        for (p, m) in pop.iter().zip(t.class_mean()) {
            assert_relative_eq!(*p, -m / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn duplicated_dataset_keeps_gradient() {
        let t = task();
        let w = vec![0.3, -0.1, 0.2, 0.5];
        let data = t.device_dataset(3);
        let mut doubled = data.clone();
        doubled.extend(data.clone());
        let a = t.dataset_gradient(&w, &data);
        let b = t.dataset_gradient(&w, &doubled);
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, max_relative = 1e-13);
        }
    }

    #[test]
    fn pooled_gradient_is_mean_of_locals() {
        let t = task();
        let w = vec![0.1, 0.2, -0.3, 0.0];
        let sets: Vec<_> = (0..5).map(|d| t.device_dataset(d)).collect();
        let pooled: Vec<_> = sets.iter().flatten().cloned().collect();
        let full = t.dataset_gradient(&w, &pooled);
        let mut avg = vec![0.0; 4];
        for s in &sets {
            for (a, g) in avg.iter_mut().zip(t.dataset_gradient(&w, s)) {
                *a += g / 5.0;
            }
        }
        for (x, y) in full.iter().zip(&avg) {
            assert_relative_eq!(x, y, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn exact_gradient_matches_loss_derivative_and_sampling() {
        let t = task();
        let w = vec![0.4, -0.2, 0.7, 0.1];
        let g = t.gradient(&w);
        let h = 1e-6;
        for i in 0..4 {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[i] += h;
            wm[i] -= h;
            let fd = (t.loss(&wp) - t.loss(&wm)) / (2.0 * h);
            assert_relative_eq!(g[i], fd, max_relative = 1e-6, epsilon = 1e-9);
        }
        // Average over many devices approaches the population gradient.
        let mut rng = crate::rng::rng_from_seed(0);
        let n = 4000;
        let mut avg = vec![0.0; 4];
        for d in 0..n {
            for (a, x) in avg.iter_mut().zip(t.local_gradient(&w, d, &mut rng).g) {
                *a += x / n as f64;
            }
        }
        let se = (t.spec().sigma2 / 4.0 / n as f64).sqrt();
        for (a, b) in avg.iter().zip(&g) {
            assert!((a - b).abs() < 5.0 * se, "{a} vs {b}");
        }
    }

    #[test]
    fn accuracy_and_constants() {
        let t = task();
        let acc0 = t.accuracy(&[0.0; 4]).unwrap();
        // Zero model predicts +1 for everything: half the balanced test set.
        assert_relative_eq!(acc0, 0.5);
        let good = t.accuracy(t.class_mean()).unwrap();
        // Bayes accuracy is Φ(separation) ≈ 0.841.
        assert!((good - 0.841).abs() < 0.03, "{good}");
        let s = t.spec();
        assert_relative_eq!(s.l0, 0.5);
        assert_relative_eq!(s.f0, std::f64::consts::LN_2, max_relative = 1e-12);
        assert!(s.sigma2 > 0.0 && s.sigma_tilde2 > 0.0);
        let bad = LogisticTask::new(LogisticParams { init_scale: 2.0, ..Default::default() }).unwrap();
        assert!(bad.accuracy(&bad.initial_model()).unwrap() < 0.3);
    }
}
