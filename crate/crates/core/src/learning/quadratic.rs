use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{coefficient_moments, squared_norm, LearningTask, LocalGradient, ModelVector, Normalization};
use crate::TaskSpec;
use crate::error::{FeelError, Result};
use crate::rng::SimRng;

/// `F(w) = (L0/2)·‖w - w*‖²` with isotropic Gaussian gradient noise of
/// total variance `σ²`. Starts from `w = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticTask {
    w_star: Vec<f64>,
    l0: f64,
    sigma2: f64,
}

impl QuadraticTask {
    pub fn new(w_star: Vec<f64>, l0: f64, sigma2: f64) -> Result<Self> {
        if w_star.is_empty() {
            return Err(FeelError::param("dim", "must be at least 1"));
        }
        if !(l0 > 0.0) || !l0.is_finite() {
            return Err(FeelError::param("l0", "must be positive"));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(FeelError::param("sigma2", "must be >= 0"));
        }
        if w_star.iter().any(|x| !x.is_finite()) {
            return Err(FeelError::param("w_star", "must be finite"));
        }
        Ok(Self { w_star, l0, sigma2 })
    }

    /// Optimum drawn with i.i.d. standard normal coefficients.
    pub fn random<R: Rng + ?Sized>(dim: usize, l0: f64, sigma2: f64, rng: &mut R) -> Result<Self> {
        let w_star = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        Self::new(w_star, l0, sigma2)
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }
}

impl LearningTask for QuadraticTask {
    fn dim(&self) -> usize {
        self.w_star.len()
    }

    fn initial_model(&self) -> ModelVector {
        vec![0.0; self.w_star.len()]
    }

    fn loss(&self, w: &[f64]) -> f64 {
        let d2: f64 = w.iter().zip(&self.w_star).map(|(a, b)| (a - b).powi(2)).sum();
        0.5 * self.l0 * d2
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        w.iter()
            .zip(&self.w_star)
            .map(|(a, b)| self.l0 * (a - b))
            .collect()
    }

    fn local_gradient(&self, w: &[f64], device: u64, rng: &mut SimRng) -> LocalGradient {
        let sd = (self.sigma2 / self.dim() as f64).sqrt();
        let g = self
            .gradient(w)
            .into_iter()
            .map(|x| {
                let z: f64 = StandardNormal.sample(rng);
                x + sd * z
            })
            .collect();
        LocalGradient { device, g }
    }

    fn normalization(&self, w: &[f64]) -> Normalization {
        let (nu, var) = coefficient_moments(&self.gradient(w));
        Normalization {
            nu,
            sigma_tilde: (var + self.sigma2 / self.dim() as f64).sqrt(),
        }
    }

    fn spec(&self) -> TaskSpec {
        let w0 = self.initial_model();
        let norm = self.normalization(&w0);
        TaskSpec {
            f0: self.loss(&w0),
            f_star: 0.0,
            l0: self.l0,
            sigma2: self.sigma2,
            nu: norm.nu,
            sigma_tilde2: norm.sigma_tilde * norm.sigma_tilde,
        }
    }
}

impl QuadraticTask {
    /// Squared distance to the optimum, `2F(w)/L0`.
    pub fn distance_sq(&self, w: &[f64]) -> f64 {
        let d: Vec<f64> = w.iter().zip(&self.w_star).map(|(a, b)| a - b).collect();
        squared_norm(&d)
    }
}
