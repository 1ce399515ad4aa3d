//! Closed-form quantities of the spatial convergence analysis.
//!
//! Everything here is a pure function of a [`NetworkConfig`] and, for the
//! convergence bounds, a [`TaskSpec`]. Each operation has an independent
//! counterpart in [`crate::oracle`] or in the Monte Carlo validation suite.

mod closed_form;
mod latency;
mod report;
pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::{FeelError, Result};
use crate::scalar::Scalar;

pub use closed_form::{
    activation_stats, analog_bound, analog_eta, analog_interference_term,
    campbell_interference_moment, digital_bound, expected_inverse_count,
    expected_inverse_effective_rounds, expected_inverse_square_bound, high_mobility_bound,
    high_mobility_multiplier, interference_effect, success_probability, successful_device_stats,
    ActivationStats, DeviceStats, InverseEffectiveRounds, InverseSquareBound, PoissonLaw,
    SuccessProbability, HIGH_MOBILITY_VALIDITY_LIMIT,
};
pub use latency::{
    latency_report, per_round_latency, required_rounds_high, LatencyReport,
};
pub use report::{BoundReport, LatencyEntry};
pub use special::{beta, e1, ei, ei_regular_part, ei_scaled, ln_gamma};

/// Names of the closed-form operations; the validation registry must cover all of them.
pub const OPERATIONS: &[&str] = &[
    "exp_integral_ei",
    "beta_fn",
    "success_probability",
    "successful_device_stats",
    "expected_inverse_count",
    "digital_bound",
    "high_mobility_bound",
    "expected_inverse_effective_rounds",
    "activation_stats",
    "analog_eta",
    "campbell_interference_moment",
    "analog_bound",
    "interference_effect",
    "latency_report",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Digital,
    Analog,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mobility {
    Low,
    High,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Digital => "digital",
            Scheme::Analog => "analog",
        })
    }
}

impl std::fmt::Display for Mobility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mobility::Low => "low",
            Mobility::High => "high",
        })
    }
}

/// Network and protocol parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct NetworkConfig<T> {
    /// Device density (devices per unit area).
    pub lambda_d: T,
    /// Inscribed-disk radius, equal to the hexagon apothem.
    pub radius: T,
    /// FHSS processing gain (number of subcarriers).
    pub subcarriers: u32,
    /// Total bandwidth in Hz.
    pub bandwidth: T,
    /// SIR decoding threshold.
    pub theta: T,
    /// Path-loss exponent, must exceed 2.
    pub alpha: T,
    /// Transmit power (digital) or average power budget (analog).
    pub power: T,
    /// Channel truncation threshold for analog activation.
    pub g_th: T,
    /// Model dimension.
    pub dim: usize,
    /// Quantization bits per coefficient.
    pub bits: u32,
    pub t_cmp: T,
    pub t_bc: T,
    /// Allowed probability of missing the convergence target.
    pub delta: T,
    /// Target on the averaged squared gradient norm.
    pub epsilon0: T,
    /// Round budget.
    pub rounds: usize,
}

impl<T: Scalar> Default for NetworkConfig<T> {
    fn default() -> Self {
        Self {
            lambda_d: T::one(),
            radius: T::one(),
            subcarriers: 1,
            bandwidth: T::lit(1e6),
            theta: T::one(),
            alpha: T::lit(4.0),
            power: T::one(),
            g_th: T::one(),
            dim: 10,
            bits: 16,
            t_cmp: T::zero(),
            t_bc: T::zero(),
            delta: T::lit(0.5),
            epsilon0: T::one(),
            rounds: 100,
        }
    }
}

fn require<T: Scalar>(ok: bool, name: &'static str, reason: &str, value: T) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(FeelError::param(name, format!("{reason}, got {value}")))
    }
}

impl<T: Scalar> NetworkConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let finite = |v: T| v.is_finite();
        require(finite(self.lambda_d) && self.lambda_d >= z, "lambda_d", "must be finite and >= 0", self.lambda_d)?;
        require(finite(self.radius) && self.radius > z, "radius", "must be positive", self.radius)?;
        if self.subcarriers == 0 {
            return Err(FeelError::param("subcarriers", "must be at least 1"));
        }
        require(finite(self.bandwidth) && self.bandwidth > z, "bandwidth", "must be positive", self.bandwidth)?;
        require(finite(self.theta) && self.theta > z, "theta", "must be positive", self.theta)?;
        require(finite(self.alpha) && self.alpha > T::lit(2.0), "alpha", "must exceed 2", self.alpha)?;
        require(finite(self.power) && self.power > z, "power", "must be positive", self.power)?;
        require(finite(self.g_th) && self.g_th >= z, "g_th", "must be >= 0", self.g_th)?;
        if self.dim == 0 {
            return Err(FeelError::param("dim", "must be at least 1"));
        }
        if self.bits == 0 {
            return Err(FeelError::param("bits", "must be at least 1"));
        }
        require(finite(self.t_cmp) && self.t_cmp >= z, "t_cmp", "must be >= 0", self.t_cmp)?;
        require(finite(self.t_bc) && self.t_bc >= z, "t_bc", "must be >= 0", self.t_bc)?;
        require(self.delta > z && self.delta < T::one(), "delta", "must lie in (0, 1)", self.delta)?;
        require(finite(self.epsilon0) && self.epsilon0 > z, "epsilon0", "must be positive", self.epsilon0)?;
        if self.rounds == 0 {
            return Err(FeelError::param("rounds", "must be at least 1"));
        }
        Ok(())
    }

    /// Converts between scalar types.
    pub fn cast<U: Scalar>(&self) -> NetworkConfig<U> {
        let c = |v: T| U::lit(v.to_f64_lossy());
        NetworkConfig {
            lambda_d: c(self.lambda_d),
            radius: c(self.radius),
            subcarriers: self.subcarriers,
            bandwidth: c(self.bandwidth),
            theta: c(self.theta),
            alpha: c(self.alpha),
            power: c(self.power),
            g_th: c(self.g_th),
            dim: self.dim,
            bits: self.bits,
            t_cmp: c(self.t_cmp),
            t_bc: c(self.t_bc),
            delta: c(self.delta),
            epsilon0: c(self.epsilon0),
            rounds: self.rounds,
        }
    }
}

/// Learning-problem constants entering the bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec<T> {
    /// Loss at the initial model.
    pub f0: T,
    /// Lower bound on the loss.
    pub f_star: T,
    /// Largest per-coordinate smoothness constant.
    pub l0: T,
    /// Bound on a local gradient's variance (squared norm).
    pub sigma2: T,
    /// Per-coefficient gradient mean used for analog normalization.
    pub nu: T,
    /// Per-coefficient gradient variance used for analog normalization.
    pub sigma_tilde2: T,
}

impl<T: Scalar> TaskSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        require(self.f0.is_finite() && self.f_star.is_finite(), "f0", "loss constants must be finite", self.f0)?;
        require(self.f0 >= self.f_star, "f0", "must be >= f_star", self.f0)?;
        require(self.l0.is_finite() && self.l0 > z, "l0", "must be positive", self.l0)?;
        require(self.sigma2.is_finite() && self.sigma2 >= z, "sigma2", "must be >= 0", self.sigma2)?;
        require(
            self.sigma_tilde2.is_finite() && self.sigma_tilde2 >= z,
            "sigma_tilde2",
            "must be >= 0",
            self.sigma_tilde2,
        )?;
        require(self.nu.is_finite(), "nu", "must be finite", self.nu)?;
        Ok(())
    }

    /// Optimality gap `F0 - F*`.
    pub fn gap(&self) -> T {
        self.f0 - self.f_star
    }

    pub fn cast<U: Scalar>(&self) -> TaskSpec<U> {
        let c = |v: T| U::lit(v.to_f64_lossy());
        TaskSpec {
            f0: c(self.f0),
            f_star: c(self.f_star),
            l0: c(self.l0),
            sigma2: c(self.sigma2),
            nu: c(self.nu),
            sigma_tilde2: c(self.sigma_tilde2),
        }
    }
}
