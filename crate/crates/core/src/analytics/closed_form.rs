use serde::{Deserialize, Serialize};

use super::special::{beta, e1, ei_regular_part, ei_scaled, ln_gamma};
use super::{NetworkConfig, TaskSpec};
use crate::error::{FeelError, Result};
use crate::scalar::Scalar;

/// Above this void probability the dropped second-order term of the
/// high-mobility expansion is no longer negligible.
pub const HIGH_MOBILITY_VALIDITY_LIMIT: f64 = 0.2;

/// Poisson law of a device count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonLaw<T> {
    pub mean: T,
}

impl<T: Scalar> PoissonLaw<T> {
    pub fn pmf(&self, j: u64) -> T {
        if self.mean == T::zero() {
            return if j == 0 { T::one() } else { T::zero() };
        }
        let jf = T::lit(j as f64);
        let ln_fact = ln_gamma(jf + T::one()).expect("positive argument");
        (-self.mean + jf * self.mean.ln() - ln_fact).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessProbability<T> {
    pub p_s: T,
    /// Interference-limited decay rate of the success probability in `r²`.
    pub a: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceStats<T> {
    /// Mean number of successful in-disk devices per round.
    pub k_bar: T,
    pub p_null: T,
    /// Dense-network limit of `k_bar`.
    pub k_bar_limit: T,
    pub law: PoissonLaw<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationStats<T> {
    pub p_a: T,
    /// Mean number of active in-disk devices.
    pub k_bar_prime: T,
    pub p_null: T,
    pub law: PoissonLaw<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseEffectiveRounds<T> {
    pub exact: T,
    /// First-order expansion in the void probability.
    pub expansion: T,
}

/// Upper bounds on `E[1/K² | K > 0]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseSquareBound<T> {
    /// `4φ/K̄ - e^{-K̄}/(1-e^{-K̄})`.
    pub stated: T,
    /// `4φ/K̄ - 4e^{-K̄}/(1-e^{-K̄})`, the tighter chain.
    pub corrected: T,
}

fn check_alpha<T: Scalar>(function: &'static str, alpha: T) -> Result<()> {
    if alpha > T::lit(2.0) && alpha.is_finite() {
        Ok(())
    } else {
        Err(FeelError::domain(function, format!("requires alpha > 2, got {alpha}")))
    }
}

fn subcarriers<T: Scalar>(cfg: &NetworkConfig<T>) -> T {
    T::lit(cfg.subcarriers as f64)
}

/// `(1 - e^{-x})/x`, equal to 1 at `x = 0`.
fn one_minus_exp_over<T: Scalar>(x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        -(-x).exp_m1() / x
    }
}

/// `e^{-x}/(1 - e^{-x})`.
fn void_odds<T: Scalar>(x: T) -> T {
    T::one() / x.exp_m1()
}

pub fn success_probability<T: Scalar>(cfg: &NetworkConfig<T>) -> Result<SuccessProbability<T>> {
    check_alpha("success_probability", cfg.alpha)?;
    let two = T::lit(2.0);
    let delta = two / cfg.alpha;
    let b = beta(delta, T::one() - delta)?;
    let a = two * T::PI() * cfg.lambda_d * b * cfg.theta.powf(delta) / (cfg.alpha * subcarriers(cfg));
    let p_s = one_minus_exp_over(a * cfg.radius * cfg.radius);
    Ok(SuccessProbability { p_s, a })
}

pub fn successful_device_stats<T: Scalar>(cfg: &NetworkConfig<T>) -> Result<DeviceStats<T>> {
    let sp = success_probability(cfg)?;
    let k_bar = T::PI() * cfg.lambda_d * cfg.radius * cfg.radius * sp.p_s;
    let delta = T::lit(2.0) / cfg.alpha;
    let b = beta(delta, T::one() - delta)?;
    let k_bar_limit = cfg.alpha * subcarriers(cfg) / (T::lit(2.0) * b * cfg.theta.powf(delta));
    Ok(DeviceStats {
        k_bar,
        p_null: (-k_bar).exp(),
        k_bar_limit,
        law: PoissonLaw { mean: k_bar },
    })
}

/// `E[1/K | K > 0]` for `K ~ Poisson(mean)`.
pub fn expected_inverse_count<T: Scalar>(mean: T) -> Result<T> {
    if mean.is_nan() || mean <= T::zero() {
        return Err(FeelError::domain(
            "expected_inverse_count",
            format!("requires a positive mean, got {mean}"),
        ));
    }
    if mean <= T::lit(40.0) {
        Ok((-mean).exp() * ei_regular_part(mean) / -(-mean).exp_m1())
    } else {
        let log_part = (-mean).exp() * (mean.ln() + T::euler_gamma());
        Ok((ei_scaled(mean)? - log_part) / -(-mean).exp_m1())
    }
}

pub fn expected_inverse_square_bound<T: Scalar>(mean: T) -> Result<InverseSquareBound<T>> {
    let phi = expected_inverse_count(mean)?;
    let head = T::lit(4.0) * phi / mean;
    let odds = void_odds(mean);
    Ok(InverseSquareBound {
        stated: head - odds,
        corrected: head - T::lit(4.0) * odds,
    })
}

fn check_rounds(function: &'static str, n: usize, min: usize) -> Result<()> {
    if n >= min {
        Ok(())
    } else {
        Err(FeelError::domain(function, format!("requires N >= {min}, got {n}")))
    }
}

fn task_checked<T: Scalar>(function: &'static str, task: &TaskSpec<T>) -> Result<()> {
    task.validate()
        .map_err(|e| FeelError::domain(function, e.to_string()))
}

/// Bracket shared by the digital bounds: `(F0 - F*) + σ²·E[1/K | K>0]`.
pub(crate) fn digital_bracket<T: Scalar>(cfg: &NetworkConfig<T>, task: &TaskSpec<T>) -> Result<T> {
    let stats = successful_device_stats(cfg)?;
    let noise = if task.sigma2 == T::zero() {
        T::zero()
    } else {
        task.sigma2 * expected_inverse_count(stats.k_bar)?
    };
    Ok(task.gap() + noise)
}

/// Fixed-cell digital bound on the conditional averaged squared gradient norm.
pub fn digital_bound<T: Scalar>(cfg: &NetworkConfig<T>, task: &TaskSpec<T>, n: usize) -> Result<T> {
    check_rounds("digital_bound", n, 1)?;
    task_checked("digital_bound", task)?;
    Ok(digital_bracket(cfg, task)? / T::from_count(n).sqrt())
}

/// `√(1/N + p_null/(N-1))`.
pub fn high_mobility_multiplier<T: Scalar>(p_null: T, n: usize) -> Result<T> {
    check_rounds("high_mobility_multiplier", n, 2)?;
    let nf = T::from_count(n);
    Ok((T::one() / nf + p_null / (nf - T::one())).sqrt())
}

/// Digital bound when the cell is redrawn every round.
pub fn high_mobility_bound<T: Scalar>(cfg: &NetworkConfig<T>, task: &TaskSpec<T>, n: usize) -> Result<T> {
    check_rounds("high_mobility_bound", n, 2)?;
    task_checked("high_mobility_bound", task)?;
    let stats = successful_device_stats(cfg)?;
    Ok(high_mobility_multiplier(stats.p_null, n)? * digital_bracket(cfg, task)?)
}

/// `E[1/N_e | N_e ≥ 1]` with `N_e ~ Binomial(N, 1 - p_null)`.
pub fn expected_inverse_effective_rounds<T: Scalar>(
    p_null: T,
    n: usize,
) -> Result<InverseEffectiveRounds<T>> {
    check_rounds("expected_inverse_effective_rounds", n, 2)?;
    if p_null.is_nan() || p_null < T::zero() || p_null >= T::one() {
        return Err(FeelError::domain(
            "expected_inverse_effective_rounds",
            format!("requires 0 <= p_null < 1, got {p_null}"),
        ));
    }
    let nf = T::from_count(n);
    let p_n = p_null.powi(n as i32);
    let mut sum = T::zero();
    let mut p_pow = T::one();
    for i in 1..=n {
        sum += (p_pow - p_n) / T::from_count(n - i + 1);
        p_pow *= p_null;
    }
    Ok(InverseEffectiveRounds {
        exact: sum / (T::one() - p_n),
        expansion: T::one() / nf + p_null / (nf - T::one()),
    })
}

pub fn activation_stats<T: Scalar>(cfg: &NetworkConfig<T>) -> Result<ActivationStats<T>> {
    if cfg.g_th.is_nan() || cfg.g_th < T::zero() {
        return Err(FeelError::domain(
            "activation_stats",
            format!("requires g_th >= 0, got {}", cfg.g_th),
        ));
    }
    let p_a = (-cfg.g_th).exp();
    let k = T::PI() * cfg.radius * cfg.radius * cfg.lambda_d * p_a;
    Ok(ActivationStats {
        p_a,
        k_bar_prime: k,
        p_null: (-k).exp(),
        law: PoissonLaw { mean: k },
    })
}

/// Received-amplitude target of truncated channel inversion meeting the
/// average power budget.
pub fn analog_eta<T: Scalar>(cfg: &NetworkConfig<T>) -> Result<T> {
    if cfg.g_th.is_nan() || cfg.g_th <= T::zero() {
        return Err(FeelError::domain(
            "analog_eta",
            format!("requires g_th > 0, got {}", cfg.g_th),
        ));
    }
    Ok(cfg.power * (cfg.alpha + T::lit(2.0))
        / (T::lit(2.0) * cfg.radius.powf(cfg.alpha) * e1(cfg.g_th)?))
}

/// Mean interference power outside the disk, per coefficient.
pub fn campbell_interference_moment<T: Scalar>(cfg: &NetworkConfig<T>) -> Result<T> {
    if !(cfg.alpha > T::lit(2.0)) {
        return Err(FeelError::domain(
            "campbell_interference_moment",
            format!("integral diverges for alpha <= 2, got {}", cfg.alpha),
        ));
    }
    let two = T::lit(2.0);
    Ok(two * T::PI() * cfg.lambda_d * cfg.power * cfg.radius.powf(two - cfg.alpha)
        / ((cfg.alpha - two) * subcarriers(cfg)))
}

/// Shared prefactor `16·σ̃²·E1(g_th)/(p_a(α²-4)M)`.
fn interference_prefactor<T: Scalar>(cfg: &NetworkConfig<T>, task: &TaskSpec<T>) -> Result<(T, ActivationStats<T>)> {
    check_alpha("analog_bound", cfg.alpha)?;
    if cfg.g_th.is_nan() || cfg.g_th <= T::zero() {
        return Err(FeelError::domain(
            "analog_bound",
            format!("requires g_th > 0, got {}", cfg.g_th),
        ));
    }
    let act = activation_stats(cfg)?;
    let pre = T::lit(16.0) * task.sigma_tilde2 * e1(cfg.g_th)?
        / (act.p_a * (cfg.alpha * cfg.alpha - T::lit(4.0)) * subcarriers(cfg));
    Ok((pre, act))
}

/// Interference part of the analog bracket.
pub fn analog_interference_term<T: Scalar>(cfg: &NetworkConfig<T>, task: &TaskSpec<T>) -> Result<T> {
    let (pre, act) = interference_prefactor(cfg, task)?;
    let k = act.k_bar_prime;
    let phi = expected_inverse_count(k)?;
    Ok(pre * (phi - k * void_odds(k)))
}

pub(crate) fn analog_bracket<T: Scalar>(cfg: &NetworkConfig<T>, task: &TaskSpec<T>) -> Result<T> {
    let act = activation_stats(cfg)?;
    let phi = expected_inverse_count(act.k_bar_prime)?;
    Ok(task.gap() + task.sigma2 * phi + analog_interference_term(cfg, task)?)
}

/// Fixed-cell analog bound with over-the-air aggregation.
pub fn analog_bound<T: Scalar>(cfg: &NetworkConfig<T>, task: &TaskSpec<T>, n: usize) -> Result<T> {
    check_rounds("analog_bound", n, 1)?;
    task_checked("analog_bound", task)?;
    Ok(analog_bracket(cfg, task)? / T::from_count(n).sqrt())
}

/// Ratio of interference-induced to data-induced deviation in the analog bound.
pub fn interference_effect<T: Scalar>(cfg: &NetworkConfig<T>, task: &TaskSpec<T>) -> Result<T> {
    task_checked("interference_effect", task)?;
    if !(task.sigma2 > T::zero()) {
        return Err(FeelError::domain(
            "interference_effect",
            "requires sigma2 > 0 (data-induced deviation is the denominator)",
        ));
    }
    let (pre, act) = interference_prefactor(cfg, task)?;
    let k = act.k_bar_prime;
    let phi = expected_inverse_count(k)?;
    // K̄'/(Ei(K̄') - ln K̄' - γ) written through φ so it stays finite for large K̄'.
    let ratio = k * void_odds(k) / phi;
    Ok(pre / task.sigma2 * (T::one() - ratio))
}
