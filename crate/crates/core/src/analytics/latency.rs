use serde::{Deserialize, Serialize};

use super::closed_form::{activation_stats, analog_bracket, digital_bracket, successful_device_stats};
use super::{Mobility, NetworkConfig, Scheme, TaskSpec};
use crate::error::{FeelError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport<T> {
    pub scheme: Scheme,
    pub mobility: Mobility,
    /// Seconds per round, constant over rounds.
    pub per_round_latency: T,
    /// Upper bound on the expected number of rounds to meet the spatial criterion.
    pub n_min_upper: T,
    pub total_latency_upper: T,
}

/// Seconds per round: upload plus computation plus broadcast.
///
/// The digital rate uses `log2(1 + θ)` bits per channel use, since the
/// payload is counted in bits.
pub fn per_round_latency<T: Scalar>(cfg: &NetworkConfig<T>, scheme: Scheme) -> T {
    let m = T::lit(cfg.subcarriers as f64);
    let s = T::from_count(cfg.dim);
    let upload = match scheme {
        Scheme::Digital => {
            s * T::lit(cfg.bits as f64) * m / (cfg.bandwidth * (T::one() + cfg.theta).log2())
        }
        Scheme::Analog => s * m / cfg.bandwidth,
    };
    upload + cfg.t_cmp + cfg.t_bc
}

/// `(δ - p)ε0/(1 - p)`, the conditional target implied by the spatial criterion.
fn conditional_target<T: Scalar>(delta: T, p: T, epsilon0: T) -> T {
    (delta - p) * epsilon0 / (T::one() - p)
}

/// Smallest real `N > 1` with `√(1/N + p/(N-1))·bracket ≤ (δ - p^N)ε0/(1 - p^N)`.
pub fn required_rounds_high<T: Scalar>(bracket: T, p_null: T, delta: T, epsilon0: T) -> Result<T> {
    if !(p_null < T::one()) {
        return Err(FeelError::Infeasible {
            delta: delta.to_f64_lossy(),
            p_null: p_null.to_f64_lossy(),
        });
    }
    if p_null == T::zero() {
        let r = bracket / (delta * epsilon0);
        return Ok(r * r);
    }
    let excess = |n: T| {
        let mult = (T::one() / n + p_null / (n - T::one())).sqrt();
        let pn = p_null.powf(n);
        mult * bracket - conditional_target(delta, pn, epsilon0)
    };
    let mut lo = T::one();
    let mut hi = T::lit(2.0);
    let mut guard = 0;
    while excess(hi) > T::zero() {
        lo = hi;
        hi = hi * T::lit(2.0);
        guard += 1;
        if guard > 200 || !hi.is_finite() {
            return Err(FeelError::Infeasible {
                delta: delta.to_f64_lossy(),
                p_null: p_null.to_f64_lossy(),
            });
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

pub fn latency_report<T: Scalar>(
    cfg: &NetworkConfig<T>,
    task: &TaskSpec<T>,
    scheme: Scheme,
    mobility: Mobility,
) -> Result<LatencyReport<T>> {
    task.validate()?;
    let (bracket, p_null) = match scheme {
        Scheme::Digital => (digital_bracket(cfg, task)?, successful_device_stats(cfg)?.p_null),
        Scheme::Analog => (analog_bracket(cfg, task)?, activation_stats(cfg)?.p_null),
    };
    let n_min_upper = match mobility {
        Mobility::Low => {
            if cfg.delta <= p_null {
                return Err(FeelError::Infeasible {
                    delta: cfg.delta.to_f64_lossy(),
                    p_null: p_null.to_f64_lossy(),
                });
            }
            let r = bracket / conditional_target(cfg.delta, p_null, cfg.epsilon0);
            r * r
        }
        Mobility::High => required_rounds_high(bracket, p_null, cfg.delta, cfg.epsilon0)?,
    };
    let per_round = per_round_latency(cfg, scheme);
    Ok(LatencyReport {
        scheme,
        mobility,
        per_round_latency: per_round,
        n_min_upper,
        total_latency_upper: n_min_upper * per_round,
    })
}
