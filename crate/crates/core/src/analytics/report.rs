use serde::{Deserialize, Serialize};

use super::closed_form::*;
use super::latency::latency_report;
use super::{Mobility, NetworkConfig, Scheme, TaskSpec};
use crate::error::{FeelError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyEntry<T> {
    pub scheme: Scheme,
    pub mobility: Mobility,
    pub per_round_latency: T,
    pub n_min_upper: Option<T>,
    pub total_latency_upper: Option<T>,
    /// Set when the spatial criterion cannot be met for this combination.
    pub infeasible: Option<String>,
}

/// Every closed form evaluated for one configuration.
///
/// Optional fields are `None` when the quantity is undefined for the
/// configuration (for instance an empty network or `g_th = 0`); the
/// reason is listed in `notes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub rounds: usize,
    pub p_s: T,
    pub a: T,
    pub k_bar: T,
    pub k_bar_limit: T,
    pub p_null: T,
    pub p_a: T,
    pub k_bar_prime: T,
    pub p_null_analog: T,
    pub e_inv_k: Option<T>,
    pub phi: Option<T>,
    pub eta: Option<T>,
    pub interference_moment: T,
    pub digital_bound: Option<T>,
    pub analog_bound: Option<T>,
    pub high_mobility_bound: Option<T>,
    /// False when the void probability is too large for the first-order expansion.
    pub high_mobility_valid: bool,
    pub inverse_effective_rounds: Option<InverseEffectiveRounds<T>>,
    pub interference_effect: Option<T>,
    pub latency: Vec<LatencyEntry<T>>,
    pub notes: Vec<String>,
}

fn keep<T>(notes: &mut Vec<String>, label: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{label}: {e}"));
            None
        }
    }
}

impl<T: Scalar> BoundReport<T> {
    pub fn compute(cfg: &NetworkConfig<T>, task: &TaskSpec<T>) -> Result<Self> {
        cfg.validate()?;
        task.validate()?;
        let n = cfg.rounds;
        let mut notes = Vec::new();

        let sp = success_probability(cfg)?;
        let dev = successful_device_stats(cfg)?;
        let act = activation_stats(cfg)?;

        let e_inv_k = keep(&mut notes, "e_inv_k", expected_inverse_count(dev.k_bar));
        let phi = keep(&mut notes, "phi", expected_inverse_count(act.k_bar_prime));
        let eta = keep(&mut notes, "eta", analog_eta(cfg));
        let digital = keep(&mut notes, "digital_bound", digital_bound(cfg, task, n));
        let analog = keep(&mut notes, "analog_bound", analog_bound(cfg, task, n));
        let high = if n >= 2 {
            keep(&mut notes, "high_mobility_bound", high_mobility_bound(cfg, task, n))
        } else {
            notes.push("high_mobility_bound: requires at least 2 rounds".into());
            None
        };
        let high_valid = dev.p_null.to_f64_lossy() <= HIGH_MOBILITY_VALIDITY_LIMIT;
        if !high_valid {
            notes.push(format!(
                "high_mobility_bound: void probability {} exceeds {HIGH_MOBILITY_VALIDITY_LIMIT}; second-order terms not negligible",
                dev.p_null
            ));
        }
        let inv_rounds = if n >= 2 {
            keep(
                &mut notes,
                "inverse_effective_rounds",
                expected_inverse_effective_rounds(dev.p_null, n),
            )
        } else {
            None
        };
        let effect = keep(&mut notes, "interference_effect", interference_effect(cfg, task));

        let mut latency = Vec::new();
        for scheme in [Scheme::Digital, Scheme::Analog] {
            for mobility in [Mobility::Low, Mobility::High] {
                let per_round = super::latency::per_round_latency(cfg, scheme);
                let entry = match latency_report(cfg, task, scheme, mobility) {
                    Ok(r) => LatencyEntry {
                        scheme,
                        mobility,
                        per_round_latency: per_round,
                        n_min_upper: Some(r.n_min_upper),
                        total_latency_upper: Some(r.total_latency_upper),
                        infeasible: None,
                    },
                    Err(e) => {
                        if !matches!(e, FeelError::Infeasible { .. }) {
                            notes.push(format!("latency {scheme}/{mobility}: {e}"));
                        }
                        LatencyEntry {
                            scheme,
                            mobility,
                            per_round_latency: per_round,
                            n_min_upper: None,
                            total_latency_upper: None,
                            infeasible: Some(e.to_string()),
                        }
                    }
                };
                latency.push(entry);
            }
        }

        Ok(Self {
            rounds: n,
            p_s: sp.p_s,
            a: sp.a,
            k_bar: dev.k_bar,
            k_bar_limit: dev.k_bar_limit,
            p_null: dev.p_null,
            p_a: act.p_a,
            k_bar_prime: act.k_bar_prime,
            p_null_analog: act.p_null,
            e_inv_k,
            phi,
            eta,
            interference_moment: campbell_interference_moment(cfg)?,
            digital_bound: digital,
            analog_bound: analog,
            high_mobility_bound: high,
            high_mobility_valid: high_valid,
            inverse_effective_rounds: inv_rounds,
            interference_effect: effect,
            latency,
            notes,
        })
    }

    pub fn latency_for(&self, scheme: Scheme, mobility: Mobility) -> Option<&LatencyEntry<T>> {
        self.latency
            .iter()
            .find(|e| e.scheme == scheme && e.mobility == mobility)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task() -> TaskSpec<f64> {
        TaskSpec { f0: 1.0, f_star: 0.0, l0: 0.5, sigma2: 1.0, nu: 0.0, sigma_tilde2: 1.0 }
    }

    #[test]
    fn default_report_values() {
        let rep = BoundReport::compute(&NetworkConfig::default(), &task()).unwrap();
        assert!((rep.p_s - 0.2012).abs() < 1e-4);
        assert!((rep.k_bar - 0.6320).abs() < 1e-4);
        assert!((rep.p_a - 0.367_879).abs() < 1e-6);
        assert!(rep.k_bar <= rep.k_bar_limit);
        for p in [rep.p_s, rep.p_null, rep.p_a, rep.p_null_analog] {
            assert!((0.0..=1.0).contains(&p));
        }
        assert!(rep.digital_bound.unwrap() >= 0.0 && rep.analog_bound.unwrap() >= 0.0);
        // p_null ≈ 0.53 > δ = 0.5: low-mobility digital latency is infeasible.
        let low = rep.latency_for(Scheme::Digital, Mobility::Low).unwrap();
        assert!(low.infeasible.is_some() && low.n_min_upper.is_none());
        assert!(!rep.high_mobility_valid);
    }

    #[test]
    fn empty_network_reports_notes_instead_of_failing() {
        let cfg = NetworkConfig { lambda_d: 0.0, ..NetworkConfig::default() };
        let rep = BoundReport::compute(&cfg, &task()).unwrap();
        assert_eq!(rep.k_bar, 0.0);
        assert!(rep.e_inv_k.is_none() && !rep.notes.is_empty());
    }

    #[test]
    fn report_rejects_invalid_config() {
        let cfg = NetworkConfig { alpha: 2.0, ..NetworkConfig::<f64>::default() };
        assert!(BoundReport::compute(&cfg, &task()).is_err());
    }
}
