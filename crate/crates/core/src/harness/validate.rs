//! Check registry binding every closed form to an independent oracle or a
//! Monte Carlo estimate.
//!
//! Each `check_*` function takes explicit sample sizes so callers can pin
//! them; [`REGISTRY`] runs them at sizes scaled by [`ValidationSettings`].
//! Monte Carlo tolerances are `max(3·SE, relative floor)`.

use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    self, activation_stats, analog_bound, analog_eta, beta, campbell_interference_moment, digital_bound, ei,
    expected_inverse_count, expected_inverse_effective_rounds, high_mobility_bound, interference_effect,
    latency_report, required_rounds_high, success_probability, successful_device_stats, Mobility, Scheme,
};
use crate::channel::{annulus_interference_power, interference_vector_from_power, matched_field_success, TRUNCATION_RADIUS};
use crate::error::Result;
use crate::geometry::{sample_disk_distance, sample_ppp_in_disk};
use crate::learning::{aggregate_digital, analog_uplink, AnalogDevice, LearningTask, QuadraticTask};
use crate::oracle;
use crate::rng::{child_rng, rng_from_seed, SimRng};
use crate::simulator::{rounds_to_target, run_spatial_experiment, trial_seed, RunOptions, Simulation};
use crate::{NetworkConfig, TaskSpec};

/// Arguments of the `Ei` comparison, spanning both series branches and `E1`.
pub const EI_GRID: &[f64] = &[-30.0, -5.0, -1.5, -1.0, -0.3, 0.01, 0.5, 1.0, 2.5, 5.0, 10.0, 20.0, 39.0, 41.0, 60.0];
/// `(x, y)` pairs for the beta comparison; includes `(2/α, 1 - 2/α)` for α = 2.5, 3, 5, 8.
pub const BETA_GRID: &[(f64, f64)] = &[
    (0.5, 0.5),
    (1.0, 1.0),
    (2.0, 3.0),
    (0.8, 0.2),
    (2.0 / 3.0, 1.0 / 3.0),
    (0.4, 0.6),
    (0.25, 0.75),
    (1.5, 2.5),
    (3.7, 0.9),
];
pub const INVERSE_COUNT_GRID: &[f64] = &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0];
pub const SPECIAL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub operations: Vec<String>,
    pub analytic: f64,
    pub empirical: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub samples: u64,
    pub detail: String,
}

impl CheckRecord {
    fn new(name: impl Into<String>, ops: &[&str], analytic: f64, empirical: f64, tolerance: f64, passed: bool) -> Self {
        Self {
            name: name.into(),
            operations: ops.iter().map(|s| s.to_string()).collect(),
            analytic,
            empirical,
            tolerance,
            passed,
            samples: 0,
            detail: String::new(),
        }
    }

    fn samples(mut self, n: usize) -> Self {
        self.samples = n as u64;
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    /// `|empirical - analytic| <= tolerance`.
    fn within(name: impl Into<String>, ops: &[&str], analytic: f64, empirical: f64, tolerance: f64) -> Self {
        let passed = (empirical - analytic).abs() <= tolerance;
        Self::new(name, ops, analytic, empirical, tolerance, passed)
    }

    fn relative(name: impl Into<String>, ops: &[&str], analytic: f64, empirical: f64, rel: f64) -> Self {
        Self::within(name, ops, analytic, empirical, rel * analytic.abs())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckRecord>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationSettings {
    /// Multiplies every Monte Carlo sample size; 1 is the full suite.
    pub scale: f64,
    pub seed: u64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self { scale: 1.0, seed: 0 }
    }
}

impl ValidationSettings {
    fn n(&self, full: usize) -> usize {
        ((full as f64 * self.scale).round() as usize).max(1)
    }
}

pub struct CheckSpec {
    pub name: &'static str,
    pub operations: &'static [&'static str],
    pub run: fn(&ValidationSettings) -> Result<Vec<CheckRecord>>,
}

pub const REGISTRY: &[CheckSpec] = &[
    CheckSpec {
        name: "special_functions",
        operations: &["exp_integral_ei", "beta_fn"],
        run: |_| check_special_functions(),
    },
    CheckSpec {
        name: "success_probability",
        operations: &["success_probability"],
        run: |s| {
            let mut out = Vec::new();
            for (i, cfg) in success_probability_grid().iter().enumerate() {
                out.push(check_success_probability(cfg, s.n(100_000), child_seed(s.seed, 1, i))?);
            }
            Ok(out)
        },
    },
    CheckSpec {
        name: "device_count_pmf",
        operations: &["successful_device_stats", "activation_stats"],
        run: |s| {
            let mut out = Vec::new();
            for (i, (cfg, scheme)) in device_count_cases().into_iter().enumerate() {
                out.push(check_device_count_pmf(&cfg, scheme, s.n(10_000), child_seed(s.seed, 2, i))?);
            }
            Ok(out)
        },
    },
    CheckSpec {
        name: "dense_limit",
        operations: &["successful_device_stats"],
        run: |_| check_dense_limit(),
    },
    CheckSpec {
        name: "inverse_count_identity",
        operations: &["expected_inverse_count"],
        run: |_| check_inverse_count_identity(),
    },
    CheckSpec {
        name: "inverse_effective_rounds",
        operations: &["expected_inverse_effective_rounds"],
        run: |_| check_inverse_effective_rounds(),
    },
    CheckSpec {
        name: "interference_moment",
        operations: &["campbell_interference_moment"],
        run: |s| {
            let mut out = Vec::new();
            for (i, cfg) in campbell_cases().iter().enumerate() {
                out.push(check_campbell_moment(cfg, s.n(20_000), child_seed(s.seed, 3, i))?);
            }
            Ok(out)
        },
    },
    CheckSpec {
        name: "truncated_inversion_power",
        operations: &["analog_eta"],
        run: |s| {
            let mut out = Vec::new();
            for (i, cfg) in inversion_cases().iter().enumerate() {
                out.push(check_truncated_inversion_power(cfg, s.n(1_000_000), child_seed(s.seed, 4, i))?);
            }
            Ok(out)
        },
    },
    CheckSpec {
        name: "aggregation_unbiased",
        operations: &[],
        run: |s| check_aggregation_unbiased(s.n(10_000), child_seed(s.seed, 5, 0)),
    },
    CheckSpec {
        name: "aggregation_variance",
        operations: &[],
        run: |s| check_aggregation_variance(s.n(10_000), 50, child_seed(s.seed, 6, 0)),
    },
    CheckSpec {
        name: "convergence_bounds",
        operations: &["digital_bound", "high_mobility_bound", "analog_bound"],
        run: |s| check_convergence_bounds(&[25, 100], s.n(5), 200, child_seed(s.seed, 7, 0)),
    },
    CheckSpec {
        name: "interference_effect",
        operations: &["interference_effect"],
        run: |_| check_interference_effect(),
    },
    CheckSpec {
        name: "latency",
        operations: &["latency_report"],
        run: |s| check_latency(s.n(200), child_seed(s.seed, 8, 0)),
    },
];

fn child_seed(base: u64, check: u64, case: usize) -> u64 {
    crate::rng::derive_seed(base, &[check, case as u64])
}

/// Runs every registered check.
pub fn run_validation(settings: &ValidationSettings) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    for spec in REGISTRY {
        checks.extend((spec.run)(settings)?);
    }
    Ok(ValidationReport { checks })
}

/// Monte Carlo over `total` draws split into fixed chunks with their own
/// streams, so the result does not depend on the worker count.
fn chunked<T, F>(seed: u64, total: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SimRng, usize) -> T + Sync,
{
    let chunks = total.div_ceil(chunk);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = chunk.min(total - c * chunk);
            let mut rng = child_rng(seed, &[c as u64]);
            f(&mut rng, n)
        })
        .collect()
}

// ---------------------------------------------------------------- special functions

pub fn check_special_functions() -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for &x in EI_GRID {
        let closed = ei(x)?;
        let quad = oracle::ei_quadrature(x);
        out.push(CheckRecord::relative(format!("ei(x={x})"), &["exp_integral_ei"], closed, quad, SPECIAL_TOLERANCE));
    }
    for &(x, y) in BETA_GRID {
        let closed = beta(x, y)?;
        let quad = oracle::beta_quadrature(x, y);
        out.push(CheckRecord::relative(format!("beta({x:.4},{y:.4})"), &["beta_fn"], closed, quad, SPECIAL_TOLERANCE));
    }
    out.push(CheckRecord::relative(
        "beta(1/2,1/2)=pi",
        &["beta_fn"],
        std::f64::consts::PI,
        beta(0.5, 0.5)?,
        SPECIAL_TOLERANCE,
    ));
    Ok(out)
}

// ---------------------------------------------------------------- success probability

pub fn success_probability_grid() -> Vec<NetworkConfig> {
    let mut out = Vec::new();
    for &lambda_d in &[0.5, 1.0, 5.0] {
        for &subcarriers in &[1, 4] {
            for &theta in &[0.5, 1.0, 4.0] {
                out.push(NetworkConfig { lambda_d, subcarriers, theta, ..Default::default() });
            }
        }
    }
    out
}

/// Fraction of uniformly placed disk devices whose SIR against an
/// independent co-channel field reaches `θ`.
pub fn check_success_probability(cfg: &NetworkConfig, trials: usize, seed: u64) -> Result<CheckRecord> {
    let p_s = success_probability(cfg)?.p_s;
    let density = cfg.lambda_d / cfg.subcarriers as f64;
    let hits: usize = chunked(seed, trials, 5_000, |rng, n| {
        (0..n)
            .filter(|_| {
                let r = sample_disk_distance(cfg.radius, rng);
                let g: f64 = Exp1.sample(rng);
                matched_field_success(r, g, density, cfg.alpha, cfg.theta, rng)
            })
            .count()
    })
    .into_iter()
    .sum();
    let p_hat = hits as f64 / trials as f64;
    let se = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
    let tol = (3.0 * se).max(0.03 * p_s);
    Ok(CheckRecord::within(
        format!("success_probability(lambda={},M={},theta={})", cfg.lambda_d, cfg.subcarriers, cfg.theta),
        &["success_probability"],
        p_s,
        p_hat,
        tol,
    )
    .samples(trials))
}

// ---------------------------------------------------------------- device counts

pub fn device_count_cases() -> Vec<(NetworkConfig, Scheme)> {
    let base = NetworkConfig::default();
    let dense = NetworkConfig { lambda_d: 5.0, subcarriers: 4, theta: 0.5, ..Default::default() };
    vec![
        (base.clone(), Scheme::Digital),
        (dense.clone(), Scheme::Digital),
        (base, Scheme::Analog),
        (dense, Scheme::Analog),
    ]
}

/// Count of devices that get through in one realization of the disk.
fn device_count(cfg: &NetworkConfig, scheme: Scheme, rng: &mut SimRng) -> Result<usize> {
    let devices = sample_ppp_in_disk(cfg.lambda_d, cfg.radius, rng)?;
    let density = cfg.lambda_d / cfg.subcarriers as f64;
    Ok(devices
        .iter()
        .filter(|p| {
            let g: f64 = Exp1.sample(rng);
            match scheme {
                Scheme::Digital => matched_field_success(p.norm(), g, density, cfg.alpha, cfg.theta, rng),
                Scheme::Analog => g >= cfg.g_th,
            }
        })
        .count())
}

/// Chi-square fit of realized device counts to the Poisson law at 1%.
pub fn check_device_count_pmf(cfg: &NetworkConfig, scheme: Scheme, realizations: usize, seed: u64) -> Result<CheckRecord> {
    let (mean, op) = match scheme {
        Scheme::Digital => (successful_device_stats(cfg)?.k_bar, "successful_device_stats"),
        Scheme::Analog => (activation_stats(cfg)?.k_bar_prime, "activation_stats"),
    };
    let counts: Vec<usize> = chunked(seed, realizations, 1_000, |rng, n| {
        (0..n).map(|_| device_count(cfg, scheme, rng)).collect::<Result<Vec<_>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?
    .concat();
    let fit = oracle::chi_square_poisson(&counts, mean);
    let empirical = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    Ok(CheckRecord::new(
        format!("device_count_pmf({scheme},lambda={},M={},theta={})", cfg.lambda_d, cfg.subcarriers, cfg.theta),
        &[op],
        mean,
        empirical,
        0.01,
        fit.p_value >= 0.01,
    )
    .samples(realizations)
    .detail(format!("chi2 = {:.3}, dof = {}, p = {:.4}", fit.statistic, fit.dof, fit.p_value)))
}

pub fn check_dense_limit() -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for &(m, theta) in &[(1u32, 1.0), (2, 4.0), (4, 0.5)] {
        let cfg = NetworkConfig { lambda_d: 1e3, subcarriers: m, theta, ..Default::default() };
        let stats = successful_device_stats(&cfg)?;
        let limit = 2.0 * m as f64 / (std::f64::consts::PI * theta.sqrt());
        out.push(CheckRecord::relative(
            format!("dense_limit(M={m},theta={theta})"),
            &["successful_device_stats"],
            limit,
            stats.k_bar,
            0.01,
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------- identities

pub fn check_inverse_count_identity() -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for &k in INVERSE_COUNT_GRID {
        out.push(CheckRecord::within(
            format!("inverse_count(mean={k})"),
            &["expected_inverse_count"],
            expected_inverse_count(k)?,
            oracle::inverse_count_poisson_sum(k),
            SPECIAL_TOLERANCE,
        ));
    }
    // Quoted to four significant figures.
    out.push(CheckRecord::within(
        "inverse_count_spot(mean=1)",
        &["expected_inverse_count"],
        0.76700,
        expected_inverse_count(1.0)?,
        5e-5,
    ));
    Ok(out)
}

pub fn check_inverse_effective_rounds() -> Result<Vec<CheckRecord>> {
    let ops = &["expected_inverse_effective_rounds"];
    let mut out = Vec::new();
    for &p in &[0.0, 0.05, 0.1, 0.2, 0.5, 0.9] {
        for &n in &[2usize, 5, 10, 50, 100] {
            let closed = expected_inverse_effective_rounds(p, n)?;
            out.push(CheckRecord::within(
                format!("inverse_effective_rounds(p={p},N={n})"),
                ops,
                closed.exact,
                oracle::inverse_effective_rounds_binomial(p, n as u32),
                1e-12,
            ));
            if p > 0.0 && p <= 0.2 {
                // Second-order remainder: |exact - expansion| <= p².
                let err = (closed.exact - closed.expansion).abs();
                out.push(
                    CheckRecord::new(format!("expansion_error(p={p},N={n})"), ops, p * p, err, p * p, err <= p * p)
                        .detail("passes when the expansion error is at most p_null^2"),
                );
            }
        }
    }
    let spot = expected_inverse_effective_rounds(0.1, 10)?;
    out.push(CheckRecord::within("inverse_effective_rounds_spot(p=0.1,N=10)", ops, 0.112523, spot.exact, 5e-7));
    out.push(CheckRecord::within("expansion_spot(p=0.1,N=10)", ops, 0.111111, spot.expansion, 5e-7));
    Ok(out)
}

// ---------------------------------------------------------------- analog moments

pub fn campbell_cases() -> Vec<NetworkConfig> {
    vec![
        NetworkConfig::default(),
        NetworkConfig { lambda_d: 3.0, subcarriers: 2, power: 2.0, ..Default::default() },
    ]
}

/// Mean shot-noise power of co-channel devices outside the disk.
pub fn check_campbell_moment(cfg: &NetworkConfig, draws: usize, seed: u64) -> Result<CheckRecord> {
    let analytic = campbell_interference_moment(cfg)?;
    let density = cfg.lambda_d / cfg.subcarriers as f64;
    let samples: Vec<f64> = chunked(seed, draws, 1_000, |rng, n| {
        (0..n)
            .map(|_| annulus_interference_power(density, cfg.radius, TRUNCATION_RADIUS, cfg.alpha, cfg.power, None, rng))
            .collect::<Vec<_>>()
    })
    .concat();
    let (mean, se) = oracle::mean_and_se(&samples);
    Ok(CheckRecord::within(
        format!("interference_moment(lambda={},M={},P={})", cfg.lambda_d, cfg.subcarriers, cfg.power),
        &["campbell_interference_moment"],
        analytic,
        mean,
        (3.0 * se).max(0.03 * analytic),
    )
    .samples(draws))
}

pub fn inversion_cases() -> Vec<NetworkConfig> {
    vec![
        NetworkConfig::default(),
        NetworkConfig { g_th: 0.5, alpha: 3.0, power: 2.0, ..Default::default() },
    ]
}

/// Mean transmit power under truncated channel inversion equals the budget.
pub fn check_truncated_inversion_power(cfg: &NetworkConfig, draws: usize, seed: u64) -> Result<CheckRecord> {
    let eta = analog_eta(cfg)?;
    let samples: Vec<f64> = chunked(seed, draws, 50_000, |rng, n| {
        (0..n)
            .map(|_| {
                let r = sample_disk_distance(cfg.radius, rng);
                let g: f64 = Exp1.sample(rng);
                if g >= cfg.g_th {
                    eta * r.powf(cfg.alpha) / g
                } else {
                    0.0
                }
            })
            .collect::<Vec<_>>()
    })
    .concat();
    let (mean, se) = oracle::mean_and_se(&samples);
    Ok(CheckRecord::within(
        format!("mean_tx_power(g_th={},alpha={},P={})", cfg.g_th, cfg.alpha, cfg.power),
        &["analog_eta"],
        cfg.power,
        mean,
        (3.0 * se).max(0.02 * cfg.power),
    )
    .samples(draws)
    .detail(format!("eta = {eta:.6}")))
}

// ---------------------------------------------------------------- aggregation

fn aggregation_task(dim: usize, sigma2: f64, seed: u64) -> Result<QuadraticTask> {
    QuadraticTask::random(dim, 0.5, sigma2, &mut rng_from_seed(seed))
}

/// Analog devices in the disk, all above the truncation threshold.
fn active_analog_devices(task: &QuadraticTask, w: &[f64], k: usize, cfg: &NetworkConfig, rng: &mut SimRng) -> Vec<AnalogDevice> {
    (0..k)
        .map(|i| {
            let extra: f64 = Exp1.sample(rng);
            AnalogDevice {
                gradient: task.local_gradient(w, i as u64, rng),
                // Exponential gains are memoryless above the threshold.
                gain: cfg.g_th + extra,
                distance: sample_disk_distance(cfg.radius, rng),
            }
        })
        .collect()
}

fn analog_draw(task: &QuadraticTask, w: &[f64], k: usize, cfg: &NetworkConfig, outer: f64, eta: f64, rng: &mut SimRng) -> Result<Vec<f64>> {
    let devices = active_analog_devices(task, w, k, cfg, rng);
    let density = cfg.lambda_d / cfg.subcarriers as f64;
    let power = annulus_interference_power(density, cfg.radius, outer, cfg.alpha, cfg.power, None, rng);
    let noise = interference_vector_from_power(power, task.dim(), rng);
    let norm = task.normalization(w);
    Ok(analog_uplink(&devices, eta, cfg.g_th, cfg.alpha, &noise, norm.nu, norm.sigma_tilde)?
        .expect("all devices active")
        .g_bar)
}

/// Mean aggregate over many rounds at a fixed model equals `∇F(w)`.
pub fn check_aggregation_unbiased(draws: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let task = aggregation_task(5, 1.0, seed)?;
    let w = vec![0.3; 5];
    let truth = task.gradient(&w);
    let cfg = NetworkConfig::default();
    let eta = analog_eta(&cfg)?;
    let mut out = Vec::new();
    for scheme in [Scheme::Digital, Scheme::Analog] {
        let samples: Vec<Vec<f64>> = chunked(child_seed(seed, scheme as u64, 0), draws, 1_000, |rng, n| {
            (0..n)
                .map(|_| match scheme {
                    Scheme::Digital => {
                        let grads: Vec<_> = (0..3).map(|i| task.local_gradient(&w, i, rng)).collect();
                        Ok(aggregate_digital(&grads).expect("three gradients"))
                    }
                    Scheme::Analog => analog_draw(&task, &w, 3, &cfg, TRUNCATION_RADIUS, eta, rng),
                })
                .collect::<Result<Vec<_>>>()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .concat();
        for (i, &t) in truth.iter().enumerate() {
            let coef: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            let (mean, se) = oracle::mean_and_se(&coef);
            out.push(
                CheckRecord::within(format!("unbiased({scheme},coef={i})"), &[], t, mean, 3.0 * se).samples(draws),
            );
        }
    }
    Ok(out)
}

/// Share of batch MSE estimates within `bound + max(3·SE, 5%)`.
fn batch_pass_fraction(errors: &[f64], batch: usize, bound: f64) -> (f64, f64) {
    let mut pass = 0usize;
    let mut total = 0usize;
    let mut overall = 0.0;
    for chunk in errors.chunks(batch) {
        let (mse, se) = oracle::mean_and_se(chunk);
        overall += mse * chunk.len() as f64;
        if mse <= bound + (3.0 * se).max(0.05 * bound) {
            pass += 1;
        }
        total += 1;
    }
    (pass as f64 / total as f64, overall / errors.len() as f64)
}

/// Digital `σ²/K` and analog `σ²/K + S·σ̃²·E[I²]/(ηK²)` as one-sided
/// bounds on the aggregate's squared error, checked per batch.
pub fn check_aggregation_variance(batches: usize, batch: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let dim = 5;
    let sigma2 = 1.0;
    let task = aggregation_task(dim, sigma2, seed)?;
    let w = vec![-0.2; dim];
    let truth = task.gradient(&w);
    let cfg = NetworkConfig::default();
    let eta = analog_eta(&cfg)?;
    let moment = campbell_interference_moment(&cfg)?;
    let sq_err = |g: &[f64]| g.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let draws = batches * batch;
    let mut out = Vec::new();

    let k_digital = 4;
    let errors: Vec<f64> = chunked(child_seed(seed, 1, 0), draws, batch * 100, |rng, n| {
        (0..n)
            .map(|_| {
                let grads: Vec<_> = (0..k_digital as u64).map(|i| task.local_gradient(&w, i, rng)).collect();
                sq_err(&aggregate_digital(&grads).expect("nonempty"))
            })
            .collect::<Vec<_>>()
    })
    .concat();
    let bound = sigma2 / k_digital as f64;
    let (frac, mse) = batch_pass_fraction(&errors, batch, bound);
    out.push(
        CheckRecord::new(format!("digital_variance(K={k_digital})"), &[], bound, mse, 0.99, frac >= 0.99)
            .samples(draws)
            .detail(format!("{:.4} of {batches} batches of {batch} within bound", frac)),
    );

    // The field is truncated at radius 10, which only lowers the mean
    // interference power below the untruncated moment used in the bound.
    let k_analog = 3;
    let sigma_tilde2 = task.normalization(&w).sigma_tilde.powi(2);
    let errors: Vec<f64> = chunked(child_seed(seed, 2, 0), draws, batch * 100, |rng, n| {
        (0..n)
            .map(|_| analog_draw(&task, &w, k_analog, &cfg, 10.0, eta, rng).map(|g| sq_err(&g)))
            .collect::<Result<Vec<_>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?
    .concat();
    let k = k_analog as f64;
    let bound = sigma2 / k + dim as f64 * sigma_tilde2 * moment / (eta * k * k);
    let (frac, mse) = batch_pass_fraction(&errors, batch, bound);
    out.push(
        CheckRecord::new(format!("analog_variance(K={k_analog})"), &[], bound, mse, 0.99, frac >= 0.99)
            .samples(draws)
            .detail(format!("{:.4} of {batches} batches of {batch} within bound", frac)),
    );
    Ok(out)
}

// ---------------------------------------------------------------- convergence bounds

/// Network used by the bound and latency checks: void probability below
/// 0.2 for both schemes.
pub fn bound_check_network(rounds: usize) -> NetworkConfig {
    NetworkConfig {
        lambda_d: 2.0,
        subcarriers: 4,
        theta: 1.0,
        g_th: 1.0,
        dim: 10,
        rounds,
        ..Default::default()
    }
}

pub fn bound_check_task() -> Result<QuadraticTask> {
    QuadraticTask::random(10, 0.5, 2.0, &mut rng_from_seed(7))
}

/// Empirical `E[averaged gradient norm | not empty]` per batch of trials
/// against the fixed-cell, high-mobility and analog bounds.
pub fn check_convergence_bounds(rounds: &[usize], batches: usize, batch: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let task = bound_check_task()?;
    let spec = task.spec();
    let cases = [
        (Scheme::Digital, Mobility::Low, "digital_bound"),
        (Scheme::Digital, Mobility::High, "high_mobility_bound"),
        (Scheme::Analog, Mobility::Low, "analog_bound"),
    ];
    let mut out = Vec::new();
    for &n in rounds {
        let cfg = bound_check_network(n);
        for (ci, &(scheme, mobility, op)) in cases.iter().enumerate() {
            let bound = match op {
                "digital_bound" => digital_bound(&cfg, &spec, n)?,
                "high_mobility_bound" => high_mobility_bound(&cfg, &spec, n)?,
                _ => analog_bound(&cfg, &spec, n)?,
            };
            let options = RunOptions { freeze_channel: mobility == Mobility::Low, ..Default::default() };
            let sim = Simulation::with_spec(&cfg, &task, spec.clone(), scheme, mobility, options)?;
            for b in 0..batches {
                let base = child_seed(seed, (n * 10 + ci) as u64, b);
                let seeds: Vec<u64> = (0..batch).map(|i| trial_seed(base, i)).collect();
                let (trials, _) = run_spatial_experiment(&sim, &seeds)?;
                let norms: Vec<f64> = trials.iter().filter_map(|t| t.averaged_grad_norm).collect();
                let mean = norms.iter().sum::<f64>() / norms.len().max(1) as f64;
                out.push(
                    CheckRecord::new(
                        format!("{op}(N={n},batch={b})"),
                        &[op],
                        bound,
                        mean,
                        0.0,
                        !norms.is_empty() && mean <= bound,
                    )
                    .samples(batch)
                    .detail(format!("{} of {batch} trials non-empty", norms.len())),
                );
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- interference effect

pub fn check_interference_effect() -> Result<Vec<CheckRecord>> {
    let task = TaskSpec { f0: 1.0, f_star: 0.0, l0: 0.5, sigma2: 1.5, nu: 0.0, sigma_tilde2: 0.7 };
    let mut out = Vec::new();
    for &lambda_d in &[0.2, 1.0, 5.0, 20.0] {
        for &g_th in &[0.5, 1.0, 2.0] {
            let cfg = NetworkConfig { lambda_d, g_th, subcarriers: 2, ..Default::default() };
            let closed = interference_effect(&cfg, &task)?;
            // Independent evaluation: quadrature for E1, truncated sums for the Poisson moments.
            let p_a = (-g_th).exp();
            let k = std::f64::consts::PI * cfg.radius.powi(2) * lambda_d * p_a;
            let pre = 16.0 * task.sigma_tilde2 * oracle::e1_quadrature(g_th)
                / (p_a * (cfg.alpha * cfg.alpha - 4.0) * cfg.subcarriers as f64);
            let phi = oracle::inverse_count_poisson_sum(k);
            let void_odds = (-k).exp() / (1.0 - (-k).exp());
            let expected = pre * (phi - k * void_odds) / (task.sigma2 * phi);
            out.push(CheckRecord::relative(
                format!("interference_effect(lambda={lambda_d},g_th={g_th})"),
                &["interference_effect"],
                expected,
                closed,
                SPECIAL_TOLERANCE,
            ));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- latency

/// The high-mobility round count solves its defining equation, and the
/// empirical round count on the quadratic task stays below the fixed-cell
/// upper bound.
pub fn check_latency(trials: usize, seed: u64) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for &p in &[0.05f64, 0.1, 0.2] {
        let (bracket, delta, eps0) = (3.0f64, 0.5f64, 0.8f64);
        let n = required_rounds_high(bracket, p, delta, eps0)?;
        let lhs = (1.0 / n + p / (n - 1.0)).sqrt() * bracket;
        let pn = p.powf(n);
        let rhs = (delta - pn) * eps0 / (1.0 - pn);
        out.push(
            CheckRecord::relative(format!("high_mobility_rounds_root(p={p})"), &["latency_report"], rhs, lhs, 1e-9)
                .detail(format!("N = {n:.4}")),
        );
    }

    let task = bound_check_task()?;
    let spec = task.spec();
    let probe = NetworkConfig { epsilon0: 2.0, ..bound_check_network(1) };
    let report = latency_report(&probe, &spec, Scheme::Digital, Mobility::Low)?;
    let n_up = report.n_min_upper;
    let cfg = NetworkConfig { rounds: n_up.ceil() as usize, ..probe };
    let options = RunOptions { freeze_channel: true, ..Default::default() };
    let sim = Simulation::with_spec(&cfg, &task, spec, Scheme::Digital, Mobility::Low, options)?;
    let seeds: Vec<u64> = (0..trials).map(|i| trial_seed(seed, i)).collect();
    let (records, _) = run_spatial_experiment(&sim, &seeds)?;
    let outcome = rounds_to_target(&records, cfg.epsilon0, cfg.delta);
    let reached = outcome.rounds().map_or(f64::INFINITY, |r| r as f64);
    out.push(
        CheckRecord::new("empirical_rounds_below_upper", &["latency_report"], n_up, reached, 0.0, reached <= n_up)
            .samples(trials),
    );
    Ok(out)
}

/// Operations that no registered check covers.
pub fn uncovered_operations() -> Vec<&'static str> {
    analytics::OPERATIONS
        .iter()
        .copied()
        .filter(|op| !REGISTRY.iter().any(|c| c.operations.contains(op)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_covers_every_operation() {
        assert!(uncovered_operations().is_empty(), "{:?}", uncovered_operations());
    }

    #[test]
    fn deterministic_identities_pass() {
        for checks in [
            check_special_functions().unwrap(),
            check_dense_limit().unwrap(),
            check_inverse_count_identity().unwrap(),
            check_inverse_effective_rounds().unwrap(),
            check_interference_effect().unwrap(),
        ] {
            for c in checks {
                assert!(c.passed, "{c:?}");
            }
        }
    }

    #[test]
    fn small_monte_carlo_checks_pass() {
        let cfg = NetworkConfig::default();
        assert!(check_success_probability(&cfg, 20_000, 1).unwrap().passed);
        assert!(check_device_count_pmf(&cfg, Scheme::Analog, 2_000, 2).unwrap().passed);
        assert!(check_truncated_inversion_power(&cfg, 100_000, 3).unwrap().passed);
    }
}
