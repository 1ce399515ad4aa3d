//! Acceptance run: one line per criterion, nonzero exit on any failure.
//!
//! Every sample size, seed and tolerance used here is fixed in this file.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use feelsim::harness::validate::{
    campbell_cases, check_aggregation_unbiased, check_aggregation_variance, check_campbell_moment,
    check_convergence_bounds, check_dense_limit, check_device_count_pmf, check_inverse_count_identity,
    check_inverse_effective_rounds, check_special_functions, check_success_probability,
    check_truncated_inversion_power, device_count_cases, inversion_cases, success_probability_grid, CheckRecord,
};
use feelsim::harness::{cmd_simulate, parse_config, write_trials_csv};
use feelsim::learning::{LearningTask, LogisticParams, LogisticTask};
use feelsim::simulator::{
    rounds_to_accuracy, run_spatial_experiment, trial_seed, InterferenceMode, RunOptions, Simulation, SpatialSummary,
    TrialRecord,
};
use feelsim::{Mobility, NetworkConfig, Scheme};

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_records(records: &[CheckRecord]) -> Outcome {
    let failed: Vec<&CheckRecord> = records.iter().filter(|c| !c.passed).collect();
    let mut detail = format!("{} checks, {} failed", records.len(), failed.len());
    for c in failed.iter().take(3) {
        detail.push_str(&format!(
            "; {} analytic {:.6e} empirical {:.6e} tol {:.2e}",
            c.name, c.analytic, c.empirical, c.tolerance
        ));
    }
    Outcome { passed: failed.is_empty(), detail }
}

fn with_budget(mut o: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    if elapsed > budget {
        o.passed = false;
        o.detail.push_str(&format!("; runtime {elapsed:.1?} over {budget:?}"));
    }
    o
}

fn timed<F: FnOnce() -> Vec<CheckRecord>>(budget: Option<Duration>, f: F) -> Outcome {
    let t = Instant::now();
    let out = from_records(&f());
    match budget {
        Some(b) => with_budget(out, t.elapsed(), b),
        None => out,
    }
}

fn special_functions() -> Outcome {
    timed(Some(Duration::from_secs(1)), || check_special_functions().unwrap())
}

fn success_probability() -> Outcome {
    timed(Some(Duration::from_secs(300)), || {
        success_probability_grid()
            .iter()
            .enumerate()
            .map(|(i, cfg)| check_success_probability(cfg, 100_000, trial_seed(SEED, i)).unwrap())
            .collect()
    })
}

fn device_counts() -> Outcome {
    timed(None, || {
        device_count_cases()
            .into_iter()
            .enumerate()
            .map(|(i, (cfg, scheme))| check_device_count_pmf(&cfg, scheme, 10_000, trial_seed(SEED + 1, i)).unwrap())
            .collect()
    })
}

fn dense_limit() -> Outcome {
    timed(None, || check_dense_limit().unwrap())
}

fn inverse_count() -> Outcome {
    timed(None, || check_inverse_count_identity().unwrap())
}

fn inverse_effective_rounds() -> Outcome {
    timed(None, || check_inverse_effective_rounds().unwrap())
}

fn analog_moments() -> Outcome {
    timed(None, || {
        let mut out: Vec<CheckRecord> = campbell_cases()
            .iter()
            .enumerate()
            .map(|(i, cfg)| check_campbell_moment(cfg, 20_000, trial_seed(SEED + 2, i)).unwrap())
            .collect();
        out.extend(
            inversion_cases()
                .iter()
                .enumerate()
                .map(|(i, cfg)| check_truncated_inversion_power(cfg, 1_000_000, trial_seed(SEED + 3, i)).unwrap()),
        );
        out
    })
}

fn aggregation() -> Outcome {
    timed(None, || {
        let mut out = check_aggregation_unbiased(10_000, SEED + 4).unwrap();
        out.extend(check_aggregation_variance(10_000, 50, SEED + 5).unwrap());
        out
    })
}

fn convergence_bounds() -> Outcome {
    timed(Some(Duration::from_secs(600)), || check_convergence_bounds(&[25, 100], 5, 200, SEED + 6).unwrap())
}

// ---------------------------------------------------------------- trends

const TREND_ROUNDS: usize = 40;
const TREND_BATCHES: u64 = 10;
const TREND_PATHS: usize = 10;
const ACCURACY_TARGET: f64 = 0.75;
const MIN_WINS: usize = 8;
/// Noise band for "flat" and "non-increasing", in combined standard errors.
const NOISE_SE: f64 = 3.0;

struct Trends {
    task: LogisticTask,
    base: NetworkConfig,
}

impl Trends {
    fn new() -> Self {
        let task = LogisticTask::new(LogisticParams {
            dim: 10,
            samples_per_device: 20,
            class_separation: 1.0,
            init_scale: 2.0,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        Self { task, base: NetworkConfig { rounds: TREND_ROUNDS, dim: 10, ..Default::default() } }
    }

    fn batch(&self, cfg: &NetworkConfig, scheme: Scheme, mobility: Mobility, batch: u64) -> (Vec<TrialRecord>, SpatialSummary) {
        let options = RunOptions { mode: InterferenceMode::Cellular, ..Default::default() };
        let sim = Simulation::with_spec(cfg, &self.task, self.task.spec(), scheme, mobility, options).unwrap();
        let seeds: Vec<u64> = (0..TREND_PATHS).map(|i| trial_seed(SEED + 100 + batch, i)).collect();
        run_spatial_experiment(&sim, &seeds).unwrap()
    }

    /// Mean and standard error over batches of the latency to the accuracy
    /// target; a batch that never reaches it counts as infinite.
    fn latency(&self, cfg: &NetworkConfig, scheme: Scheme) -> (f64, f64) {
        let v: Vec<f64> = (0..TREND_BATCHES)
            .map(|b| {
                let (trials, s) = self.batch(cfg, scheme, Mobility::High, b);
                rounds_to_accuracy(&trials, ACCURACY_TARGET)
                    .rounds()
                    .map_or(f64::INFINITY, |r| r as f64 * s.per_round_latency)
            })
            .collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        if !mean.is_finite() {
            return (mean, 0.0);
        }
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    fn latency_sweep(&self, values: &[f64], set: impl Fn(&mut NetworkConfig, f64), scheme: Scheme) -> Vec<(f64, f64)> {
        values
            .iter()
            .map(|&x| {
                let mut cfg = self.base.clone();
                set(&mut cfg, x);
                self.latency(&cfg, scheme)
            })
            .collect()
    }
}

fn fmt_latency(v: &[(f64, f64)]) -> String {
    v.iter().map(|(m, s)| format!("{m:.3e}±{s:.1e}")).collect::<Vec<_>>().join(" ")
}

fn within_noise(a: (f64, f64), b: (f64, f64)) -> f64 {
    NOISE_SE * (a.1 * a.1 + b.1 * b.1).sqrt()
}

fn trends() -> Outcome {
    let t = Trends::new();
    let mut parts = Vec::new();
    let mut passed = true;
    let mut record = |name: &str, ok: bool, detail: String| {
        passed &= ok;
        parts.push(format!("({name}) {} {detail}", if ok { "ok" } else { "FAIL" }));
    };

    // Mobility: accuracy at round N/2.
    let half = TREND_ROUNDS / 2;
    let wins = (0..TREND_BATCHES)
        .filter(|&b| {
            let (_, hi) = t.batch(&t.base, Scheme::Digital, Mobility::High, b);
            let (_, lo) = t.batch(&t.base, Scheme::Digital, Mobility::Low, b);
            hi.mean_accuracy.unwrap()[half] >= lo.mean_accuracy.unwrap()[half]
        })
        .count();
    record("a", wins >= MIN_WINS, format!("{wins}/{TREND_BATCHES}"));

    // Density: non-increasing, then flat over a tail of at least two points.
    let lambdas = [0.1, 0.2, 0.5, 1.0, 5.0, 10.0];
    let lat = t.latency_sweep(&lambdas, |c, x| c.lambda_d = x, Scheme::Digital);
    let monotone = lat.windows(2).all(|w| w[1].0 <= w[0].0 + within_noise(w[0], w[1]));
    let last = *lat.last().unwrap();
    let flat_from = (0..lat.len()).find(|&i| lat[i..].iter().all(|&p| (p.0 - last.0).abs() <= within_noise(p, last)));
    let flat = flat_from.is_some_and(|i| i + 2 <= lat.len() && i > 0);
    record("b", monotone && flat, fmt_latency(&lat));

    // Threshold: an interior value beats both ends.
    let thetas = [0.05, 1.0, 4.0, 200.0];
    let lat = t.latency_sweep(&thetas, |c, x| c.theta = x, Scheme::Digital);
    let interior = lat[1..lat.len() - 1].iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    record("c", interior < lat[0].0 && interior < lat[lat.len() - 1].0, fmt_latency(&lat));

    // Processing gain: strictly increasing.
    let gains = [1.0, 2.0, 4.0, 8.0];
    let lat = t.latency_sweep(&gains, |c, x| c.subcarriers = x as u32, Scheme::Digital);
    record("d", lat.windows(2).all(|w| w[1].0 > w[0].0), fmt_latency(&lat));

    // Analog against digital.
    let mut ok = true;
    let mut detail = String::new();
    for lambda in [1.0, 30.0] {
        let cfg = NetworkConfig { lambda_d: lambda, ..t.base.clone() };
        let d = t.latency(&cfg, Scheme::Digital);
        let a = t.latency(&cfg, Scheme::Analog);
        ok &= a.0 < d.0;
        detail.push_str(&format!("lambda {lambda}: analog {:.3e} digital {:.3e}; ", a.0, d.0));
    }
    let cfg = NetworkConfig { lambda_d: 30.0, ..t.base.clone() };
    let wins = (0..TREND_BATCHES)
        .filter(|&b| {
            let (_, d) = t.batch(&cfg, Scheme::Digital, Mobility::High, b);
            let (_, a) = t.batch(&cfg, Scheme::Analog, Mobility::High, b);
            a.mean_final_accuracy.unwrap() >= d.mean_final_accuracy.unwrap()
        })
        .count();
    ok &= wins >= MIN_WINS;
    detail.push_str(&format!("accuracy wins {wins}/{TREND_BATCHES}"));
    record("e", ok, detail);

    Outcome { passed, detail: parts.join(" | ") }
}

// ---------------------------------------------------------------- determinism

const DETERMINISM_CONFIGS: &[&str] = &[
    r#"
[network]
rounds = 30
[run]
paths = 6
seed_base = 11
"#,
    r#"
[network]
lambda_d = 3.0
subcarriers = 2
rounds = 25
[run]
scheme = "analog"
mobility = "high"
mode = "cellular"
paths = 5
seed_base = 12
"#,
    r#"
[network]
rounds = 20
dim = 6
[task]
kind = "logistic"
init_scale = 1.5
[run]
mobility = "high"
mode = "cellular"
paths = 4
seed_base = 13
accuracy_target = 0.7
"#,
];

fn trials_bytes(text: &str, workers: usize) -> Vec<u8> {
    let cfg = parse_config(text).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
    let out = pool.install(|| cmd_simulate(&cfg)).unwrap();
    let mut buf = Vec::new();
    write_trials_csv(&out.points[0].trials, &mut buf).unwrap();
    buf
}

fn determinism() -> Outcome {
    let mut mismatches = Vec::new();
    for (i, text) in DETERMINISM_CONFIGS.iter().enumerate() {
        let reference = trials_bytes(text, 1);
        for workers in [1, 2, 4] {
            if trials_bytes(text, workers) != reference {
                mismatches.push(format!("config {i} with {workers} workers"));
            }
        }
    }
    Outcome {
        passed: mismatches.is_empty(),
        detail: if mismatches.is_empty() {
            format!("{} configs byte-identical across runs and 1, 2, 4 workers", DETERMINISM_CONFIGS.len())
        } else {
            mismatches.join(", ")
        },
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("special functions", special_functions),
        ("success probability", success_probability),
        ("device-count distribution", device_counts),
        ("dense-network limit", dense_limit),
        ("inverse device count", inverse_count),
        ("inverse effective rounds", inverse_effective_rounds),
        ("analog interference and power", analog_moments),
        ("aggregation bias and variance", aggregation),
        ("convergence bounds", convergence_bounds),
        ("trends", trends),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        failed += usize::from(!o.passed);
        println!(
            "criterion {:>2} {:<30} {} [{:.1?}] {}",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            t.elapsed(),
            o.detail
        );
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
