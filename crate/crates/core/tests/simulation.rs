use feelsim::geometry::{sample_disk_distance, sample_ppp, thin};
use feelsim::harness::{cmd_simulate, parse_config, write_trials_csv};
use feelsim::learning::QuadraticTask;
use feelsim::oracle::{ks_statistic, mean_and_se};
use feelsim::rng::rng_from_seed;
use feelsim::simulator::{run_spatial_experiment, trial_seed, InterferenceMode, RunOptions, Simulation};
use feelsim::{Mobility, NetworkConfig, Scheme};

fn csv_for(text: &str, workers: usize) -> String {
    let cfg = parse_config(text).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
    let out = pool.install(|| cmd_simulate(&cfg)).unwrap();
    let mut buf = Vec::new();
    write_trials_csv(&out.points[0].trials, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn one_path_of_five_rounds_gives_five_rows() {
    let csv = csv_for("[network]\nrounds = 5\n[run]\npaths = 1\n", 1);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6);
    for (i, line) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], "0");
        assert_eq!(fields[2], (i + 1).to_string());
    }
}

#[test]
fn trials_csv_is_identical_across_runs_and_worker_counts() {
    let text = r#"
[network]
lambda_d = 2.0
subcarriers = 3
rounds = 15
[run]
scheme = "analog"
mobility = "high"
mode = "cellular"
paths = 7
seed_base = 99
"#;
    let reference = csv_for(text, 1);
    assert_eq!(reference, csv_for(text, 1));
    assert_eq!(reference, csv_for(text, 3));
    assert_ne!(reference, csv_for(&text.replace("99", "100"), 3));
}

#[test]
fn high_mobility_redraws_positions_each_round() {
    let cfg = NetworkConfig { lambda_d: 5.0, rounds: 30, dim: 3, ..Default::default() };
    let task = QuadraticTask::random(3, 0.5, 1.0, &mut rng_from_seed(1)).unwrap();
    let sim = Simulation::new(&cfg, &task, Scheme::Digital, Mobility::High, RunOptions::default()).unwrap();
    let t = sim.run_trial(0, 5).unwrap();
    let mut digests: Vec<u64> = t.rounds.iter().map(|r| r.cell_digest).collect();
    digests.sort_unstable();
    digests.dedup();
    // Disk holds ~15.7 devices, so repeated positions are essentially impossible.
    assert_eq!(digests.len(), cfg.rounds);

    let low = Simulation::new(&cfg, &task, Scheme::Digital, Mobility::Low, RunOptions::default()).unwrap();
    let t = low.run_trial(0, 5).unwrap();
    assert!(t.rounds.iter().all(|r| r.cell_digest == t.rounds[0].cell_digest));
}

#[test]
fn thinned_process_has_reduced_density() {
    let (density, half, m, draws) = (1.0, 5.0, 4.0, 10_000);
    let mut rng = rng_from_seed(17);
    let mut kept = 0usize;
    for _ in 0..draws {
        let pts = sample_ppp(density, half, &mut rng).unwrap();
        kept += thin(&pts, 1.0 / m, &mut rng).len();
    }
    let empirical = kept as f64 / (draws as f64 * 4.0 * half * half);
    assert!((empirical / (density / m) - 1.0).abs() < 0.01, "{empirical}");
}

#[test]
fn disk_distance_follows_area_law() {
    let mut rng = rng_from_seed(23);
    let radius = 1.7;
    let mut sample: Vec<f64> = (0..100_000).map(|_| sample_disk_distance(radius, &mut rng)).collect();
    let d = ks_statistic(&mut sample, |r| (r / radius).powi(2).clamp(0.0, 1.0));
    assert!(d < 0.01, "KS statistic {d}");
}

/// Per-device success with `M` subcarriers matches one subcarrier at
/// density `λ/M`.
#[test]
fn hopping_matches_thinned_density() {
    let task = QuadraticTask::random(2, 0.5, 1.0, &mut rng_from_seed(2)).unwrap();
    let options = RunOptions { mode: InterferenceMode::Cellular, window_half_width: 8.0, ..Default::default() };
    let per_device = |lambda_d: f64, subcarriers: u32, base: u64| {
        let cfg = NetworkConfig { lambda_d, subcarriers, rounds: 10, dim: 2, ..Default::default() };
        let sim = Simulation::new(&cfg, &task, Scheme::Digital, Mobility::High, options).unwrap();
        let seeds: Vec<u64> = (0..400).map(|i| trial_seed(base, i)).collect();
        let (trials, _) = run_spatial_experiment(&sim, &seeds).unwrap();
        let expected_devices = lambda_d * std::f64::consts::PI * cfg.radius * cfg.radius;
        let per_trial: Vec<f64> = trials
            .iter()
            .map(|t| t.rounds.iter().map(|r| r.active_count as f64).sum::<f64>() / (t.rounds.len() as f64 * expected_devices))
            .collect();
        mean_and_se(&per_trial)
    };
    let (a, sa) = per_device(4.0, 4, 1);
    let (b, sb) = per_device(1.0, 1, 2);
    let z = (a - b) / (sa * sa + sb * sb).sqrt();
    assert!(z.abs() < 2.576, "success per device {a} vs {b}, z = {z}");
}
