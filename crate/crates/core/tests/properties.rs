use feelsim::analytics::{analog_bound, digital_bound, successful_device_stats, activation_stats, success_probability};
use feelsim::channel::{evaluate_sir, FadingDraw, SubcarrierAssignment};
use feelsim::geometry::{partition_typical_cell, sample_ppp, Point2};
use feelsim::learning::{aggregate_digital, global_update, LearningTask, LocalGradient, QuadraticTask};
use feelsim::rng::rng_from_seed;
use feelsim::simulator::{InterferenceMode, RunOptions, Simulation};
use feelsim::{HexGrid, Mobility, NetworkConfig, Scheme, TaskSpec};
use proptest::prelude::*;

fn network() -> impl Strategy<Value = NetworkConfig> {
    (0.05f64..20.0, 0.3f64..3.0, 1u32..8, 0.05f64..10.0, 2.2f64..6.0, 0.1f64..3.0).prop_map(
        |(lambda_d, radius, subcarriers, theta, alpha, g_th)| NetworkConfig {
            lambda_d,
            radius,
            subcarriers,
            theta,
            alpha,
            g_th,
            ..Default::default()
        },
    )
}

fn task_spec() -> TaskSpec {
    TaskSpec { f0: 3.0, f_star: 0.5, l0: 0.7, sigma2: 1.5, nu: 0.0, sigma_tilde2: 1.0 }
}

proptest! {
    #[test]
    fn partition_is_disjoint_and_complete(seed in any::<u64>(), density in 0.1f64..3.0, radius in 0.3f64..2.0) {
        let grid = HexGrid::new(radius, 8.0 * radius).unwrap();
        let points = sample_ppp(density, 8.0 * radius, &mut rng_from_seed(seed)).unwrap();
        let cell = partition_typical_cell(&points, &grid);
        prop_assert_eq!(cell.total(), points.len());
        for p in &cell.in_disk {
            prop_assert!(p.norm() < radius);
            prop_assert!(grid.in_typical_cell(*p));
        }
        for p in &cell.silent {
            prop_assert!(p.norm() >= radius && grid.in_typical_cell(*p));
        }
        for p in &cell.interferers {
            prop_assert!(!grid.in_typical_cell(*p));
            prop_assert!(p.is_finite());
        }
    }

    #[test]
    fn identical_seeds_give_identical_realizations(seed in any::<u64>(), density in 0.1f64..5.0) {
        let a = sample_ppp(density, 5.0, &mut rng_from_seed(seed)).unwrap();
        let b = sample_ppp(density, 5.0, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sir_is_scale_invariant(
        target in (0.1f64..2.0, 0.0f64..6.3),
        others in prop::collection::vec((0.1f64..10.0, 0.0f64..6.3, 0.01f64..5.0), 0..8),
        gain in 0.01f64..5.0,
        scale in 0.01f64..100.0,
        alpha in 2.1f64..6.0,
        theta in 0.01f64..10.0,
    ) {
        let target_point = Point2::from_polar(target.0, target.1);
        let co: Vec<_> = others.iter().map(|&(r, a, g)| (Point2::from_polar(r, a), FadingDraw::new(g))).collect();
        let scaled: Vec<_> = co.iter().map(|&(p, f)| (p, FadingDraw::new(f.gain * scale))).collect();
        let base = evaluate_sir(target_point, FadingDraw::new(gain), &co, alpha, theta).unwrap();
        let joint = evaluate_sir(target_point, FadingDraw::new(gain * scale), &scaled, alpha, theta).unwrap();
        prop_assert_eq!(base.success, base.sir.meets(theta));
        match (base.sir, joint.sir) {
            (feelsim::channel::Sir::Finite(a), feelsim::channel::Sir::Finite(b)) => {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs());
            }
            (feelsim::channel::Sir::Infinite, feelsim::channel::Sir::Infinite) => prop_assert!(co.is_empty()),
            _ => prop_assert!(false, "SIR kind changed under scaling"),
        }
    }

    #[test]
    fn hopping_assigns_each_device_once(seed in any::<u64>(), devices in 0usize..200, m in 1u32..16) {
        let a = SubcarrierAssignment::hopping(devices, m, &mut rng_from_seed(seed));
        prop_assert_eq!(a.channel.len(), devices);
        prop_assert!(a.channel.iter().all(|&c| c < m));
        let shared = SubcarrierAssignment::shared(devices, m);
        prop_assert!(shared.channel.iter().all(|&c| c == shared.channel[0]));
    }

    #[test]
    fn analytic_quantities_stay_in_range(cfg in network()) {
        let ps = success_probability(&cfg).unwrap().p_s;
        prop_assert!((0.0..=1.0).contains(&ps));
        let d = successful_device_stats(&cfg).unwrap();
        prop_assert!(d.k_bar >= 0.0 && d.k_bar <= d.k_bar_limit * (1.0 + 1e-12));
        prop_assert!((0.0..=1.0).contains(&d.p_null));
        let a = activation_stats(&cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.p_a) && (0.0..=1.0).contains(&a.p_null));
    }

    #[test]
    fn bounds_scale_as_inverse_root_rounds(cfg in network(), n in 1usize..500) {
        let spec = task_spec();
        if let (Ok(a), Ok(b)) = (digital_bound(&cfg, &spec, n), digital_bound(&cfg, &spec, 4 * n)) {
            prop_assert!(a >= 0.0);
            prop_assert!((a / b - 2.0).abs() < 1e-12);
        }
        if let (Ok(a), Ok(b)) = (analog_bound(&cfg, &spec, n), analog_bound(&cfg, &spec, 4 * n)) {
            prop_assert!(a >= 0.0);
            prop_assert!((a / b - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn digital_aggregate_is_order_free_mean(grads in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 1..12)) {
        let locals: Vec<LocalGradient> = grads.iter().enumerate().map(|(i, g)| LocalGradient { device: i as u64, g: g.clone() }).collect();
        let mut reversed = locals.clone();
        reversed.reverse();
        let agg = aggregate_digital(&locals).unwrap();
        prop_assert_eq!(&agg, &aggregate_digital(&reversed).unwrap());
        for j in 0..3 {
            let mean = grads.iter().map(|g| g[j]).sum::<f64>() / grads.len() as f64;
            prop_assert!((agg[j] - mean).abs() < 1e-12);
        }
        prop_assert!(aggregate_digital(&[]).is_none());
    }

    #[test]
    fn quadratic_loss_never_below_optimum(w in prop::collection::vec(-50.0f64..50.0, 4), seed in any::<u64>()) {
        let task = QuadraticTask::random(4, 0.5, 1.0, &mut rng_from_seed(seed)).unwrap();
        let spec = task.spec();
        prop_assert!(task.loss(&w) >= spec.f_star);
        let g = task.gradient(&w);
        let next = global_update(&w, &g, 1.0 / spec.l0).unwrap();
        prop_assert!(task.loss(&next) <= task.loss(&w) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trial_records_are_consistent(
        seed in any::<u64>(),
        lambda_d in 0.2f64..4.0,
        subcarriers in 1u32..4,
        analog in any::<bool>(),
        high in any::<bool>(),
        cellular in any::<bool>(),
    ) {
        let cfg = NetworkConfig { lambda_d, subcarriers, rounds: 12, dim: 4, ..Default::default() };
        let task = QuadraticTask::random(4, 0.5, 1.0, &mut rng_from_seed(3)).unwrap();
        let scheme = if analog { Scheme::Analog } else { Scheme::Digital };
        let mobility = if high { Mobility::High } else { Mobility::Low };
        let mode = if cellular { InterferenceMode::Cellular } else { InterferenceMode::AnalyticMatched };
        let options = RunOptions { mode, window_half_width: 6.0, ..Default::default() };
        let sim = Simulation::new(&cfg, &task, scheme, mobility, options).unwrap();
        let t = sim.run_trial(0, seed).unwrap();
        prop_assert_eq!(t.rounds.len(), cfg.rounds);
        prop_assert_eq!(t.effective_rounds, t.rounds.iter().filter(|r| r.effective).count());
        let latency = t.rounds[0].round_latency;
        prop_assert!(latency > 0.0);
        for (i, r) in t.rounds.iter().enumerate() {
            prop_assert_eq!(r.round, i + 1);
            prop_assert_eq!(r.round_latency, latency);
            prop_assert_eq!(r.effective, r.active_count > 0);
            prop_assert!(r.loss >= task.spec().f_star);
            prop_assert_eq!(r.interference_power.is_some(), analog);
        }
        if !high {
            prop_assert!(t.rounds.iter().all(|r| r.cell_digest == t.rounds[0].cell_digest));
        }
        prop_assert_eq!(t.averaged_grad_norm, t.averaged_grad_norm_upto(cfg.rounds));
        prop_assert_eq!(&t, &sim.run_trial(0, seed).unwrap());
    }
}
