use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use feelsim::harness::{
    self, cmd_analytic, cmd_simulate, cmd_sweep, cmd_validate, worker_pool, write_analytic, write_simulation,
    write_validation, ExperimentConfig, Overrides, ValidationSettings,
};
use feelsim::simulator::InterferenceMode;
use feelsim::FeelError;

const EXIT_CONFIG: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NOT_REACHED: u8 = 3;

/// Federated edge learning in a Poisson cellular network: closed forms,
/// Monte Carlo simulation and validation.
#[derive(Parser)]
#[command(name = "feelsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form bounds, device statistics and latency (bounds.json).
    Analytic(Common),
    /// Monte Carlo run of the base network (trials.csv, summary.json).
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Exit with status 3 when the spatial criterion is not met within the round budget.
        #[arg(long)]
        rounds_to_target: bool,
    },
    /// Check every closed form against its oracle (validation.json).
    Validate {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo draws per success-probability grid point; other
        /// sample sizes scale with it.
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Simulation over the [sweep] values (point_NNN/trials.csv, summary.json).
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "feelsim-out")]
    out: PathBuf,
    #[arg(long)]
    seed_base: Option<u64>,
    /// Number of sample paths.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<InterferenceMode>,
}

fn parse_mode(s: &str) -> Result<InterferenceMode, String> {
    s.parse().map_err(|e: FeelError| e.to_string())
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, FeelError> {
        let mut cfg = match &self.config {
            Some(path) => harness::load_config(path)?,
            None => ExperimentConfig::default(),
        };
        Overrides { seed_base: self.seed_base, paths: self.paths, mode: self.mode }.apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn report_written(out: &Path, files: &[&str]) {
    for f in files {
        println!("wrote {}", out.join(f).display());
    }
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Analytic(common) => {
            let cfg = common.load()?;
            let result = cmd_analytic(&cfg)?;
            write_analytic(&common.out, &result)?;
            for p in &result.points {
                let r = &p.report;
                println!(
                    "p_s = {:.6}  K = {:.6}  p_null = {:.6}  p_a = {:.6}  K' = {:.6}",
                    r.p_s, r.k_bar, r.p_null, r.p_a, r.k_bar_prime
                );
            }
            report_written(&common.out, &["bounds.json"]);
            Ok(0)
        }
        Command::Simulate { common, rounds_to_target } => {
            let cfg = common.load()?;
            let result = cmd_simulate(&cfg)?;
            write_simulation(&common.out, &result, false)?;
            let s = &result.points[0].summary;
            println!(
                "paths = {}  empty = {:.3}  final loss = {:.6}  latency = {:.6e} s",
                s.paths, s.empty_trial_fraction, s.mean_final_loss, s.mean_cumulative_latency
            );
            report_written(&common.out, &["trials.csv", "summary.json"]);
            if rounds_to_target && result.any_not_reached() {
                eprintln!("spatial criterion not reached within {} rounds", cfg.network.rounds);
                return Ok(EXIT_NOT_REACHED);
            }
            Ok(0)
        }
        Command::Sweep(common) => {
            let cfg = common.load()?;
            let result = cmd_sweep(&cfg)?;
            write_simulation(&common.out, &result, true)?;
            for p in &result.points {
                println!(
                    "{} = {}  rounds to target = {:?}  mean latency = {:.6e} s",
                    cfg.sweep.as_ref().map_or("", |s| s.parameter.as_str()),
                    p.sweep_value.unwrap_or(f64::NAN),
                    p.rounds_to_target.rounds(),
                    p.summary.mean_cumulative_latency
                );
            }
            report_written(&common.out, &["summary.json"]);
            Ok(0)
        }
        Command::Validate { common, trials } => {
            let cfg = common.load()?;
            if cfg.run.mode != InterferenceMode::AnalyticMatched {
                eprintln!("note: validation always uses analytic-matched interference");
            }
            let settings = ValidationSettings { scale: trials as f64 / 100_000.0, seed: cfg.run.seed_base };
            let report = cmd_validate(&settings)?;
            write_validation(&common.out, &settings, &report)?;
            for c in report.failures() {
                eprintln!(
                    "FAIL {}: analytic {:.6e}, empirical {:.6e}, tolerance {:.3e} {}",
                    c.name, c.analytic, c.empirical, c.tolerance, c.detail
                );
            }
            println!("{} checks, {} failed", report.checks.len(), report.failures().count());
            report_written(&common.out, &["validation.json"]);
            Ok(if report.passed() { 0 } else { EXIT_VALIDATION })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let outcome = worker_pool()
        .context("worker pool")
        .and_then(|pool| pool.install(|| run(cli.command)));
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
