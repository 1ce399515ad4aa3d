//! Configuration, commands, result files and the validation suite.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

pub use commands::{
    cmd_analytic, cmd_simulate, cmd_sweep, cmd_validate, worker_pool, write_analytic, write_simulation,
    write_validation, AnalyticOutput, Overrides, SimulationOutput, SimulationPoint, WORKERS_ENV,
};
pub use config::{load_config, parse_config, ExperimentConfig, RunConfig, SweepConfig, TaskConfig};
pub use output::{write_trials_csv, SCHEMA_VERSION, TRIALS_HEADER};
pub use validate::{run_validation, CheckRecord, ValidationReport, ValidationSettings};
