//! Versioned result files.
//!
//! `trials.csv` has one row per (trial, round) with the columns in
//! [`TRIALS_HEADER`]; floats carry 17 significant digits and missing
//! values are empty. JSON documents share a top-level `schema_version`
//! and `kind`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{FeelError, Result};
use crate::simulator::TrialRecord;

pub const SCHEMA_VERSION: u32 = 1;

pub const TRIALS_HEADER: &[&str] = &[
    "trial_id",
    "seed",
    "round",
    "active_count",
    "effective",
    "loss",
    "grad_norm_sq",
    "cum_latency_s",
    "interference_power",
    "accuracy",
];

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn csv_error(e: csv::Error) -> FeelError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FeelError::Io(io),
        other => FeelError::Schema(format!("{other:?}")),
    }
}

pub fn write_trials_csv<W: Write>(trials: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIALS_HEADER).map_err(csv_error)?;
    for t in trials {
        let mut cum = 0.0;
        for r in &t.rounds {
            cum += r.round_latency;
            w.write_record([
                t.trial_id.to_string(),
                t.seed.to_string(),
                r.round.to_string(),
                r.active_count.to_string(),
                u8::from(r.effective).to_string(),
                float(r.loss),
                float(r.grad_norm_sq),
                float(cum),
                opt_float(r.interference_power),
                opt_float(r.accuracy),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    kind: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty-printed JSON document tagged with the schema version.
pub fn versioned_json<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Versioned {
        schema_version: SCHEMA_VERSION,
        kind,
        body,
    })?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, kind: &str, body: &T) -> Result<()> {
    std::fs::write(path, versioned_json(kind, body)?)?;
    Ok(())
}

pub fn write_trials(path: &Path, trials: &[TrialRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trials_csv(trials, std::io::BufWriter::new(file))
}
