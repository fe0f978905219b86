//! Text renderings of results: CSV with full-precision floats and a JSON
//! mirror of the same data. Floats are printed with enough digits to parse
//! back bit-identically.

use crate::error::{Error, Result};
use crate::model::{EquilibriumPoint, FrequencyError, LoopParameters};
use crate::oracle::Trajectory;
use crate::reduced::to_reduced;
use crate::sweep::SweepRow;
use serde_json::json;
use std::fmt::Write as _;
use std::str::FromStr;

/// Output encoding selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidInput(format!(
                "unknown format {other:?}, expected csv or json"
            ))),
        }
    }
}

/// Render a float so that parsing the text recovers the identical bits:
/// scientific notation with 16 fractional digits (17 significant).
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a trajectory with its reduced vertical coordinate alongside each
/// sample. CSV columns `t,x,theta_e,y`; JSON mirrors the same rows plus the
/// breakpoint events.
pub fn export_trajectory(
    traj: &Trajectory,
    params: &LoopParameters,
    omega: FrequencyError,
    format: OutputFormat,
) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("t,x,theta_e,y\n");
            for &(t, state) in &traj.samples {
                let y = to_reduced(state, params, omega).y;
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    format_float(t),
                    format_float(state.x),
                    format_float(state.theta_e),
                    format_float(y)
                );
            }
            out
        }
        OutputFormat::Json => {
            let samples: Vec<_> = traj
                .samples
                .iter()
                .map(|&(t, state)| {
                    let y = to_reduced(state, params, omega).y;
                    json!({"t": t, "x": state.x, "theta_e": state.theta_e, "y": y})
                })
                .collect();
            let events: Vec<_> = traj
                .events
                .iter()
                .map(|e| json!({"t": e.t, "theta_e": e.theta_e}))
                .collect();
            let doc = json!({"samples": samples, "events": events});
            serde_json::to_string_pretty(&doc).expect("plain json document")
        }
    }
}

pub fn sweep_rows(rows: &[SweepRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("kvco,omega_lc,y_ab,case\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{:?}",
                    format_float(r.kvco),
                    format_float(r.omega_lc),
                    format_float(r.y_ab),
                    r.case_tag
                );
            }
            out
        }
        OutputFormat::Json => serde_json::to_string_pretty(rows).expect("plain json rows"),
    }
}

pub fn equilibrium_rows(points: &[EquilibriumPoint], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("index_m,x_eq,theta_eq,kind\n");
            for p in points {
                let _ = writeln!(
                    out,
                    "{},{},{},{:?}",
                    p.index_m,
                    format_float(p.x_eq),
                    format_float(p.theta_eq),
                    p.kind
                );
            }
            out
        }
        OutputFormat::Json => serde_json::to_string_pretty(points).expect("plain json rows"),
    }
}

/// Render scalar results as two-column CSV (`quantity,value`) or a flat JSON
/// object. Values are pre-rendered strings so callers control precision.
pub fn scalar_rows(pairs: &[(&str, String)], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("quantity,value\n");
            for (name, value) in pairs {
                let _ = writeln!(out, "{name},{value}");
            }
            out
        }
        OutputFormat::Json => {
            let mut map = serde_json::Map::new();
            for (name, value) in pairs {
                // numbers stay numbers in the mirror; anything else is a string
                let v = value
                    .parse::<f64>()
                    .ok()
                    .and_then(serde_json::Number::from_f64)
                    .map(serde_json::Value::Number)
                    .unwrap_or_else(|| serde_json::Value::String(value.clone()));
                map.insert((*name).to_string(), v);
            }
            serde_json::to_string_pretty(&serde_json::Value::Object(map))
                .expect("plain json object")
        }
    }
}
