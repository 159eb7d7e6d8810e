//! CSV and provenance files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Plan, SCHEMA_VERSION};
use crate::run::{Failure, RunOutput};

pub const COLUMNS: [&str; 9] = [
    "coupling",
    "detuning",
    "label",
    "quantity",
    "value",
    "mode",
    "gauge",
    "cutoff",
    "converged",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v == 0.0 {
        // Drops the sign of negative zero so equal values print identically.
        format!("{:.16e}", 0.0)
    } else {
        format!("{v:.16e}")
    }
}

pub fn render_csv(output: &RunOutput) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for r in &output.rows {
        let row = &r.row;
        w.write_record([
            format_float(row.coupling),
            format_float(row.detuning),
            row.label.clone(),
            row.quantity.clone(),
            format_float(row.value),
            row.mode.clone(),
            row.gauge.clone(),
            row.cutoff.map(|c| c.to_string()).unwrap_or_default(),
            r.converged.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[derive(Debug, Serialize)]
pub struct Provenance<'a> {
    pub schema_version: u32,
    pub config_name: &'a str,
    pub config_source: &'a str,
    pub config_sha256: &'a str,
    pub code_version: &'static str,
    pub model: crate::config::Model,
    pub seed: u64,
    pub columns: [&'static str; 9],
    pub csv: String,
    pub rows: usize,
    pub couplings: usize,
    pub detunings: &'a [f64],
    pub cutoffs: Vec<usize>,
    /// `complete`, or `partial` when failed points were written under --allow-partial.
    pub status: &'static str,
    pub failures: &'a [Failure],
}

pub fn provenance<'a>(plan: &'a Plan, source: &'a str, output: &'a RunOutput) -> Provenance<'a> {
    let mut cutoffs: Vec<usize> = output.rows.iter().filter_map(|r| r.row.cutoff).collect();
    cutoffs.sort_unstable();
    cutoffs.dedup();
    Provenance {
        schema_version: SCHEMA_VERSION,
        config_name: &plan.config.name,
        config_source: source,
        config_sha256: &plan.config_hash,
        code_version: env!("CARGO_PKG_VERSION"),
        model: plan.config.model,
        seed: plan.seed,
        columns: COLUMNS,
        csv: plan.csv_name(),
        rows: output.rows.len(),
        couplings: plan.couplings.len(),
        detunings: &plan.config.detunings,
        cutoffs,
        status: if output.failures.is_empty() {
            "complete"
        } else {
            "partial"
        },
        failures: &output.failures,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serialisable");
    bytes.push(b'\n');
    bytes
}

/// Writes `name` inside `dir` through a temporary file, so a reader never sees
/// a half-written output.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_17_digits() {
        for v in [0.1, 1.0 / 3.0, 1.318043e-3, -3e-3, 1.5, 2.0f64.sqrt()] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(format_float(-0.0), format_float(0.0));
    }
}
