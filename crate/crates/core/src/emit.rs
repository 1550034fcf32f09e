//! Stable JSON and CSV renderings of reports and bench rows.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::bench::{BenchRow, SlopeFit};
use crate::machine::RunReport;
use crate::term::print;

pub const CSV_HEADER: [&str; 11] = [
    "machine",
    "family",
    "n",
    "term_size",
    "beta",
    "search",
    "varsub",
    "cost_units",
    "peak_state",
    "wall_ns",
    "status",
];

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// A report as a JSON object. `decoded` is present only when the result
/// was materialised.
pub fn report_json(r: &RunReport) -> Value {
    let mut obj = Map::new();
    obj.insert("machine".into(), json!(r.machine.name()));
    obj.insert("term_size".into(), json!(r.term_size));
    obj.insert("tallies".into(), serde_json::to_value(r.tallies).expect("plain counters"));
    obj.insert("beta_count".into(), json!(r.beta_count));
    obj.insert("length".into(), json!(r.length));
    obj.insert("cost_units".into(), json!(r.cost_units));
    obj.insert("peak_state_size".into(), json!(r.peak_state_size));
    obj.insert("status".into(), json!(r.status.to_string()));
    if let Some(d) = &r.decoded {
        obj.insert("decoded".into(), json!(print(d)));
    }
    if let Some(n) = r.decoded_size {
        obj.insert("decoded_size".into(), json!(n));
    }
    Value::Object(obj)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), EmitError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.machine.name().to_string(),
            r.family.clone(),
            r.n.to_string(),
            r.term_size.to_string(),
            r.tallies.beta_class().to_string(),
            r.tallies.search.to_string(),
            r.tallies.varsub.to_string(),
            r.cost_units.to_string(),
            r.peak_state.to_string(),
            r.wall_ns.to_string(),
            r.status.to_string(),
        ])?;
    }
    w.flush().map_err(|e| EmitError::Csv(e.into()))?;
    Ok(())
}

pub fn rows_json(rows: &[BenchRow], fits: &[SlopeFit]) -> Value {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "machine": r.machine.name(),
                "family": r.family,
                "n": r.n,
                "term_size": r.term_size,
                "tallies": r.tallies,
                "cost_units": r.cost_units,
                "peak_state": r.peak_state,
                "wall_ns": r.wall_ns,
                "status": r.status.to_string(),
            })
        })
        .collect();
    json!({ "rows": rows, "fits": fits })
}

/// Writes rows in the given format to `path`.
pub fn emit_rows(rows: &[BenchRow], fits: &[SlopeFit], format: Format, path: &Path) -> Result<(), EmitError> {
    let io_err = |source| EmitError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    match format {
        Format::Csv => write_csv(rows, file),
        Format::Json => {
            let mut file = file;
            serde_json::to_writer_pretty(&mut file, &rows_json(rows, fits))?;
            writeln!(file).map_err(io_err)
        }
    }
}
