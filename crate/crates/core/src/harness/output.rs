//! CSV files produced by the harness. Floats are written in shortest
//! round-trip form, so reading a file back reproduces the values exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{KoopmanError, Result};

use super::run::{CurveTable, RunResult, SummaryRow};

fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let f = File::create(path).map_err(|e| KoopmanError::io(path, e))?;
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(f));
    wtr.write_record(header)?;
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|e| KoopmanError::io(path, e))
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).map_err(|e| KoopmanError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(f));
    rdr.deserialize().map(|r| r.map_err(Into::into)).collect()
}

const RUN_HEADER: [&str; 9] = [
    "scenario",
    "sigma_t",
    "method",
    "observable",
    "seed",
    "error",
    "rho",
    "snr",
    "failure",
];

const SUMMARY_HEADER: [&str; 11] = [
    "scenario",
    "sigma_t",
    "method",
    "observable",
    "runs",
    "failures",
    "median",
    "q1",
    "q3",
    "min",
    "max",
];

pub fn write_runs_csv(path: &Path, runs: &[RunResult]) -> Result<()> {
    write_rows(path, runs, &RUN_HEADER)
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunResult>> {
    read_rows(path)
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_rows(path, rows, &SUMMARY_HEADER)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path)
}

/// Columns `x,true,est_<method>...`, one row per grid point.
pub fn write_curves_csv(path: &Path, table: &CurveTable) -> Result<()> {
    let f = File::create(path).map_err(|e| KoopmanError::io(path, e))?;
    let mut wtr = csv::Writer::from_writer(BufWriter::new(f));
    let mut header = vec!["x".to_string(), "true".to_string()];
    header.extend(table.estimates.iter().map(|(m, _)| format!("est_{m}")));
    wtr.write_record(&header)?;
    for (i, x) in table.x.iter().enumerate() {
        let mut row = vec![x.to_string(), table.truth[i].to_string()];
        row.extend(table.estimates.iter().map(|(_, v)| v[i].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| KoopmanError::io(path, e))
}
