//! Report and training-log files.
//!
//! A report is a CSV with columns `label, mean, std, count` and a JSON sidecar
//! `<file>.json` holding its provenance. Training logs are CSV with columns
//! `step, train_mse, holdout_rel_l2`; absent values are empty cells.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiments::{ExperimentReport, Provenance, ReportRow};
use crate::fno::{TrainingLog, TrainingLogRow};
use crate::metrics::ErrorStat;

use super::{sidecar_path, to_json_bytes, write_atomic};

#[derive(Serialize, Deserialize)]
struct CsvRow {
    label: String,
    mean: f64,
    std: f64,
    count: usize,
}

pub fn report_csv(report: &ExperimentReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.rows {
        w.serialize(CsvRow {
            label: r.label.clone(),
            mean: r.stat.mean,
            std: r.stat.std,
            count: r.stat.count,
        })?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn parse_report_csv(bytes: &[u8]) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            Ok(ReportRow {
                label: row.label,
                stat: ErrorStat {
                    mean: row.mean,
                    std: row.std,
                    count: row.count,
                },
            })
        })
        .collect()
}

pub fn write_report(path: &Path, report: &ExperimentReport) -> Result<()> {
    write_atomic(path, &report_csv(report)?)?;
    write_atomic(&sidecar_path(path), &to_json_bytes(&report.provenance)?)
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let rows = parse_report_csv(&std::fs::read(path)?)?;
    let provenance: Provenance = serde_json::from_slice(&std::fs::read(sidecar_path(path))?)?;
    Ok(ExperimentReport { rows, provenance })
}

pub fn training_log_csv(log: &TrainingLog) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &log.rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn parse_training_log_csv(bytes: &[u8]) -> Result<TrainingLog> {
    let mut r = csv::Reader::from_reader(bytes);
    let rows = r.deserialize::<TrainingLogRow>().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(TrainingLog { rows })
}

pub fn write_training_log(path: &Path, log: &TrainingLog) -> Result<()> {
    write_atomic(path, &training_log_csv(log)?)
}

/// Any serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json_bytes(value)?)
}
