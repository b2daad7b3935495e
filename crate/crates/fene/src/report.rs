//! Time-series tables and the per-command summary document.

use std::io::{Read, Write};

use fene_core::diagnostics::{AuxRecord, DiagnosticsRecord, CSV_COLUMNS};
use serde::Serialize;

/// Version of the column layout; recorded in every summary.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("report I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unexpected CSV header: {0}")]
    Header(String),
    #[error("row {row}: cannot read {column} = {value:?}")]
    Value { row: usize, column: String, value: String },
}

/// Shortest round-tripping representation.
fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_records_csv(w: impl Write, records: &[DiagnosticsRecord]) -> Result<(), ReportError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for r in records {
        out.write_record(r.values().iter().map(|&v| num(v)))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records_csv(r: impl Read) -> Result<Vec<DiagnosticsRecord>, ReportError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header != CSV_COLUMNS {
        return Err(ReportError::Header(header.join(",")));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut v = [0.0; 19];
        for (i, field) in rec.iter().enumerate() {
            v[i] = field.trim().parse().map_err(|_| ReportError::Value {
                row: row + 1,
                column: CSV_COLUMNS[i].into(),
                value: field.into(),
            })?;
        }
        out.push(DiagnosticsRecord::from_values(v));
    }
    Ok(out)
}

pub const AUX_COLUMNS: [&str; 6] = ["t", "E1_alt", "split_radius", "split_saturated", "du_sq", "cross"];

pub fn write_aux_csv(w: impl Write, aux: &[AuxRecord]) -> Result<(), ReportError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(AUX_COLUMNS)?;
    for a in aux {
        out.write_record([
            num(a.t),
            num(a.e1_alt),
            num(a.split_radius),
            (a.split_saturated as u8).to_string(),
            num(a.du_sq),
            num(a.cross),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Plot-ready long table `t, quantity, value`.
pub fn write_long(w: impl Write, records: &[DiagnosticsRecord]) -> Result<(), ReportError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "quantity", "value"])?;
    for r in records {
        let t = num(r.t);
        for (name, v) in CSV_COLUMNS.iter().zip(r.values()).skip(1) {
            out.write_record([t.as_str(), name, &num(v)])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: String,
    pub status: String,
    pub checks: Vec<Check>,
    pub data: serde_json::Value,
    pub files: Vec<String>,
}

impl Summary {
    pub fn new(command: &str, checks: Vec<Check>, data: serde_json::Value) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            status: if passed { "pass" } else { "fail" }.into(),
            checks,
            data,
            files: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn write(&self, w: impl Write) -> Result<(), ReportError> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// Record-level invariants: finite nonnegative norms and nondecreasing `E1`, `E2`.
pub fn validate_records(records: &[DiagnosticsRecord]) -> Vec<Check> {
    let bad = records
        .iter()
        .find_map(|r| r.invalid_column().map(|c| format!("{c} at t = {}", r.t)));
    let monotone = records
        .windows(2)
        .find(|w| w[1].e1 < w[0].e1 || w[1].e2 < w[0].e2)
        .map(|w| format!("decrease at t = {}", w[1].t));
    vec![
        Check::new(
            "records_finite_nonnegative",
            bad.is_none() && !records.is_empty(),
            bad.unwrap_or_else(|| format!("{} records", records.len())),
        ),
        Check::new(
            "energy_functionals_nondecreasing",
            monotone.is_none(),
            monotone.unwrap_or_else(|| "ok".into()),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64) -> DiagnosticsRecord {
        let mut v = [0.0; 19];
        for (i, x) in v.iter_mut().enumerate() {
            *x = (t + 1.0) * (i as f64 + 0.1).sqrt() / 3.0;
        }
        v[0] = t;
        DiagnosticsRecord::from_values(v)
    }

    #[test]
    fn one_record_is_two_lines() {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &[rec(0.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let records: Vec<_> = (0..5).map(|i| rec(0.1 * i as f64)).collect();
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records).unwrap();
        assert_eq!(read_records_csv(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn corrupted_stream_fails_validation() {
        let mut records: Vec<_> = (0..3).map(|i| rec(i as f64)).collect();
        assert!(validate_records(&records).iter().all(|c| c.passed));
        records[1].psi_l2 = -1.0;
        let checks = validate_records(&records);
        assert!(!checks[0].passed);
        assert!(!Summary::new("run", checks, serde_json::Value::Null).passed());
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(matches!(read_records_csv("a,b\n1,2\n".as_bytes()), Err(ReportError::Header(_))));
    }
}
