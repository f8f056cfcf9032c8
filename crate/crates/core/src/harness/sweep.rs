//! Parameter sweeps: independent runs along one scalar config field, collected into a
//! summary table sorted by the axis value.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::harness::config::RunConfig;
use crate::harness::experiment::{execute, RunRecord};
use crate::harness::record::write_record;

pub const SUMMARY_FILE: &str = "summary.csv";

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub verdict: String,
    pub t_detect: Option<f64>,
    pub t_quadrature: Option<f64>,
    pub t_closed: Option<f64>,
    /// `t_detect / T_quadrature`.
    pub ratio: Option<f64>,
    pub max_mass_drift: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub axis: String,
    pub rows: Vec<SweepRow>,
    /// Records of the runs that completed, aligned with `rows`.
    pub records: Vec<Option<RunRecord>>,
}

/// Rejects axes that name a section or a list.
fn check_axis(template: &RunConfig, axis: &str) -> Result<()> {
    let table: toml::Table = template.to_toml_string()?.parse().map_err(|e| Error::Config(format!("{e}")))?;
    let mut node = toml::Value::Table(table);
    for part in axis.split('.') {
        match node.as_table().and_then(|t| t.get(part)) {
            Some(next) => node = next.clone(),
            None => return Ok(()),
        }
    }
    match node {
        toml::Value::Table(_) | toml::Value::Array(_) => {
            Err(Error::Config(format!("sweep axis '{axis}' is not a scalar field")))
        }
        _ => Ok(()),
    }
}

fn compare_values(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

fn row_for(value: &str, result: &Result<RunRecord>) -> SweepRow {
    match result {
        Ok(rec) => {
            let t_detect = rec.trajectory.verdict.t_detect();
            let t_q = rec.bound.t_quadrature;
            SweepRow {
                value: value.to_string(),
                verdict: rec.trajectory.verdict.label().to_string(),
                t_detect,
                t_quadrature: Some(t_q),
                t_closed: rec.bound.t_closed_form,
                ratio: t_detect.map(|t| t / t_q),
                max_mass_drift: Some(rec.trajectory.max_mass_drift()),
                error: None,
            }
        }
        Err(e) => SweepRow {
            value: value.to_string(),
            verdict: "Error".to_string(),
            t_detect: None,
            t_quadrature: None,
            t_closed: None,
            ratio: None,
            max_mass_drift: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs one experiment per axis value. Individual failures are recorded in their
/// rows; only an invalid axis aborts the sweep.
pub fn sweep(mode: ExecMode, template: &RunConfig, axis: &str, values: &[String]) -> Result<SweepOutcome> {
    check_axis(template, axis)?;
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut sorted: Vec<String> = values.to_vec();
    sorted.sort_by(|a, b| compare_values(a, b));
    let results = exec::map(mode, &sorted, |v| template.with_override(axis, v).and_then(|c| execute(&c)));
    let rows = sorted.iter().zip(&results).map(|(v, r)| row_for(v, r)).collect();
    let records = results.into_iter().map(Result::ok).collect();
    Ok(SweepOutcome { axis: axis.to_string(), rows, records })
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Writes `summary.csv` and one `run_<k>` directory per completed run.
pub fn write_sweep(outcome: &SweepOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(SUMMARY_FILE)).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record([
        outcome.axis.as_str(),
        "verdict",
        "t_detect",
        "T_quadrature",
        "T_closed",
        "ratio",
        "max_mass_drift",
        "error",
    ])
    .map_err(|e| Error::Io(e.to_string()))?;
    for r in &outcome.rows {
        w.write_record([
            r.value.clone(),
            r.verdict.clone(),
            cell(r.t_detect),
            cell(r.t_quadrature),
            cell(r.t_closed),
            cell(r.ratio),
            cell(r.max_mass_drift),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    for (k, rec) in outcome.records.iter().enumerate() {
        if let Some(rec) = rec {
            write_record(rec, &dir.join(format!("run_{k:03}")))?;
        }
    }
    Ok(())
}
