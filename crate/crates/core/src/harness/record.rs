//! On-disk form of a [`RunRecord`]: `series.csv`, `bounds.txt`, `manifest.txt`,
//! `admissibility.txt` and a `config.toml` snapshot.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::chemotaxis::{BlowupTrigger, Verdict};
use crate::error::{Error, Result};
use crate::harness::experiment::{BoundOutcome, RunRecord};

pub const SERIES_FILE: &str = "series.csv";
pub const BOUNDS_FILE: &str = "bounds.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const ADMISSIBILITY_FILE: &str = "admissibility.txt";
pub const CONFIG_FILE: &str = "config.toml";

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), |v| v.to_string())
}

/// Column names: `t, mass, linf, lp_<p>..., psi_<p>..., dt`.
pub fn series_header(probes: &[f64]) -> Vec<String> {
    let mut h = vec!["t".to_string(), "mass".into(), "linf".into()];
    h.extend(probes.iter().map(|p| format!("lp_{p}")));
    h.extend(probes.iter().map(|p| format!("psi_{p}")));
    h.push("dt".into());
    h
}

pub fn write_series(record: &RunRecord, path: &Path) -> Result<()> {
    let traj = &record.trajectory;
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(series_header(&traj.probes)).map_err(csv_err)?;
    for s in &traj.samples {
        let mut row = vec![s.t.to_string(), s.mass.to_string(), s.linf.to_string()];
        row.extend(s.lp.iter().map(f64::to_string));
        row.extend(s.psi.iter().map(f64::to_string));
        row.push(s.dt.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Constants report followed by the three `T` values.
pub fn bound_report(b: &BoundOutcome) -> String {
    let mut out = b.constants.report();
    if let Some(est) = b.c_gn_estimate {
        let _ = writeln!(out, "C_GN_estimate = {est:e} # largest GN ratio over the test family");
    }
    let _ = writeln!(out, "Psi0 = {:e} # ||u0||_p^p / p", b.psi0);
    let _ = writeln!(
        out,
        "T_quadrature = {:e} # int_Psi0^inf d eta / (B1 eta + B2 eta^gamma1 + B3 eta^gamma2 + B4 eta^gamma3)",
        b.t_quadrature
    );
    if let Ok(a) = b.constants.growth_coefficient(b.psi0) {
        let _ = writeln!(out, "A = {a:e} # sum_i B_i Psi0^(gamma_i - gamma)");
    }
    let _ = writeln!(out, "T_closed_form = {} # 1 / (A (gamma-1) Psi0^(gamma-1))", opt(b.t_closed_form));
    let _ = writeln!(out, "T_ode = {} # blow-up time of phi' = F(phi), phi(0) = Psi0", opt(b.t_ode));
    out
}

fn trigger_label(t: BlowupTrigger) -> &'static str {
    match t {
        BlowupTrigger::Threshold => "threshold",
        BlowupTrigger::DtUnderflow => "dt_underflow",
    }
}

/// `key=value` lines summarizing the run.
pub fn manifest(record: &RunRecord) -> String {
    let traj = &record.trajectory;
    let cfg = &record.config;
    let last = traj.samples.last();
    let mut lines: Vec<(String, String)> =
        vec![("verdict".into(), traj.verdict.label().into()), ("t_detect".into(), opt(traj.verdict.t_detect()))];
    match &traj.verdict {
        Verdict::BlowupDetected { trigger, .. } => lines.push(("trigger".into(), trigger_label(*trigger).into())),
        Verdict::StepFailure { reason, .. } => lines.push(("failure".into(), reason.replace('\n', " "))),
        Verdict::ReachedHorizon => {}
    }
    lines.extend([
        ("t_final".into(), traj.final_state.t.to_string()),
        ("t_max_extrapolated".into(), opt(traj.extrapolation.map(|f| f.t_max))),
        ("blowup_exponent".into(), opt(traj.extrapolation.map(|f| f.exponent))),
        ("T_quadrature".into(), record.bound.t_quadrature.to_string()),
        ("T_closed_form".into(), opt(record.bound.t_closed_form)),
        ("T_ode".into(), opt(record.bound.t_ode)),
        ("T_le_t_detect".into(), record.bound_respected().to_string()),
        ("c_gn".into(), record.bound.constants.c_gn.to_string()),
        ("c_gn_estimate".into(), opt(record.bound.c_gn_estimate)),
        ("psi0".into(), record.bound.psi0.to_string()),
        ("psi_checked".into(), record.psi_check.as_ref().map_or("0".into(), |r| r.checked.to_string())),
        ("psi_violations".into(), record.psi_check.as_ref().map_or("none".into(), |r| r.violations.to_string())),
        ("psi_min_relative_slack".into(), opt(record.psi_check.as_ref().map(|r| r.min_relative_slack))),
        ("admissible".into(), record.admissibility.passed().to_string()),
        ("initial_mass".into(), traj.initial_mass.to_string()),
        ("max_mass_drift".into(), traj.max_mass_drift().to_string()),
        ("u_blow".into(), traj.u_blow.to_string()),
        ("final_linf".into(), opt(last.map(|s| s.linf))),
        ("samples".into(), traj.samples.len().to_string()),
        ("steps".into(), traj.steps.to_string()),
        ("rejections".into(), traj.rejections.to_string()),
        ("n_cells".into(), cfg.grid.n_cells.to_string()),
        ("seed".into(), cfg.run.seed.to_string()),
        ("exit_code".into(), record.exit_code().to_string()),
    ]);
    lines.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Parses `key=value` lines.
pub fn parse_manifest(text: &str) -> Vec<(String, String)> {
    text.lines().filter_map(|l| l.split_once('=')).map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

pub fn write_record(record: &RunRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_series(record, &dir.join(SERIES_FILE))?;
    fs::write(dir.join(BOUNDS_FILE), bound_report(&record.bound))?;
    fs::write(dir.join(ADMISSIBILITY_FILE), record.admissibility.to_text())?;
    fs::write(dir.join(CONFIG_FILE), record.config.to_toml_string()?)?;
    fs::write(dir.join(MANIFEST_FILE), manifest(record))?;
    Ok(())
}
