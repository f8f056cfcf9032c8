//! One experiment: admissibility, bound pipeline, simulation and the `Ψ` check.

use std::sync::Arc;

use crate::admissibility::{check_all, AdmissibilityReport};
use crate::bounds::{
    build_constants, check_psi_inequality, estimate_gn_constant, BoundConstants, PsiCheckReport, PsiTrace,
};
use crate::chemotaxis::{run, Trajectory, Verdict};
use crate::error::{Error, Result};
use crate::harness::config::{GnSetting, RunConfig};
use crate::radial::{RadialField, RadialGrid};

/// Exit codes of the command line front end.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const INADMISSIBLE: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

/// Exit code for an error raised before or during an experiment.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Inadmissible(_) => exit::INADMISSIBLE,
        Error::NumericalFailure { .. } | Error::NonFinite { .. } => exit::NUMERICAL,
        _ => exit::CONFIG,
    }
}

/// Grid, initial density and admissibility verdicts.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Arc<RadialGrid>,
    pub u0: RadialField,
    pub admissibility: AdmissibilityReport,
}

/// Builds the grid and initial data and checks the hypotheses. Construction problems
/// are configuration errors; failed hypotheses are only reported.
pub fn setup(config: &RunConfig) -> Result<Setup> {
    let as_config = |e: Error| match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    };
    let grid = config.build_grid().map_err(as_config)?;
    let u0 = config.initial_data(&grid).map_err(as_config)?;
    let admissibility = check_all(&config.model, &u0, config.initial.mu, config.bound.r0, config.concentration_mode())
        .map_err(as_config)?;
    Ok(Setup { grid, u0, admissibility })
}

/// Fails with [`Error::Inadmissible`] unless the report passes or the config allows it.
pub fn require_admissible(config: &RunConfig, report: &AdmissibilityReport) -> Result<()> {
    if report.passed() || config.run.allow_inadmissible {
        return Ok(());
    }
    let names: Vec<String> =
        report.failures().iter().map(|v| format!("{} (margin {:.3e})", v.name, v.margin)).collect();
    Err(Error::Inadmissible(format!("failed conditions: {}", names.join(", "))))
}

/// Bound pipeline evaluated on the initial data.
#[derive(Debug, Clone)]
pub struct BoundOutcome {
    pub constants: BoundConstants,
    /// Empirical GN ratio before the safety factor, when `C_GN` was estimated.
    pub c_gn_estimate: Option<f64>,
    pub psi0: f64,
    pub t_quadrature: f64,
    /// Absent when the majorant has no superlinear term.
    pub t_closed_form: Option<f64>,
    pub t_ode: Option<f64>,
}

pub fn evaluate_bound(config: &RunConfig, grid: &RadialGrid, u0: &RadialField) -> Result<BoundOutcome> {
    let b = &config.bound;
    let (c_gn, c_gn_estimate) = match &b.c_gn {
        GnSetting::Value(v) => (*v, None),
        GnSetting::Keyword(_) => {
            let est = estimate_gn_constant(grid, b.p, b.gn_family_size).map_err(|e| Error::Config(e.to_string()))?;
            (est * b.c_gn_safety, Some(est))
        }
    };
    let constants = build_constants(&config.model, config.initial.mu, b.p, config.epsilon(), c_gn)
        .map_err(|e| Error::Config(format!("bound pipeline: {e}")))?;
    let psi0 = u0.lp_integral(b.p)? / b.p;
    let t_quadrature = constants.lower_bound_quadrature(psi0)?;
    let (t_closed_form, t_ode) = if t_quadrature.is_finite() {
        let ode = constants.comparison_ode(psi0, t_quadrature)?;
        (Some(constants.lower_bound_closed_form(psi0)?), ode.blowup_time)
    } else {
        (None, None)
    };
    Ok(BoundOutcome { constants, c_gn_estimate, psi0, t_quadrature, t_closed_form, t_ode })
}

/// Everything observed in one experiment.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: RunConfig,
    pub admissibility: AdmissibilityReport,
    pub bound: BoundOutcome,
    pub trajectory: Trajectory,
    /// `None` when fewer than three samples were recorded.
    pub psi_check: Option<PsiCheckReport>,
}

impl RunRecord {
    /// `T ≤ t_detect` for detected blow-up; trivially true otherwise.
    pub fn bound_respected(&self) -> bool {
        match self.trajectory.verdict {
            Verdict::BlowupDetected { t_detect, .. } => self.bound.t_quadrature <= t_detect,
            _ => true,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.trajectory.verdict {
            Verdict::StepFailure { .. } => exit::NUMERICAL,
            _ => exit::OK,
        }
    }
}

/// Runs the whole pipeline in memory.
pub fn execute(config: &RunConfig) -> Result<RunRecord> {
    config.validate()?;
    let Setup { grid, u0, admissibility } = setup(config)?;
    require_admissible(config, &admissibility)?;
    let bound = evaluate_bound(config, &grid, &u0)?;
    let limiter = config.limiter().map_err(|e| Error::Config(e.to_string()))?;
    let trajectory = run(u0, limiter, &config.controller.controller(), &config.probes.p)?;
    let psi_check = match PsiTrace::from_trajectory(&trajectory, config.bound.p) {
        Ok(trace) => Some(check_psi_inequality(&trace, &bound.constants, config.bound.psi_tol)?),
        Err(_) => None,
    };
    Ok(RunRecord { config: config.clone(), admissibility, bound, trajectory, psi_check })
}

/// Runs the pipeline and writes the record into `out`. Nothing is written when the
/// configuration is rejected.
pub fn run_experiment(config: &RunConfig, out: &std::path::Path) -> Result<RunRecord> {
    let record = execute(config)?;
    super::record::write_record(&record, out)?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    const STEADY: &str = r#"
[model]
dim = 3
radius = 1.0
alpha = 0.15
k_f = 1.0
[grid]
n_cells = 32
[initial]
kind = "constant"
mu = 2.0
[controller]
t_end = 0.01
[probes]
p = [2.0]
[bound]
p = 2.0
r0 = 0.9
"#;

    #[test]
    fn steady_experiment() {
        let c = RunConfig::from_toml_str(STEADY, &[]).unwrap();
        let rec = execute(&c).unwrap();
        assert_eq!(rec.trajectory.verdict, Verdict::ReachedHorizon);
        assert!(rec.bound.t_quadrature.is_finite() && rec.bound.t_quadrature > 0.0);
        assert!(rec.bound_respected());
        assert_eq!(rec.exit_code(), exit::OK);
        assert_eq!(rec.psi_check.as_ref().unwrap().violations, 0);
        let t_ode = rec.bound.t_ode.unwrap();
        assert!((t_ode - rec.bound.t_quadrature).abs() <= 1e-6 * rec.bound.t_quadrature);
        assert!(rec.bound.t_closed_form.unwrap() <= rec.bound.t_quadrature);
    }

    #[test]
    fn inadmissible_is_reported() {
        let o = [("model.alpha".to_string(), "0.3".to_string())];
        let c = RunConfig::from_toml_str(STEADY, &o).unwrap();
        let e = execute(&c).unwrap_err();
        assert_eq!(exit_code(&e), exit::INADMISSIBLE);
        let o = [
            ("model.alpha".to_string(), "0.3".to_string()),
            ("run.allow_inadmissible".to_string(), "true".to_string()),
            ("bound.c_gn".to_string(), "0.1".to_string()),
        ];
        assert!(execute(&RunConfig::from_toml_str(STEADY, &o).unwrap()).is_ok());
    }

    #[test]
    fn infeasible_bound_is_a_config_error() {
        let o = [("bound.c_gn".to_string(), "50".to_string())];
        let e = execute(&RunConfig::from_toml_str(STEADY, &o).unwrap()).unwrap_err();
        assert_eq!(exit_code(&e), exit::CONFIG);
    }
}
