//! Sampled `Ψ(t)` along a simulation and the check of `Ψ' ≤ F(Ψ)`.

use serde::Serialize;

use super::constants::BoundConstants;
use crate::chemotaxis::Trajectory;
use crate::error::{Error, Result};

/// `Ψ` samples with finite-difference derivatives.
///
/// Interior derivatives use the three-point formula for non-uniform spacing; the two
/// end points use one-sided differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

impl PsiTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidParameter(format!("{} times but {} values", times.len(), values.len())));
        }
        if times.len() < 3 {
            return Err(Error::InvalidParameter(format!("need at least 3 samples, got {}", times.len())));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(format!("times not strictly increasing at index {}", i + 1)));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("Psi must be finite and >= 0, got {v}")));
        }
        let n = times.len();
        let mut derivatives = vec![0.0; n];
        derivatives[0] = (values[1] - values[0]) / (times[1] - times[0]);
        derivatives[n - 1] = (values[n - 1] - values[n - 2]) / (times[n - 1] - times[n - 2]);
        for i in 1..n - 1 {
            let (h0, h1) = (times[i] - times[i - 1], times[i + 1] - times[i]);
            derivatives[i] = -h1 / (h0 * (h0 + h1)) * values[i - 1]
                + (h1 - h0) / (h0 * h1) * values[i]
                + h0 / (h1 * (h0 + h1)) * values[i + 1];
        }
        Ok(PsiTrace { times, values, derivatives })
    }

    /// `Ψ_p` column of a simulation; `p` must be one of its probe exponents.
    pub fn from_trajectory(traj: &Trajectory, p: f64) -> Result<Self> {
        let k = traj
            .probe_index(p)
            .ok_or_else(|| Error::InvalidParameter(format!("p = {p} is not among the probes {:?}", traj.probes)))?;
        let (mut times, mut values) = traj.psi_series(k);
        // drop repeated sample times (possible only for the final row)
        let mut i = 1;
        while i < times.len() {
            if times[i] <= times[i - 1] {
                times.remove(i);
                values.remove(i);
            } else {
                i += 1;
            }
        }
        PsiTrace::new(times, values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiCheckReport {
    /// Interior samples examined.
    pub checked: usize,
    /// Samples with `slack < -tol · F(Ψ)`.
    pub violations: usize,
    /// Smallest `F(Ψ) - Ψ'`.
    pub min_slack: f64,
    /// Smallest `(F(Ψ) - Ψ')/F(Ψ)`.
    pub min_relative_slack: f64,
    pub worst_time: f64,
}

/// Evaluates `slack = F(Ψ(t_i)) - Ψ'(t_i)` at every interior sample.
pub fn check_psi_inequality(trace: &PsiTrace, k: &BoundConstants, tol: f64) -> Result<PsiCheckReport> {
    if trace.times.len() < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 samples, got {}", trace.times.len())));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be >= 0, got {tol}")));
    }
    let n = trace.times.len();
    let mut report = PsiCheckReport {
        checked: 0,
        violations: 0,
        min_slack: f64::INFINITY,
        min_relative_slack: f64::INFINITY,
        worst_time: trace.times[1],
    };
    for i in 1..n - 1 {
        let rhs = k.rhs(trace.values[i]);
        let slack = rhs - trace.derivatives[i];
        report.checked += 1;
        if slack < -tol * rhs {
            report.violations += 1;
        }
        if slack < report.min_slack {
            report.min_slack = slack;
            report.worst_time = trace.times[i];
        }
        let rel = if rhs > 0.0 {
            slack / rhs
        } else if slack >= 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        report.min_relative_slack = report.min_relative_slack.min(rel);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissibility::ModelParams;
    use crate::bounds::build_constants;

    fn constants() -> BoundConstants {
        build_constants(&ModelParams::new(3, 1.0, 0.15, 1.0).unwrap(), 1.0, 2.0, 0.05, 0.5).unwrap()
    }

    #[test]
    fn derivatives_exact_for_quadratics() {
        let times = vec![0.0, 0.1, 0.35, 0.4, 1.0];
        let values: Vec<f64> = times.iter().map(|t| 1.0 + 2.0 * t + 3.0 * t * t).collect();
        let tr = PsiTrace::new(times.clone(), values).unwrap();
        for (d, t) in tr.derivatives.iter().zip(&times).take(4).skip(1) {
            assert!((d - (2.0 + 6.0 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn short_or_bad_traces_rejected() {
        assert!(PsiTrace::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(PsiTrace::new(vec![0.0, 1.0, 1.0], vec![1.0; 3]).is_err());
        assert!(PsiTrace::new(vec![0.0, 1.0, 2.0], vec![1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn constant_psi_has_no_violations() {
        let tr = PsiTrace::new(vec![0.0, 0.5, 1.0, 1.5], vec![2.0; 4]).unwrap();
        let r = check_psi_inequality(&tr, &constants(), 0.05).unwrap();
        assert_eq!(r.checked, 2);
        assert_eq!(r.violations, 0);
        assert!(r.min_slack > 0.0);
    }

    #[test]
    fn fast_growth_is_flagged() {
        let k = constants();
        let times: Vec<f64> = (0..20).map(|i| f64::from(i) * 1e-8).collect();
        let values: Vec<f64> = times.iter().map(|t| 1.0 + 1e6 * t).collect();
        assert!(k.rhs(1.1) < 1e5);
        let tr = PsiTrace::new(times, values).unwrap();
        let r = check_psi_inequality(&tr, &k, 0.05).unwrap();
        assert_eq!(r.violations, r.checked);
        assert!(r.min_slack < 0.0);
    }
}
