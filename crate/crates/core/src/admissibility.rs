//! Hypotheses of the finite-time blow-up result: parameter range for `α` and the
//! mass-concentration conditions on radial initial data, plus generators for data
//! families that satisfy them.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{RadialField, RadialGrid};

/// Tolerance for equality-type margins.
pub const MARGIN_TOL: f64 = 1e-12;

/// Domain and flux-limiter constants: `Ω = B_R(0) ⊂ R^N`, `f(ξ) = k_f (1+ξ)^{-α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub dim: u32,
    pub radius: f64,
    pub alpha: f64,
    pub k_f: f64,
}

impl ModelParams {
    /// Validates structural constraints only; the admissible `α` range is reported by
    /// [`check_alpha`] so that out-of-range values can still be studied.
    pub fn new(dim: u32, radius: f64, alpha: f64, k_f: f64) -> Result<Self> {
        let p = ModelParams { dim, radius, alpha, k_f };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 3 {
            return Err(Error::InvalidParameter(format!("dimension must be >= 3, got {}", self.dim)));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {}", self.radius)));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParameter("alpha must be finite".into()));
        }
        if !(self.k_f.is_finite() && self.k_f >= 0.0) {
            return Err(Error::InvalidParameter(format!("k_f must be >= 0, got {}", self.k_f)));
        }
        Ok(())
    }

    /// Upper end `(N-2)/(2(N-1))` of the admissible `α` interval.
    pub fn alpha_bound(&self) -> f64 {
        let n = f64::from(self.dim);
        (n - 2.0) / (2.0 * (n - 1.0))
    }
}

/// Outcome of one checked condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub name: &'static str,
    pub passed: bool,
    /// Signed slack; nonnegative (up to [`MARGIN_TOL`]) when the condition holds.
    pub margin: f64,
    pub detail: String,
}

/// Verdicts for every checked condition, each appearing once.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub verdicts: Vec<ConditionVerdict>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionVerdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn failures(&self) -> Vec<&ConditionVerdict> {
        self.verdicts.iter().filter(|v| !v.passed).collect()
    }

    fn push(&mut self, v: ConditionVerdict) {
        debug_assert!(self.get(v.name).is_none());
        self.verdicts.push(v);
    }

    /// `name passed margin detail` lines.
    pub fn to_text(&self) -> String {
        self.verdicts
            .iter()
            .map(|v| {
                format!(
                    "{} = {} # margin {:.6e}; {}\n",
                    v.name,
                    if v.passed { "pass" } else { "fail" },
                    v.margin,
                    v.detail
                )
            })
            .collect()
    }
}

/// How the "∫_{B_r} u0 ≥ ..." mass-concentration clause is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcentrationMode {
    /// `∫_{B_r} u0 ≥ (r/R)^N ∫_Ω u0` for all `r`.
    #[default]
    Corrected,
    /// `∫_{B_r} u0 ≥ ∫_Ω u0` for all `r < R`; fails for every nonzero datum.
    Literal,
}

/// `0 < α < (N-2)/(2(N-1))`.
pub fn check_alpha(params: &ModelParams) -> ConditionVerdict {
    let bound = params.alpha_bound();
    let margin = bound - params.alpha;
    ConditionVerdict {
        name: "alpha_range",
        passed: params.alpha > 0.0 && margin > 0.0,
        margin,
        detail: format!("0 < alpha = {} < (N-2)/(2(N-1)) = {}", params.alpha, bound),
    }
}

/// Mass inside `B_r` for the piecewise-constant density, `r` anywhere in `[0, R]`.
fn mass_within(u: &RadialField, cumulative: &[f64], r: f64) -> f64 {
    let grid = u.grid();
    let faces = grid.faces();
    let dim = grid.dim() as i32;
    let k = faces.partition_point(|&f| f <= r).saturating_sub(1).min(grid.n_cells() - 1);
    let partial = u.values()[k] * (r.powi(dim) - faces[k].powi(dim)) / f64::from(grid.dim());
    grid.omega() * (cumulative[k] + partial)
}

/// Nonnegativity and mean (the data-class prelude), the mass-concentration profile,
/// and the threshold `(1/|Ω|) ∫_{B_{R0}} u0 ≥ (μ/2)(R/R0)^N`.
pub fn check_concentration(u0: &RadialField, mu: f64, r0: f64, mode: ConcentrationMode) -> Result<AdmissibilityReport> {
    let grid = u0.grid();
    let radius = grid.radius();
    if !(r0 > 0.0 && r0 < radius) {
        return Err(Error::InvalidParameter(format!("R0 must lie in (0, {radius}), got {r0}")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    let mut report = AdmissibilityReport::default();

    let min = u0.values().iter().copied().fold(f64::INFINITY, f64::min);
    report.push(ConditionVerdict {
        name: "nonnegative",
        passed: min >= 0.0,
        margin: min,
        detail: "min u0 >= 0".into(),
    });
    let mean = u0.mean();
    let mean_err = (mean - mu).abs() / mu;
    report.push(ConditionVerdict {
        name: "mean",
        passed: mean_err <= 1e-10,
        margin: -mean_err,
        detail: format!("(1/|Omega|) int u0 = {mean} vs mu = {mu}"),
    });
    if min < 0.0 {
        return Ok(report);
    }

    let cumulative = u0.cumulative_mass()?;
    let n = grid.n_cells();
    let total = grid.omega() * cumulative[n];
    let dim = grid.dim() as i32;
    let (margin, detail) = match mode {
        ConcentrationMode::Corrected => {
            let worst = (1..n)
                .map(|f| {
                    let share = (grid.faces()[f] / radius).powi(dim);
                    (grid.omega() * cumulative[f] - share * total) / total
                })
                .fold(f64::INFINITY, f64::min);
            (worst, "int_{B_r} u0 >= (r/R)^N int_Omega u0 at every face".to_string())
        }
        ConcentrationMode::Literal => {
            let worst = (1..n).map(|f| (grid.omega() * cumulative[f] - total) / total).fold(f64::INFINITY, f64::min);
            (worst, "int_{B_r} u0 >= int_Omega u0 at every face (literal reading)".to_string())
        }
    };
    report.push(ConditionVerdict { name: "mass_concentration", passed: margin >= -MARGIN_TOL, margin, detail });

    let lhs = mass_within(u0, &cumulative, r0) / grid.total_volume();
    let rhs = 0.5 * mu * (radius / r0).powi(dim);
    report.push(ConditionVerdict {
        name: "core_threshold",
        passed: lhs >= rhs,
        margin: (lhs - rhs) / mu,
        detail: format!("(1/|Omega|) int_(B_R0) u0 = {lhs:.6e} >= (mu/2)(R/R0)^N = {rhs:.6e}"),
    });
    Ok(report)
}

/// `check_alpha` followed by [`check_concentration`].
pub fn check_all(
    params: &ModelParams,
    u0: &RadialField,
    mu: f64,
    r0: f64,
    mode: ConcentrationMode,
) -> Result<AdmissibilityReport> {
    if u0.grid().dim() != params.dim || u0.grid().radius() != params.radius {
        return Err(Error::GridMismatch("grid does not match model dimension/radius".into()));
    }
    let mut report = AdmissibilityReport::default();
    report.push(check_alpha(params));
    for v in check_concentration(u0, mu, r0, mode)?.verdicts {
        report.push(v);
    }
    Ok(report)
}

fn check_grid(params: &ModelParams, grid: &RadialGrid) -> Result<()> {
    if grid.dim() != params.dim || grid.radius() != params.radius {
        return Err(Error::GridMismatch(format!(
            "grid (N={}, R={}) vs model (N={}, R={})",
            grid.dim(),
            grid.radius(),
            params.dim,
            params.radius
        )));
    }
    Ok(())
}

/// Nonincreasing profile with mean `mu`: a fraction `concentration` of the total mass sits
/// in the bump `(1 - (r/core_radius)²)²`, the rest is spread uniformly.
///
/// Cell values are exact shell averages of the bump, so the discrete mean is `mu` up to
/// rounding and the profile is nonincreasing cell by cell.
pub fn make_bump(
    params: &ModelParams,
    grid: &Arc<RadialGrid>,
    mu: f64,
    concentration: f64,
    core_radius: f64,
) -> Result<RadialField> {
    check_grid(params, grid)?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if !(concentration > 0.0 && concentration <= 1.0) {
        return Err(Error::InvalidParameter(format!("concentration must lie in (0, 1], got {concentration}")));
    }
    if !(core_radius < grid.radius()) {
        return Err(Error::InvalidParameter(format!(
            "core_radius {core_radius} must be smaller than R = {}",
            grid.radius()
        )));
    }
    if !(core_radius > grid.faces()[1]) {
        return Err(Error::InvalidParameter(format!(
            "core_radius {core_radius} must exceed the innermost face {} to be resolved",
            grid.faces()[1]
        )));
    }
    let n = f64::from(grid.dim());
    let rc2 = core_radius * core_radius;
    // antiderivative of (1 - 2r²/rc² + r⁴/rc⁴) r^{N-1}
    let prim = |r: f64| {
        let rn = r.powi(grid.dim() as i32);
        rn / n - 2.0 * rn * r * r / ((n + 2.0) * rc2) + rn * r.powi(4) / ((n + 4.0) * rc2 * rc2)
    };
    let bump: Vec<f64> = grid
        .faces()
        .windows(2)
        .zip(grid.shells())
        .map(|(w, s)| {
            let (a, b) = (w[0].min(core_radius), w[1].min(core_radius));
            ((prim(b) - prim(a)) / s).max(0.0)
        })
        .collect();
    let bump_mass: f64 = bump.iter().zip(grid.volumes()).map(|(b, v)| b * v).sum();
    let scale = concentration * mu * grid.total_volume() / bump_mass;
    let base = (1.0 - concentration) * mu;
    let mut values: Vec<f64> = bump.iter().map(|b| base + scale * b).collect();
    // monotone by construction; remove rounding inversions
    for i in 1..values.len() {
        if values[i] > values[i - 1] {
            values[i] = values[i - 1];
        }
    }
    RadialField::density(grid.clone(), values)
}

/// Seeded random nonincreasing profile with mean `mu`.
pub fn make_random_monotone(params: &ModelParams, grid: &Arc<RadialGrid>, mu: f64, seed: u64) -> Result<RadialField> {
    check_grid(params, grid)?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..grid.n_cells()).map(|_| rng.gen_range(0.0..1.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let raw = RadialField::density(grid.clone(), values)?;
    let k = mu / raw.mean();
    RadialField::density(grid.clone(), raw.into_values().into_iter().map(|v| v * k).collect())
}
