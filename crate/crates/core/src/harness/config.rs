//! TOML run configuration.
//!
//! ```toml
//! [model]
//! dim = 3
//! radius = 1.0
//! alpha = 0.15
//! k_f = 1.0
//!
//! [grid]
//! n_cells = 512
//! grading = 1.0          # faces at R (i/n)^grading
//!
//! [initial]
//! kind = "bump"          # bump | constant | random | file
//! mu = 20.0
//! concentration = 0.8    # bump only
//! core_radius = 0.3      # bump only
//! # path = "profile.txt" # file only: one cell average per line
//!
//! [controller]
//! t_end = 1.0
//!
//! [probes]
//! p = [2.0, 3.0]
//!
//! [bound]
//! p = 2.0
//! c_gn = "estimate"      # or a number
//! r0 = 0.9
//!
//! [run]
//! seed = 0
//! ```
//!
//! Every other field has a default. Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::admissibility::{make_bump, make_random_monotone, ConcentrationMode, ModelParams};
use crate::chemotaxis::{FluxLimiter, StepController};
use crate::error::{Error, Result};
use crate::radial::{FieldKind, RadialField, RadialGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_cells: usize,
    #[serde(default = "one")]
    pub grading: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Bump,
    Constant,
    Random,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub t_end: f64,
    #[serde(default = "ControllerSpec::default_cfl_diffusion")]
    pub cfl_diffusion: f64,
    #[serde(default = "ControllerSpec::default_cfl_advection")]
    pub cfl_advection: f64,
    #[serde(default = "ControllerSpec::default_dt_min")]
    pub dt_min: f64,
    #[serde(default = "ControllerSpec::default_blowup_factor")]
    pub blowup_factor: f64,
    /// Defaults to `t_end / 200`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    #[serde(default = "ControllerSpec::default_sample_growth")]
    pub sample_growth: f64,
    #[serde(default = "ControllerSpec::default_max_steps")]
    pub max_steps: u64,
}

impl ControllerSpec {
    fn default_cfl_diffusion() -> f64 {
        StepController::new(1.0).cfl_diffusion
    }
    fn default_cfl_advection() -> f64 {
        StepController::new(1.0).cfl_advection
    }
    fn default_dt_min() -> f64 {
        StepController::new(1.0).dt_min
    }
    fn default_blowup_factor() -> f64 {
        StepController::new(1.0).blowup_factor
    }
    fn default_sample_growth() -> f64 {
        StepController::new(1.0).sample_growth
    }
    fn default_max_steps() -> u64 {
        StepController::new(1.0).max_steps
    }

    pub fn controller(&self) -> StepController {
        let mut c = StepController::new(self.t_end);
        c.cfl_diffusion = self.cfl_diffusion;
        c.cfl_advection = self.cfl_advection;
        c.dt_min = self.dt_min;
        c.blowup_factor = self.blowup_factor;
        if let Some(s) = self.sample_interval {
            c.sample_interval = s;
        }
        c.sample_growth = self.sample_growth;
        c.max_steps = self.max_steps;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub p: Vec<f64>,
}

/// `C_GN` as a number or the keyword `"estimate"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GnSetting {
    Value(f64),
    Keyword(String),
}

impl Default for GnSetting {
    fn default() -> Self {
        GnSetting::Keyword("estimate".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSpec {
    pub p: f64,
    /// Defaults to `0.05 (2p/N - 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub c_gn: GnSetting,
    #[serde(default = "BoundSpec::default_safety")]
    pub c_gn_safety: f64,
    #[serde(default = "BoundSpec::default_family")]
    pub gn_family_size: usize,
    pub r0: f64,
    #[serde(default = "BoundSpec::default_psi_tol")]
    pub psi_tol: f64,
}

impl BoundSpec {
    fn default_safety() -> f64 {
        crate::bounds::gn::DEFAULT_SAFETY
    }
    fn default_family() -> usize {
        64
    }
    fn default_psi_tol() -> f64 {
        0.05
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub allow_inadmissible: bool,
    /// At most `i64::MAX`, the largest TOML integer.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub concentration_mode: ConcentrationMode,
    /// Output directory; the `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    pub controller: ControllerSpec,
    pub probes: ProbeSpec,
    pub bound: BoundSpec,
    #[serde(default)]
    pub run: RunSpec,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// Sets `table[a][b]... = value` for a dotted key; the value is read as a TOML literal
/// and falls back to a plain string.
fn set_dotted(root: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key '{key}'")));
    }
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{part}' is not a section")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("override '{s}' is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl RunConfig {
    /// Parses TOML text, applies `section.key=value` overrides and validates.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(config_err)?;
        for (k, v) in overrides {
            set_dotted(&mut table, k, v)?;
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a file; a relative profile path is resolved against the file's directory.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut table: toml::Table = text.parse().map_err(config_err)?;
        for (k, v) in overrides {
            set_dotted(&mut table, k, v)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table).try_into().map_err(config_err)?;
        if let (Some(p), Some(dir)) = (cfg.initial.path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    /// Copy with one dotted override applied.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let text = self.to_toml_string()?;
        RunConfig::from_toml_str(&text, &[(key.to_string(), value.to_string())])
    }

    /// Structural checks that need no computation; all failures are configuration errors.
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.model.validate().map_err(wrap)?;
        if i64::try_from(self.run.seed).is_err() {
            return Err(Error::Config(format!("run.seed must be at most {}, got {}", i64::MAX, self.run.seed)));
        }
        if !(self.grid.grading.is_finite() && self.grid.grading >= 1.0) {
            return Err(Error::Config(format!("grid.grading must be >= 1, got {}", self.grid.grading)));
        }
        if self.grid.n_cells < crate::radial::MIN_CELLS {
            return Err(Error::Config(format!(
                "grid.n_cells must be >= {}, got {}",
                crate::radial::MIN_CELLS,
                self.grid.n_cells
            )));
        }
        if !(self.initial.mu.is_finite() && self.initial.mu > 0.0) {
            return Err(Error::Config(format!("initial.mu must be positive, got {}", self.initial.mu)));
        }
        match self.initial.kind {
            InitialKind::Bump => {
                if self.initial.concentration.is_none() || self.initial.core_radius.is_none() {
                    return Err(Error::Config("bump initial data needs concentration and core_radius".into()));
                }
            }
            InitialKind::File => {
                let p =
                    self.initial.path.as_ref().ok_or_else(|| Error::Config("file initial data needs path".into()))?;
                if !p.is_file() {
                    return Err(Error::Config(format!("initial profile {} does not exist", p.display())));
                }
            }
            InitialKind::Constant | InitialKind::Random => {}
        }
        self.controller.controller().validate().map_err(wrap)?;
        if self.probes.p.is_empty() || self.probes.p.iter().any(|p| !(p.is_finite() && *p >= 1.0)) {
            return Err(Error::Config(format!(
                "probes.p must be a nonempty list of values >= 1, got {:?}",
                self.probes.p
            )));
        }
        if !self.probes.p.contains(&self.bound.p) {
            return Err(Error::Config(format!("bound.p = {} must be one of probes.p", self.bound.p)));
        }
        if let GnSetting::Keyword(k) = &self.bound.c_gn {
            if k != "estimate" {
                return Err(Error::Config(format!("bound.c_gn must be a number or \"estimate\", got \"{k}\"")));
            }
        }
        if !(self.bound.c_gn_safety.is_finite() && self.bound.c_gn_safety > 0.0) {
            return Err(Error::Config(format!("bound.c_gn_safety must be positive, got {}", self.bound.c_gn_safety)));
        }
        if !(self.bound.r0 > 0.0 && self.bound.r0 < self.model.radius) {
            return Err(Error::Config(format!("bound.r0 must lie in (0, R), got {}", self.bound.r0)));
        }
        if !(self.bound.psi_tol >= 0.0) {
            return Err(Error::Config(format!("bound.psi_tol must be >= 0, got {}", self.bound.psi_tol)));
        }
        crate::bounds::constants::check_exponents(self.model.dim, self.bound.p, self.epsilon())
            .map_err(|e| Error::Config(format!("bound: {e}")))?;
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.bound.epsilon.unwrap_or_else(|| crate::bounds::default_epsilon(self.model.dim, self.bound.p))
    }

    pub fn limiter(&self) -> Result<FluxLimiter> {
        FluxLimiter::new(self.model.k_f, self.model.alpha)
    }

    pub fn build_grid(&self) -> Result<Arc<RadialGrid>> {
        RadialGrid::graded(self.model.dim, self.model.radius, self.grid.n_cells, self.grid.grading)
    }

    /// Initial density on `grid`.
    pub fn initial_data(&self, grid: &Arc<RadialGrid>) -> Result<RadialField> {
        let init = &self.initial;
        match init.kind {
            InitialKind::Constant => RadialField::constant(grid.clone(), init.mu, FieldKind::Density),
            InitialKind::Bump => make_bump(
                &self.model,
                grid,
                init.mu,
                init.concentration.unwrap_or_default(),
                init.core_radius.unwrap_or_default(),
            ),
            InitialKind::Random => make_random_monotone(&self.model, grid, init.mu, self.run.seed),
            InitialKind::File => {
                let path = init.path.as_ref().ok_or_else(|| Error::Config("file initial data needs path".into()))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                let values = text
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| Error::Config(format!("{}: '{t}': {e}", path.display()))))
                    .collect::<Result<Vec<f64>>>()?;
                if values.len() != grid.n_cells() {
                    return Err(Error::Config(format!(
                        "{} holds {} values but the grid has {} cells",
                        path.display(),
                        values.len(),
                        grid.n_cells()
                    )));
                }
                let u = RadialField::density(grid.clone(), values)?;
                let rel = (u.mean() - init.mu).abs() / init.mu;
                if rel > crate::elliptic::COMPATIBILITY_TOL {
                    return Err(Error::Config(format!(
                        "profile mean {} differs from initial.mu = {} (relative {rel:.2e})",
                        u.mean(),
                        init.mu
                    )));
                }
                Ok(u)
            }
        }
    }

    pub fn concentration_mode(&self) -> ConcentrationMode {
        self.run.concentration_mode
    }
}
