//! Radial finite-volume grids on the ball `B_R(0) ⊂ R^N` and the quadrature built on them.
//!
//! A [`RadialField`] stores one cell average per shell `[r_{i-1/2}, r_{i+1/2}]`. All
//! integrals treat the field as piecewise constant, so volume integrals are exact for
//! the stored representation and discrete mass is conserved by any flux-form update.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `Γ(n/2)` for a positive integer `n`, via `Γ(1) = 1`, `Γ(1/2) = √π`, `Γ(x+1) = xΓ(x)`.
fn gamma_half_integer(n: u32) -> f64 {
    let (mut x, mut g) = if n.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while x < f64::from(n) / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface measure of the unit sphere in `R^N`: `ω_N = 2π^{N/2} / Γ(N/2)`.
pub fn unit_sphere_area(dim: u32) -> f64 {
    2.0 * PI.powf(f64::from(dim) / 2.0) / gamma_half_integer(dim)
}

/// Volume of the ball of radius `radius` in `R^N`, `ω_N R^N / N`.
pub fn ball_volume(dim: u32, radius: f64) -> f64 {
    unit_sphere_area(dim) * radius.powi(dim as i32) / f64::from(dim)
}

/// A shell-based grid on `B_R(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: u32,
    radius: f64,
    omega: f64,
    faces: Vec<f64>,
    centers: Vec<f64>,
    /// `(r_{i+1/2}^N - r_{i-1/2}^N) / N`, the radial measure `∫ r^{N-1} dr` of each shell.
    shells: Vec<f64>,
    volumes: Vec<f64>,
}

pub const MIN_CELLS: usize = 8;

impl RadialGrid {
    /// Uniformly spaced faces.
    pub fn uniform(dim: u32, radius: f64, n_cells: usize) -> Result<Arc<Self>> {
        Self::graded(dim, radius, n_cells, 1.0)
    }

    /// Faces at `R (i/n)^grading`; `grading > 1` clusters cells near the origin.
    pub fn graded(dim: u32, radius: f64, n_cells: usize, grading: f64) -> Result<Arc<Self>> {
        if !(grading.is_finite() && grading >= 1.0) {
            return Err(Error::InvalidParameter(format!("grading must be >= 1, got {grading}")));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidParameter(format!("need at least {MIN_CELLS} cells, got {n_cells}")));
        }
        let n = n_cells as f64;
        let faces =
            (0..=n_cells).map(|i| if i == n_cells { radius } else { radius * (i as f64 / n).powf(grading) }).collect();
        Self::from_faces(dim, faces)
    }

    /// Builds a grid from explicit face radii (first face 0, last face R).
    pub fn from_faces(dim: u32, faces: Vec<f64>) -> Result<Arc<Self>> {
        if dim < 3 {
            return Err(Error::InvalidParameter(format!("dimension must be >= 3, got {dim}")));
        }
        if faces.len() < MIN_CELLS + 1 {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_CELLS} cells, got {}",
                faces.len().saturating_sub(1)
            )));
        }
        if faces[0] != 0.0 {
            return Err(Error::InvalidParameter("first face must sit at r = 0".into()));
        }
        if faces.iter().any(|r| !r.is_finite()) || faces.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("face radii must be finite and strictly increasing".into()));
        }
        let radius = *faces.last().unwrap();
        let omega = unit_sphere_area(dim);
        let n = dim as i32;
        let nf = f64::from(dim);
        let centers = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let shells: Vec<f64> = faces.windows(2).map(|w| (w[1].powi(n) - w[0].powi(n)) / nf).collect();
        let volumes = shells.iter().map(|s| omega * s).collect();
        Ok(Arc::new(RadialGrid { dim, radius, omega, faces, centers, shells, volumes }))
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_cells(&self) -> usize {
        self.centers.len()
    }

    /// `ω_N`, the unit sphere surface measure.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Radial measure `(r_{i+1/2}^N - r_{i-1/2}^N)/N` of each cell (volume divided by `ω_N`).
    pub fn shells(&self) -> &[f64] {
        &self.shells
    }

    /// Area `ω_N r^{N-1}` of the sphere through face `f`.
    pub fn face_area(&self, f: usize) -> f64 {
        self.omega * self.faces[f].powi(self.dim as i32 - 1)
    }

    /// `|B_R|`.
    pub fn total_volume(&self) -> f64 {
        ball_volume(self.dim, self.radius)
    }

    pub fn min_spacing(&self) -> f64 {
        self.faces.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

/// Interpretation attached to a field's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Cell density; must be nonnegative.
    Density,
    /// Any finite profile (potentials, test functions, residuals).
    Signed,
}

/// Cell-averaged radial profile.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    kind: FieldKind,
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(cell) => Err(Error::NonFinite { cell, value: values[cell] }),
        None => Ok(()),
    }
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| v < 0.0) {
        Some(cell) => Err(Error::NegativeDensity { cell, value: values[cell] }),
        None => Ok(()),
    }
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, kind: FieldKind) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch(format!("{} values for {} cells", values.len(), grid.n_cells())));
        }
        check_finite(&values)?;
        if kind == FieldKind::Density {
            check_nonnegative(&values)?;
        }
        Ok(RadialField { grid, values, kind })
    }

    pub fn density(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, FieldKind::Density)
    }

    pub fn constant(grid: Arc<RadialGrid>, value: f64, kind: FieldKind) -> Result<Self> {
        let n = grid.n_cells();
        Self::new(grid, vec![value; n], kind)
    }

    /// Samples `f` at the cell centers (midpoint rule; second-order accurate averages).
    pub fn from_fn(grid: Arc<RadialGrid>, kind: FieldKind, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.centers().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, kind)
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<RadialGrid>, values: Vec<f64>, kind: FieldKind) -> Self {
        debug_assert_eq!(values.len(), grid.n_cells());
        RadialField { grid, values, kind }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Errors unless `other` lives on the same grid.
    pub fn same_grid(&self, other: &RadialGrid) -> Result<()> {
        if std::ptr::eq(self.grid.as_ref(), other) || self.grid.faces == other.faces && self.grid.dim == other.dim {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields and grid disagree".into()))
        }
    }

    /// `∫_Ω u dx = Σ u_i V_i`.
    pub fn integrate(&self) -> f64 {
        self.values.iter().zip(self.grid.volumes()).map(|(u, v)| u * v).sum()
    }

    /// Volume average `(1/|Ω|) ∫_Ω u`, refined once by the mean deviation so that a
    /// constant field returns that constant exactly.
    pub fn mean(&self) -> f64 {
        let vol: f64 = self.grid.volumes().iter().sum();
        let first = self.integrate() / vol;
        let dev: f64 = self.values.iter().zip(self.grid.volumes()).map(|(u, v)| (u - first) * v).sum();
        first + dev / vol
    }

    /// `‖u‖_{L^p(Ω)}` for `p ≥ 1`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        Ok(self.lp_integral(p)?.powf(1.0 / p))
    }

    /// `∫_Ω |u|^p dx`, i.e. `‖u‖_p^p` without the final root.
    pub fn lp_integral(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("L^p norm needs finite p >= 1, got {p}")));
        }
        Ok(self.values.iter().zip(self.grid.volumes()).map(|(u, v)| u.abs().powf(p) * v).sum())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `M(r_f) = ∫_0^{r_f} ρ^{N-1} u dρ` at every face, exact for the piecewise-constant profile.
    ///
    /// `M(0) = 0` and `ω_N M(R)` equals [`integrate`](Self::integrate).
    pub fn cumulative_mass(&self) -> Result<Vec<f64>> {
        check_nonnegative(&self.values)?;
        Ok(cumulative_radial(&self.values, self.grid.shells()))
    }
}

/// Running sum of `values[i] * shells[i]`, one entry per face.
pub(crate) fn cumulative_radial(values: &[f64], shells: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for (u, s) in values.iter().zip(shells) {
        acc += u * s;
        out.push(acc);
    }
    out
}
