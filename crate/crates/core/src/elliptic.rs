//! Radial solve of `0 = Δv - μ + u` with `∂_ν v = 0` and `∫_Ω v = 0`.
//!
//! In the ball the Neumann problem integrates in closed form:
//!
//! ```text
//! r^{N-1} v_r(r) = ∫_0^r ρ^{N-1} (μ - u) dρ
//! v_rr(r)        = μ/N - u(r) + (N-1) r^{-N} ∫_0^r ρ^{N-1} u dρ
//! ```
//!
//! Both are evaluated exactly for the piecewise-constant density, so no linear system
//! is assembled. `v` itself is only reconstructed for diagnostics.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::radial::{RadialField, RadialGrid};

/// Relative tolerance on `mu` versus the discrete mean of `u`.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Chemical gradient data derived from one density snapshot.
#[derive(Debug, Clone)]
pub struct ChemoGradient {
    grid: Arc<RadialGrid>,
    /// `v_r` at each face; exactly zero at `r = 0`.
    pub v_r_faces: Vec<f64>,
    /// `v_r` at cell centers, from the same exact quadrature.
    pub v_r_cells: Vec<f64>,
    /// `v_rr` at cell centers.
    pub v_rr_cells: Vec<f64>,
    /// Zero-mean potential at cell centers.
    pub v_cells: Vec<f64>,
    /// Discrete mean of `u` actually used in the quadrature.
    pub mu: f64,
}

impl ChemoGradient {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Reconstructed potential as a signed field.
    pub fn potential(&self) -> RadialField {
        RadialField::from_parts_unchecked(self.grid.clone(), self.v_cells.clone(), crate::radial::FieldKind::Signed)
    }
}

/// Checks that `mu` is the mean of `u` and returns the discrete mean.
pub fn compatible_mean(u: &RadialField, mu: f64) -> Result<f64> {
    let actual = u.mean();
    let ok = mu.is_finite() && (mu - actual).abs() <= COMPATIBILITY_TOL * actual.abs();
    if ok || (mu == 0.0 && actual == 0.0) {
        Ok(actual)
    } else {
        Err(Error::Incompatible { given: mu, actual })
    }
}

/// `r^{1-N}` at every face (0 at the centre, where `v_r` vanishes).
pub(crate) fn inverse_face_powers(grid: &RadialGrid) -> Vec<f64> {
    let pow = 1 - grid.dim() as i32;
    grid.faces().iter().map(|&r| if r == 0.0 { 0.0 } else { r.powi(pow) }).collect()
}

/// Face values of `v_r` only; the hot path of the time integrator.
pub(crate) fn face_gradient_into(shells: &[f64], inv_pow: &[f64], u: &[f64], mu: f64, out: &mut [f64]) {
    let mut excess = 0.0;
    out[0] = 0.0;
    for i in 0..u.len() {
        excess += (mu - u[i]) * shells[i];
        out[i + 1] = excess * inv_pow[i + 1];
    }
}

/// Solves the elliptic equation for the gradient `v_r`, the second derivative `v_rr`, and `v`.
pub fn solve_gradient(u: &RadialField, mu: f64) -> Result<ChemoGradient> {
    if let Some(cell) = u.values().iter().position(|&x| x < 0.0) {
        return Err(Error::NegativeDensity { cell, value: u.values()[cell] });
    }
    let mu = compatible_mean(u, mu)?;
    let grid = u.grid().clone();
    let n = grid.n_cells();
    let dim = grid.dim() as i32;
    let nf = f64::from(grid.dim());
    let faces = grid.faces();
    let centers = grid.centers();
    let shells = grid.shells();
    let vals = u.values();

    let mut v_r_faces = vec![0.0; n + 1];
    face_gradient_into(grid.shells(), &inverse_face_powers(&grid), vals, mu, &mut v_r_faces);

    let mut v_r_cells = Vec::with_capacity(n);
    let mut v_rr_cells = Vec::with_capacity(n);
    let mut mass_below = 0.0;
    let mut excess_below = 0.0;
    for i in 0..n {
        let rc = centers[i];
        let inner = (rc.powi(dim) - faces[i].powi(dim)) / nf;
        // M and ∫(μ - u) up to the cell center
        let m_center = mass_below + vals[i] * inner;
        let e_center = excess_below + (mu - vals[i]) * inner;
        v_r_cells.push(e_center * rc.powi(1 - dim));
        v_rr_cells.push(mu / nf - vals[i] + (nf - 1.0) * m_center * rc.powi(-dim));
        mass_below += vals[i] * shells[i];
        excess_below += (mu - vals[i]) * shells[i];
    }

    // trapezoid from v(0) = 0 through the cell centers, then shift to zero mean
    let mut v_cells = Vec::with_capacity(n);
    let mut v = 0.5 * centers[0] * v_r_cells[0];
    v_cells.push(v);
    for i in 1..n {
        v += 0.5 * (centers[i] - centers[i - 1]) * (v_r_cells[i] + v_r_cells[i - 1]);
        v_cells.push(v);
    }
    let avg: f64 = v_cells.iter().zip(grid.volumes()).map(|(v, w)| v * w).sum::<f64>() / grid.total_volume();
    v_cells.iter_mut().for_each(|v| *v -= avg);

    Ok(ChemoGradient { grid, v_r_faces, v_r_cells, v_rr_cells, v_cells, mu })
}

/// Max over cells of `|div_h(v_r) - (μ - u)|`, with the finite-volume divergence
/// `(A_{i+1/2} v_r - A_{i-1/2} v_r) / V_i`.
pub fn residual(u: &RadialField, g: &ChemoGradient, mu: f64) -> Result<f64> {
    u.same_grid(g.grid())?;
    let grid = g.grid();
    let pow = grid.dim() as i32 - 1;
    let faces = grid.faces();
    let shells = grid.shells();
    let mut worst: f64 = 0.0;
    for (i, ui) in u.values().iter().enumerate() {
        let outer = faces[i + 1].powi(pow) * g.v_r_faces[i + 1];
        let inner = faces[i].powi(pow) * g.v_r_faces[i];
        let div = (outer - inner) / shells[i];
        worst = worst.max((div - (mu - ui)).abs());
    }
    Ok(worst)
}
