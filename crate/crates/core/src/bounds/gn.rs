//! Empirical lower estimate of the Gagliardo–Nirenberg constant in
//! `‖f‖_𝗉^𝗉 ≤ C (‖∇f‖₂^{𝗉a} ‖f‖₂^{𝗉(1-a)} + ‖f‖₂^𝗉)` with `𝗉 = 2(p+1)/p`,
//! `a = N/(2(p+1))`, over radial functions on the ball.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::radial::RadialGrid;

pub const MIN_FAMILY_SIZE: usize = 8;
pub const DEFAULT_SAFETY: f64 = 2.0;

/// Radical inverse of `k` in base `b`.
fn halton(mut k: usize, b: usize) -> f64 {
    let (mut f, mut x) = (1.0, 0.0);
    while k > 0 {
        f /= b as f64;
        x += f * (k % b) as f64;
        k /= b;
    }
    x
}

/// Member `k` of the test family, sampled at cell centres.
///
/// Kinds cycle through Gaussians, polynomial bumps, near-constant cosine
/// perturbations and regularized algebraic spikes; shape parameters come from Halton
/// points so that every prefix of the family is spread over parameter space.
pub fn family_member(grid: &RadialGrid, k: usize) -> Vec<f64> {
    let r_max = grid.radius();
    let w_min = 4.0 * grid.min_spacing().max(grid.faces()[1]);
    let j = k / 4 + 1;
    let (h1, h2, h3) = (halton(j, 2), halton(j, 3), halton(j, 5));
    let width = w_min * (r_max / w_min).powf(h1).max(1.0);
    let f: Box<dyn Fn(f64) -> f64> = match k % 4 {
        0 => {
            let centre = 0.8 * r_max * h2 * h2;
            Box::new(move |r| (-((r - centre) / width).powi(2)).exp())
        }
        1 => {
            let power = 2 + (h2 * 3.0) as i32;
            Box::new(move |r| (1.0 - (r / width).powi(2)).max(0.0).powi(power))
        }
        2 => {
            let amp = 0.5 * h2;
            let mode = 1.0 + (h3 * 4.0).floor();
            Box::new(move |r| 1.0 + amp * (PI * mode * r / r_max).cos())
        }
        _ => {
            let decay = 0.5 + 1.5 * h2;
            Box::new(move |r| (1.0 + (r / width).powi(2)).powf(-decay))
        }
    };
    grid.centers().iter().map(|&r| f(r)).collect()
}

/// GN ratio of a cell-sampled profile; the gradient norm is the finite-volume
/// Dirichlet form `Σ_faces A_f (Δf)² / Δr`.
pub fn gn_ratio(grid: &RadialGrid, f: &[f64], p: f64) -> Result<f64> {
    if f.len() != grid.n_cells() {
        return Err(Error::GridMismatch(format!("{} values on {} cells", f.len(), grid.n_cells())));
    }
    let n = f64::from(grid.dim());
    let pp = 2.0 * (p + 1.0) / p;
    let a = n / (2.0 * (p + 1.0));
    let vol = grid.volumes();
    let lpp: f64 = f.iter().zip(vol).map(|(x, v)| v * x.abs().powf(pp)).sum();
    let l2: f64 = f.iter().zip(vol).map(|(x, v)| v * x * x).sum::<f64>().sqrt();
    let c = grid.centers();
    let grad2: f64 = (1..f.len()).map(|i| grid.face_area(i) * (f[i] - f[i - 1]).powi(2) / (c[i] - c[i - 1])).sum();
    let denom = grad2.sqrt().powf(pp * a) * l2.powf(pp * (1.0 - a)) + l2.powf(pp);
    if !(denom > 0.0) {
        return Err(Error::InvalidParameter("profile vanishes identically".into()));
    }
    Ok(lpp / denom)
}

/// Largest GN ratio over the first `family_size` family members. This bounds the best
/// constant from below; callers multiply it by a safety factor.
pub fn estimate_gn_constant(grid: &RadialGrid, p: f64, family_size: usize) -> Result<f64> {
    estimate_gn_constant_with(ExecMode::default(), grid, p, family_size)
}

pub fn estimate_gn_constant_with(mode: ExecMode, grid: &RadialGrid, p: f64, family_size: usize) -> Result<f64> {
    if family_size < MIN_FAMILY_SIZE {
        return Err(Error::InvalidParameter(format!("family_size must be >= {MIN_FAMILY_SIZE}, got {family_size}")));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParameter(format!("p must be positive, got {p}")));
    }
    let ratios = exec::map_range(mode, family_size, |k| gn_ratio(grid, &family_member(grid, k), p));
    ratios.into_iter().try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))
}
