//! Empirical check of the Hölder constant.
//!
//! For a cell-wise constant density both sides of
//! `ω_N ∫_0^R u^p r^{-1} (∫_0^r ρ^{N-1} u dρ) dr ≤ c (∫u^{p+1})^{1/(p+1)} (∫u^{p+1+ε})^{p/(p+1+ε)}`
//! are evaluated exactly, so the ratio of the two sides is a lower bound for the best `c`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::radial::{cumulative_radial, RadialField, RadialGrid};

/// Exact left side for a piecewise-constant density.
pub fn holder_lhs(u: &RadialField, p: f64) -> f64 {
    let grid = u.grid();
    let n = f64::from(grid.dim());
    let faces = grid.faces();
    let values = u.values();
    // M[i] = ∫_0^{faces[i]} ρ^{N-1} u dρ
    let m = cumulative_radial(values, grid.shells());
    let mut total = 0.0;
    for (i, &ui) in values.iter().enumerate() {
        let b = faces[i + 1];
        if i == 0 {
            total += ui.powf(p + 1.0) * b.powf(n) / (n * n);
            continue;
        }
        let a = faces[i];
        let x = ((b - a) / a).ln_1p();
        // (b^N - a^N)/N - a^N ln(b/a) = a^N (expm1(N x)/N - x)
        let shell_excess = a.powf(n) * ((n * x).exp_m1() / n - x);
        total += ui.powf(p) * (m[i] * x + ui / n * shell_excess);
    }
    grid.omega() * total
}

/// Right side without the constant.
pub fn holder_rhs(u: &RadialField, p: f64, epsilon: f64) -> Result<f64> {
    let a = u.lp_integral(p + 1.0)?;
    let b = u.lp_integral(p + 1.0 + epsilon)?;
    Ok(a.powf(1.0 / (p + 1.0)) * b.powf(p / (p + 1.0 + epsilon)))
}

pub fn holder_ratio(u: &RadialField, p: f64, epsilon: f64) -> Result<f64> {
    let rhs = holder_rhs(u, p, epsilon)?;
    if !(rhs > 0.0) {
        return Err(Error::InvalidParameter("density vanishes identically".into()));
    }
    Ok(holder_lhs(u, p) / rhs)
}

/// Random density number `k` of the oracle family (seeded per member).
///
/// Families: regularized power laws `(r² + δ²)^{-β/2}` with `β` up to the
/// integrability limit, Gaussians, random monotone staircases, random rough cell
/// values and hollow shells.
pub fn random_density(
    grid: &std::sync::Arc<RadialGrid>,
    p: f64,
    epsilon: f64,
    seed: u64,
    k: usize,
) -> Result<RadialField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let n = f64::from(grid.dim());
    let r_max = grid.radius();
    let dr = grid.min_spacing();
    let values: Vec<f64> = match k % 5 {
        0 => {
            let beta = rng.gen_range(0.0..0.999) * n / (p + 1.0 + epsilon);
            let delta = dr * 10f64.powf(rng.gen_range(0.0..(r_max / dr).log10()));
            grid.centers().iter().map(|r| (r * r + delta * delta).powf(-beta / 2.0)).collect()
        }
        1 => {
            let c = rng.gen_range(0.0..r_max);
            let w = rng.gen_range(2.0 * dr..r_max);
            grid.centers().iter().map(|r| (-((r - c) / w).powi(2)).exp() + 1e-12).collect()
        }
        2 => {
            let mut level = rng.gen_range(0.1..10.0);
            let mut out = Vec::with_capacity(grid.n_cells());
            for _ in 0..grid.n_cells() {
                if rng.gen_bool(0.05) {
                    level *= rng.gen_range(0.2..1.0);
                }
                out.push(level);
            }
            out
        }
        3 => (0..grid.n_cells()).map(|_| rng.gen_range(0.0..1.0f64).powi(3) + 1e-9).collect(),
        _ => {
            let a = rng.gen_range(0.0..r_max);
            let b = rng.gen_range(a..r_max) + dr;
            grid.centers().iter().map(|r| if *r >= a && *r <= b { 1.0 } else { 1e-6 }).collect()
        }
    };
    RadialField::density(grid.clone(), values)
}

/// Largest ratio over `samples` random densities.
pub fn empirical_holder_sup(
    mode: ExecMode,
    grid: &std::sync::Arc<RadialGrid>,
    p: f64,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let ratios = exec::map_range(mode, samples, |k| {
        random_density(grid, p, epsilon, seed, k).and_then(|u| holder_ratio(&u, p, epsilon))
    });
    ratios.into_iter().try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::FieldKind;

    /// Midpoint-rule evaluation of the left side on a fine sub-grid.
    fn brute_lhs(u: &RadialField, p: f64) -> f64 {
        let g = u.grid();
        let n = f64::from(g.dim());
        let sub = 400;
        let mut mass = 0.0;
        let mut total = 0.0;
        for (i, &ui) in u.values().iter().enumerate() {
            let (a, b) = (g.faces()[i], g.faces()[i + 1]);
            let h = (b - a) / f64::from(sub);
            for j in 0..sub {
                let r0 = a + h * f64::from(j);
                let r = r0 + 0.5 * h;
                let m_mid = mass + ui * (r.powf(n) - r0.powf(n)) / n;
                total += ui.powf(p) * m_mid / r * h;
                mass += ui * ((r0 + h).powf(n) - r0.powf(n)) / n;
            }
        }
        g.omega() * total
    }

    #[test]
    fn exact_lhs_matches_brute_force() {
        let g = RadialGrid::uniform(3, 1.0, 16).unwrap();
        let u = RadialField::from_fn(g, FieldKind::Density, |r| 2.0 + (3.0 * r).sin()).unwrap();
        let exact = holder_lhs(&u, 2.0);
        let brute = brute_lhs(&u, 2.0);
        assert!((exact - brute).abs() < 1e-5 * exact, "{exact} {brute}");
    }

    #[test]
    fn constant_density_closed_form() {
        // u ≡ 1: ω ∫_0^R r^{N-1}/N dr = ω R^N / N²
        let g = RadialGrid::uniform(4, 1.5, 64).unwrap();
        let u = RadialField::constant(g.clone(), 1.0, FieldKind::Density).unwrap();
        let expected = g.omega() * 1.5f64.powi(4) / 16.0;
        assert!((holder_lhs(&u, 2.2) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn sup_is_deterministic_across_modes() {
        let g = RadialGrid::uniform(3, 1.0, 64).unwrap();
        let a = empirical_holder_sup(ExecMode::Sequential, &g, 2.0, 0.1, 50, 7).unwrap();
        let b = empirical_holder_sup(ExecMode::Parallel, &g, 2.0, 0.1, 50, 7).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }
}
