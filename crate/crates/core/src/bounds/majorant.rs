//! The scalar majorant `F(η) = B₁η + B₂η^{γ₁} + B₃η^{γ₂} + B₄η^{γ₃}` and the three ways of
//! turning it into a blow-up time bound: the quadrature `∫_{Ψ₀}^∞ dη / F(η)`, the closed
//! form `1 / (A(γ-1)Ψ₀^{γ-1})`, and the comparison ODE `φ' = F(φ)`.

use serde::Serialize;

use super::quadrature;
use crate::error::{Error, Result};

/// Coefficients and exponents of `F`; the first exponent is always 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Majorant {
    pub b: [f64; 4],
    pub exponents: [f64; 4],
}

impl Majorant {
    pub fn new(b: [f64; 4], gamma1: f64, gamma2: f64, gamma3: f64) -> Result<Self> {
        if b.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidParameter(format!("coefficients must be finite and >= 0, got {b:?}")));
        }
        for g in [gamma1, gamma2, gamma3] {
            if !(g.is_finite() && g > 1.0) {
                return Err(Error::InvalidParameter(format!("exponents must exceed 1, got {g}")));
            }
        }
        Ok(Majorant { b, exponents: [1.0, gamma1, gamma2, gamma3] })
    }

    pub fn eval(&self, eta: f64) -> f64 {
        self.b.iter().zip(&self.exponents).map(|(b, g)| if *b == 0.0 { 0.0 } else { b * eta.powf(*g) }).sum()
    }

    /// Same exponents, coefficients multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Majorant { b: self.b.map(|b| b * k), exponents: self.exponents }
    }

    /// Largest exponent carrying a nonzero coefficient, if that exponent exceeds 1.
    pub fn leading_exponent(&self) -> Option<f64> {
        self.b
            .iter()
            .zip(&self.exponents)
            .filter(|(b, _)| **b > 0.0)
            .map(|(_, g)| *g)
            .fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g))))
            .filter(|g| *g > 1.0)
    }

    fn leading_coefficient(&self, gamma: f64) -> f64 {
        self.b.iter().zip(&self.exponents).filter(|(_, g)| **g == gamma).map(|(b, _)| b).sum()
    }
}

fn check_psi0(psi0: f64) -> Result<()> {
    if psi0 > 0.0 && psi0.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Psi0 must be positive and finite, got {psi0}")))
    }
}

pub const QUADRATURE_REL_TOL: f64 = 1e-12;

/// `T = ∫_{Ψ₀}^∞ dη / F(η)`; `+∞` when no superlinear term is present.
///
/// Evaluated on `(0, 1]` after `η = Ψ₀ τ^{-m}` with `m = 1/(γ-1)`, `γ` the leading
/// exponent, which makes the integrand bounded at `τ → 0`.
pub fn lower_bound_quadrature(k: &Majorant, psi0: f64) -> Result<f64> {
    check_psi0(psi0)?;
    let Some(gamma) = k.leading_exponent() else {
        return Ok(f64::INFINITY);
    };
    let m = 1.0 / (gamma - 1.0);
    let weights: Vec<(f64, f64)> =
        k.b.iter()
            .zip(&k.exponents)
            .filter(|(b, _)| **b > 0.0)
            .map(|(b, g)| (b * psi0.powf(*g), m * (gamma - g)))
            .collect();
    // integrand m Ψ₀ / Σ_i B_i Ψ₀^{γ_i} τ^{m(γ-γ_i)}
    let integrand = |tau: f64| {
        let denom: f64 = weights.iter().map(|(w, e)| if *e == 0.0 { *w } else { w * tau.powf(*e) }).sum();
        m * psi0 / denom
    };
    let q = quadrature::integrate(integrand, 0.0, 1.0, QUADRATURE_REL_TOL, 0.0, 4000);
    Ok(q.value)
}

/// Aggregate growth coefficient `A = Σ B_i Ψ₀^{γ_i - γ}` together with `γ`.
pub fn closed_form_coefficient(k: &Majorant, psi0: f64) -> Result<(f64, f64)> {
    check_psi0(psi0)?;
    let gamma = k
        .leading_exponent()
        .ok_or_else(|| Error::InvalidParameter("closed form needs a superlinear term (gamma > 1)".into()))?;
    let a = k.b.iter().zip(&k.exponents).map(|(b, g)| if *b == 0.0 { 0.0 } else { b * psi0.powf(g - gamma) }).sum();
    Ok((a, gamma))
}

/// `T = 1 / (A (γ-1) Ψ₀^{γ-1})`, never larger than [`lower_bound_quadrature`].
pub fn lower_bound_closed_form(k: &Majorant, psi0: f64) -> Result<f64> {
    let (a, gamma) = closed_form_coefficient(k, psi0)?;
    Ok(1.0 / (a * (gamma - 1.0) * psi0.powf(gamma - 1.0)))
}

/// Time samples of a scalar trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Solution of `φ' = F(φ)`, `φ(0) = Ψ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSolution {
    /// Accepted steps up to `t_end` or until `φ` exceeds the cap.
    pub trace: ScalarTrace,
    /// Finite-time blow-up of `φ`, when `F` has a superlinear term.
    pub blowup_time: Option<f64>,
}

pub const COMPARISON_CAP: f64 = 1e12;

/// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// One embedded RK step; returns (5th-order value, error estimate).
fn dopri_step(f: &impl Fn(f64) -> f64, y: f64, h: f64) -> (f64, f64) {
    let mut k = [0.0; 7];
    k[0] = f(y);
    for s in 1..7 {
        let inc: f64 = (0..s).map(|j| A[s - 1][j] * k[j]).sum();
        k[s] = f(y + h * inc);
    }
    let y5 = y + h * (0..7).map(|j| B5[j] * k[j]).sum::<f64>();
    let y4 = y + h * (0..7).map(|j| B4[j] * k[j]).sum::<f64>();
    (y5, (y5 - y4).abs())
}

/// Adaptive integration of the autonomous scalar ODE `y' = f(y)`.
///
/// Stops at `t_end`, when `stop(t, y)` holds, or when a step would leave the domain
/// (`valid(y)` false), in which case the step is retried smaller.
fn integrate_scalar(
    f: impl Fn(f64) -> f64,
    y0: f64,
    t_end: f64,
    rtol: f64,
    atol: f64,
    valid: impl Fn(f64) -> bool,
    stop: impl Fn(f64, f64) -> bool,
) -> ScalarTrace {
    let mut t = 0.0;
    let mut y = y0;
    let mut trace = ScalarTrace { times: vec![t], values: vec![y] };
    let d0 = f(y0).abs();
    let mut h = if d0 > 0.0 { (1e-3 * (y0.abs() + atol) / d0).min(t_end) } else { t_end };
    let mut guard = 0u64;
    while t < t_end && !stop(t, y) && guard < 10_000_000 {
        guard += 1;
        h = h.min(t_end - t);
        if h <= f64::EPSILON * t.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let (y_new, err) = dopri_step(&f, y, h);
        if !y_new.is_finite() || !valid(y_new) {
            h *= 0.25;
            continue;
        }
        let scale = atol + rtol * y.abs().max(y_new.abs());
        let ratio = err / scale;
        if ratio <= 1.0 {
            t = if h == t_end - t { t_end } else { t + h };
            y = y_new;
            trace.times.push(t);
            trace.values.push(y);
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    trace
}

const ODE_RTOL: f64 = 1e-12;
const TAIL_FRACTION: f64 = 1e-10;

/// Integrates `φ' = F(φ)` from `φ(0) = Ψ₀`.
///
/// With a superlinear term the equation is advanced in `z = φ^{1-γ}` (γ the leading
/// exponent), where the blow-up of `φ` becomes the finite-time zero of `z`:
/// `z' = -(γ-1) Σ B_i z^{(γ-γ_i)/(γ-1)}`. The final stretch, once its linear extrapolation is
/// below `1e-10` of the elapsed time, is closed with the local rate.
pub fn comparison_ode(k: &Majorant, psi0: f64, t_end: f64) -> Result<ComparisonSolution> {
    check_psi0(psi0)?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!("t_end must be positive, got {t_end}")));
    }
    let Some(gamma) = k.leading_exponent() else {
        let b1 = k.b[0];
        let trace = integrate_scalar(|y| b1 * y, psi0, t_end, ODE_RTOL, 0.0, |_| true, |_, y| y > COMPARISON_CAP);
        return Ok(ComparisonSolution { trace, blowup_time: None });
    };
    let g1 = gamma - 1.0;
    let terms: Vec<(f64, f64)> =
        k.b.iter().zip(&k.exponents).filter(|(b, _)| **b > 0.0).map(|(b, g)| (*b, (gamma - g) / g1)).collect();
    debug_assert!(k.leading_coefficient(gamma) > 0.0);
    let rate = move |z: f64| -> f64 {
        let z = z.max(0.0);
        -g1 * terms.iter().map(|(b, e)| if *e == 0.0 { *b } else { b * z.powf(*e) }).sum::<f64>()
    };
    let z0 = psi0.powf(-g1);
    // stop once the linearly extrapolated remainder is negligible against the elapsed time
    let tail = |z: f64| z / rate(z).abs();
    let done = |t: f64, z: f64| z <= f64::MIN_POSITIVE.sqrt() || (z <= 1e-9 * z0 && tail(z) <= TAIL_FRACTION * t);
    let zt = integrate_scalar(&rate, z0, f64::MAX, ODE_RTOL, 0.0, |z| z > 0.0, done);
    let (&t_last, &z_last) = (zt.times.last().unwrap(), zt.values.last().unwrap());
    let blowup_time = t_last + z_last / rate(z_last).abs();

    let cap_z = COMPARISON_CAP.powf(-g1);
    let mut trace = ScalarTrace { times: vec![], values: vec![] };
    for (t, z) in zt.times.iter().zip(&zt.values) {
        if *t > t_end || *z < cap_z {
            break;
        }
        trace.times.push(*t);
        trace.values.push(z.powf(-1.0 / g1));
    }
    Ok(ComparisonSolution { trace, blowup_time: Some(blowup_time) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(i: usize, b: f64, g: f64) -> Majorant {
        let mut bs = [0.0; 4];
        bs[i] = b;
        let mut gs = [1.5, 2.5, 3.5];
        if i > 0 {
            gs[i - 1] = g;
        }
        Majorant::new(bs, gs[0], gs[1], gs[2]).unwrap()
    }

    #[test]
    fn dominant_linear_term_does_not_truncate_comparison() {
        // reference value from 30-digit adaptive quadrature
        let k = Majorant::new(
            [193.905107566085, 0.5547067627661345, 0.02110306398762173, 0.02944816447747636],
            1.254091181304211,
            3.490736738806314,
            3.9741288379724615,
        )
        .unwrap();
        let psi0 = 0.01344331930165967;
        let reference = 0.037_085_543_376_976_62;
        let tq = lower_bound_quadrature(&k, psi0).unwrap();
        let t_ode = comparison_ode(&k, psi0, 1.0).unwrap().blowup_time.unwrap();
        assert!((tq - reference).abs() < 1e-10 * reference, "{tq}");
        assert!((t_ode - reference).abs() < 1e-8 * reference, "{t_ode}");
    }

    #[test]
    fn single_term_quadratures() {
        let k = single(1, 1.0, 2.0);
        assert!((lower_bound_quadrature(&k, 1.0).unwrap() - 1.0).abs() < 1e-10);
        let k = single(3, 1.0, 2.0);
        assert!((lower_bound_quadrature(&k, 2.0).unwrap() - 0.5).abs() < 1e-10);
        assert!((lower_bound_closed_form(&k, 2.0).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(closed_form_coefficient(&k, 2.0).unwrap(), (1.0, 2.0));
        let lin = single(0, 1.0, 1.0);
        assert_eq!(lower_bound_quadrature(&lin, 1.0).unwrap(), f64::INFINITY);
        assert!(lower_bound_closed_form(&lin, 1.0).is_err());
    }

    #[test]
    fn fractional_exponent_against_antiderivative() {
        // ∫_{Ψ₀}^∞ η^{-3/2}/B dη = 2 Ψ₀^{-1/2} / B
        let k = single(1, 3.0, 1.5);
        let t = lower_bound_quadrature(&k, 0.7).unwrap();
        assert!((t - 2.0 / (3.0 * 0.7f64.sqrt())).abs() < 1e-10 * t);
    }

    #[test]
    fn invalid_inputs() {
        let k = single(1, 1.0, 2.0);
        assert!(lower_bound_quadrature(&k, 0.0).is_err());
        assert!(lower_bound_quadrature(&k, -1.0).is_err());
        assert!(Majorant::new([1.0, -1.0, 0.0, 0.0], 1.5, 2.0, 3.0).is_err());
        assert!(Majorant::new([1.0, 1.0, 0.0, 0.0], 1.0, 2.0, 3.0).is_err());
    }

    #[test]
    fn riccati_blows_up_at_one() {
        let k = single(1, 1.0, 2.0);
        let sol = comparison_ode(&k, 1.0, 10.0).unwrap();
        assert!((sol.blowup_time.unwrap() - 1.0).abs() < 1e-6);
        // trace follows 1/(1-t)
        for (t, phi) in sol.trace.times.iter().zip(&sol.trace.values) {
            assert!((1.0 / phi - (1.0 - t)).abs() <= 1e-12);
        }
        assert!(*sol.trace.values.last().unwrap() <= COMPARISON_CAP);
    }

    #[test]
    fn zero_majorant_keeps_phi_constant() {
        let k = Majorant::new([0.0; 4], 1.5, 3.0, 3.5).unwrap();
        let sol = comparison_ode(&k, 2.5, 4.0).unwrap();
        assert!(sol.blowup_time.is_none());
        assert!(sol.trace.values.iter().all(|&v| v == 2.5));
        assert_eq!(*sol.trace.times.last().unwrap(), 4.0);
    }

    #[test]
    fn linear_majorant_grows_exponentially() {
        let k = single(0, 0.5, 1.0);
        let sol = comparison_ode(&k, 1.0, 3.0).unwrap();
        assert!(sol.blowup_time.is_none());
        let last = *sol.trace.values.last().unwrap();
        assert!((last - 1.5f64.exp()).abs() < 1e-9 * last);
    }
}
