//! The chain of constants leading from the model parameters to the majorant of `Ψ'`.
//!
//! With `Z = ∫u^p = pΨ` and `D = ∫|∇u^{p/2}|²` the estimates read
//!
//! ```text
//! Ψ' ≤ -4(p-1)/p² D + c₁ Z + c₂ ∫u^{p+1} + c₃ (∫u^{p+1+ε})^{(p+1)/(p+1+ε)}
//! ∫u^{p+1}                       ≤ (N/2p) ε₁ C_GN D + C_GN (2p-N)/(2p ε₁^{N/(2p-N)}) Z^{γ₂} + C_GN Z^{γ₁}
//! (∫u^{p+1+ε})^{(p+1)/(p+1+ε)}   ≤ c₄ D + c₅ Z^σ + C_GN Z^{γ₁}
//! ```
//!
//! and `ε₁` is fixed so that the `D` terms cancel. Rewriting in `Ψ` multiplies every
//! coefficient of `Z^γ` by `p^γ`.

use std::fmt::Write as _;

use serde::Serialize;

use super::majorant::{self, ComparisonSolution, Majorant};
use crate::admissibility::ModelParams;
use crate::error::{Error, Result};
use crate::radial::unit_sphere_area;

/// One step of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProvenanceEntry {
    pub label: &'static str,
    pub value: f64,
    pub formula: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundConstants {
    pub params: ModelParams,
    pub mu: f64,
    pub p: f64,
    pub epsilon: f64,
    pub c_gn: f64,
    pub epsilon1: f64,
    pub c_holder: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c_tilde1: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// `max(γ₂, γ₃)`.
    pub gamma: f64,
    pub provenance: Vec<ProvenanceEntry>,
}

/// Default Hölder slack `0.05 (2p/N - 1)`.
pub fn default_epsilon(dim: u32, p: f64) -> f64 {
    0.05 * (2.0 * p / f64::from(dim) - 1.0)
}

/// Checks `N/2 < p < N`, `ε > 0` and `2p - N(1+ε) > 0`.
pub fn check_exponents(dim: u32, p: f64, epsilon: f64) -> Result<()> {
    let n = f64::from(dim);
    if !(p.is_finite() && p > n / 2.0 && p < n) {
        return Err(Error::Domain(format!("N/2 < p < N violated: N = {dim}, p = {p}")));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon > 0 violated: epsilon = {epsilon}")));
    }
    let gap = 2.0 * p - n * (1.0 + epsilon);
    if !(gap > 0.0) {
        return Err(Error::Domain(format!("2p - N(1+epsilon) > 0 violated: 2p - N(1+epsilon) = {gap}")));
    }
    Ok(())
}

/// Constant `c(ε,N,p)` with
/// `ω_N ∫_0^R u^p r^{-1} (∫_0^r ρ^{N-1} u dρ) dr ≤ c (∫_Ω u^{p+1})^{1/(p+1)} (∫_Ω u^{p+1+ε})^{p/(p+1+ε)}`,
/// where `ω_N` is the area of the unit sphere.
pub fn holder_constant(dim: u32, radius: f64, p: f64, epsilon: f64) -> f64 {
    let n = f64::from(dim);
    let omega = unit_sphere_area(dim);
    let q = p + 1.0 + epsilon;
    let r_exp = epsilon * n * p / ((p + 1.0) * (1.0 + epsilon));
    n.powf(-p / (p + 1.0)) * omega.powf(p / (p + 1.0) - p / q) * (radius.powf(r_exp) / r_exp).powf((1.0 + epsilon) / q)
}

/// The same constant in the form `N^{-p/(p+1)} ω^{p/(p+1)-p/(p+1+ε)-1/(p+1)}
/// ((p+1)/(εNp))^{(1+ε)/(p+1+ε)} R^{εNp(1+ε)/((p+1)(p+1+ε))}`, kept for comparison
/// against the empirical oracle.
pub fn holder_constant_alternative(dim: u32, radius: f64, p: f64, epsilon: f64) -> f64 {
    let n = f64::from(dim);
    let omega = unit_sphere_area(dim);
    let q = p + 1.0 + epsilon;
    n.powf(-p / (p + 1.0))
        * omega.powf(p / (p + 1.0) - p / q - 1.0 / (p + 1.0))
        * ((p + 1.0) / (epsilon * n * p)).powf((1.0 + epsilon) / q)
        * radius.powf(epsilon * n * p * (1.0 + epsilon) / ((p + 1.0) * q))
}

/// `γ₁ = (p+1)/p`.
pub fn gamma1(p: f64) -> f64 {
    (p + 1.0) / p
}

/// `γ₂ = (2(p+1) - N)/(2p - N)`.
pub fn gamma2(dim: u32, p: f64) -> f64 {
    let n = f64::from(dim);
    (2.0 * (p + 1.0) - n) / (2.0 * p - n)
}

/// `σ = (2(p+1) - X)/(2p - X)` with `X = N(p+1)(1+ε)/(p+1+ε)`.
pub fn sigma(dim: u32, p: f64, epsilon: f64) -> f64 {
    let x = f64::from(dim) * (p + 1.0) * (1.0 + epsilon) / (p + 1.0 + epsilon);
    (2.0 * (p + 1.0) - x) / (2.0 * p - x)
}

struct Trace(Vec<ProvenanceEntry>);

impl Trace {
    fn push(&mut self, label: &'static str, value: f64, formula: &'static str) -> f64 {
        self.0.push(ProvenanceEntry { label, value, formula });
        value
    }
}

/// Evaluates the whole chain for `Ψ = ‖u‖_p^p / p` with mean density `mu`.
pub fn build_constants(params: &ModelParams, mu: f64, p: f64, epsilon: f64, c_gn: f64) -> Result<BoundConstants> {
    params.validate()?;
    check_exponents(params.dim, p, epsilon)?;
    if !(c_gn.is_finite() && c_gn > 0.0) {
        return Err(Error::Domain(format!("C_GN > 0 violated: C_GN = {c_gn}")));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Domain(format!("mu > 0 violated: mu = {mu}")));
    }
    let n = f64::from(params.dim);
    let (alpha, k_f) = (params.alpha, params.k_f);
    let pm = (p - 1.0) / p;
    let mut t = Trace(Vec::new());

    t.push("N", n, "dimension");
    t.push("R", params.radius, "ball radius");
    t.push("alpha", alpha, "limiter exponent");
    t.push("k_f", k_f, "limiter amplitude");
    t.push("mu", mu, "mean density");
    t.push("p", p, "Lebesgue exponent of Psi");
    t.push("epsilon", epsilon, "Holder slack");
    t.push("C_GN", c_gn, "Gagliardo-Nirenberg constant used");
    t.push("omega_N", unit_sphere_area(params.dim), "2 pi^(N/2) / Gamma(N/2)");

    let c = t.push(
        "c_holder",
        holder_constant(params.dim, params.radius, p, epsilon),
        "N^(-p/(p+1)) omega^(p/(p+1)-p/(p+1+eps)) [(p+1)(1+eps)/(eps N p) R^(eps N p/((p+1)(1+eps)))]^((1+eps)/(p+1+eps))",
    );
    let c1 = t.push("c1", 2.0 * alpha * mu * k_f * pm, "2 alpha mu k_f (p-1)/p");
    let c2 = t.push(
        "c2",
        k_f * pm + 2.0 * alpha * n * (n - 1.0) * c * k_f * pm / (p + 1.0),
        "k_f (p-1)/p + 2 alpha N (N-1) c k_f (p-1)/(p(p+1))",
    );
    let c3 = t.push(
        "c3",
        2.0 * alpha * n * (n - 1.0) * c * k_f * (p - 1.0) / (p + 1.0),
        "2 alpha N (N-1) c k_f (p-1)/(p+1)",
    );
    let s = t.push(
        "gradient_exponent_eps",
        n * (1.0 + epsilon) * (p + 1.0) / (2.0 * p * (p + 1.0 + epsilon)),
        "N(1+eps)(p+1)/(2p(p+1+eps))",
    );
    let c4 = t.push("c4", s * c_gn, "N(1+eps)(p+1)/(2p(p+1+eps)) C_GN");
    let c5 = t.push("c5", c_gn * (1.0 - s), "C_GN (2p(p+1+eps) - N(p+1)(1+eps))/(2p(p+1+eps))");
    let sig = t.push("sigma", sigma(params.dim, p, epsilon), "(2(p+1) - X)/(2p - X), X = N(p+1)(1+eps)/(p+1+eps)");

    let dissipation = t.push("dissipation", 4.0 * (p - 1.0) / (p * p), "4(p-1)/p^2");
    let fixed_gradient = t.push("gradient_coefficient_fixed", c3 * c4, "c3 c4");
    if fixed_gradient >= dissipation {
        return Err(Error::Domain(format!(
            "c3 c4 < 4(p-1)/p^2 violated: c3 c4 = {fixed_gradient}, 4(p-1)/p^2 = {dissipation}; \
             no epsilon1 > 0 cancels the gradient term (reduce C_GN, alpha or k_f)"
        )));
    }
    let per_eps1 = t.push("gradient_coefficient_per_epsilon1", c2 * n / (2.0 * p) * c_gn, "c2 (N/(2p)) C_GN");
    let (epsilon1, c_tilde1) = if per_eps1 > 0.0 {
        let e1 = t.push(
            "epsilon1",
            (dissipation - fixed_gradient) / per_eps1,
            "solves c2 (N/(2p)) epsilon1 C_GN + c3 c4 = 4(p-1)/p^2",
        );
        let ct = t.push(
            "c_tilde1",
            c_gn * (2.0 * p - n) / (2.0 * p * e1.powf(n / (2.0 * p - n))) * c2,
            "C_GN (2p-N)/(2p epsilon1^(N/(2p-N))) c2",
        );
        (e1, ct)
    } else {
        let e1 = t.push("epsilon1", 1.0, "arbitrary: no gradient term to cancel (c2 = 0)");
        (e1, t.push("c_tilde1", 0.0, "c2 = 0"))
    };

    let g1 = t.push("gamma1", gamma1(p), "(p+1)/p");
    let g2 = t.push("gamma2", gamma2(params.dim, p), "(2(p+1)-N)/(2p-N)");
    let g3 = t.push("gamma3", sig, "sigma");
    let gamma = t.push("gamma", g2.max(g3), "max(gamma2, gamma3)");

    let b1 = t.push("B1", p * c1, "p c1");
    let b2 = t.push("B2", p.powf(g1) * c_gn * (c2 + c3), "p^gamma1 C_GN (c2 + c3)");
    let b3 = t.push("B3", p.powf(g2) * c_tilde1, "p^gamma2 c_tilde1");
    let b4 = t.push("B4", p.powf(g3) * c3 * c5, "p^gamma3 c3 c5");

    Ok(BoundConstants {
        params: *params,
        mu,
        p,
        epsilon,
        c_gn,
        epsilon1,
        c_holder: c,
        c1,
        c2,
        c3,
        c4,
        c5,
        c_tilde1,
        b1,
        b2,
        b3,
        b4,
        gamma1: g1,
        gamma2: g2,
        gamma3: g3,
        gamma,
        provenance: t.0,
    })
}

impl BoundConstants {
    pub fn majorant(&self) -> Majorant {
        Majorant { b: [self.b1, self.b2, self.b3, self.b4], exponents: [1.0, self.gamma1, self.gamma2, self.gamma3] }
    }

    /// Right-hand side `B₁Ψ + B₂Ψ^{γ₁} + B₃Ψ^{γ₂} + B₄Ψ^{γ₃}`.
    pub fn rhs(&self, psi: f64) -> f64 {
        self.majorant().eval(psi)
    }

    pub fn lower_bound_quadrature(&self, psi0: f64) -> Result<f64> {
        majorant::lower_bound_quadrature(&self.majorant(), psi0)
    }

    pub fn lower_bound_closed_form(&self, psi0: f64) -> Result<f64> {
        majorant::lower_bound_closed_form(&self.majorant(), psi0)
    }

    /// `A = Σ B_i Ψ₀^{γ_i - γ}` with `γ` the leading exponent.
    pub fn growth_coefficient(&self, psi0: f64) -> Result<f64> {
        majorant::closed_form_coefficient(&self.majorant(), psi0).map(|(a, _)| a)
    }

    pub fn comparison_ode(&self, psi0: f64, t_end: f64) -> Result<ComparisonSolution> {
        majorant::comparison_ode(&self.majorant(), psi0, t_end)
    }

    /// Provenance as `label = value # formula` lines.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for e in &self.provenance {
            let _ = writeln!(out, "{} = {:e} # {}", e.label, e.value, e.formula);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64) -> ModelParams {
        ModelParams::new(3, 1.0, alpha, 1.0).unwrap()
    }

    #[test]
    fn golden_exponents_and_c1() {
        assert_eq!(gamma1(2.0), 1.5);
        assert_eq!(gamma2(3, 2.0), 3.0);
        // (6 - 9.9/3.1)/(4 - 9.9/3.1)
        let x = 9.9 / 3.1;
        assert!((sigma(3, 2.0, 0.1) - (6.0 - x) / (4.0 - x)).abs() < 1e-14);
        assert!((sigma(3, 2.0, 0.1) - 3.4800).abs() < 5e-5);
        let k = build_constants(&params(0.2), 10.0, 2.0, 0.1, 0.5).unwrap();
        assert!((k.c1 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors_name_the_inequality() {
        let e = build_constants(&params(0.2), 1.0, 1.4, 0.01, 1.0).unwrap_err();
        assert!(e.to_string().contains("N/2 < p < N"));
        let e = build_constants(&params(0.2), 1.0, 2.0, 0.4, 1.0).unwrap_err();
        assert!(e.to_string().contains("2p - N(1+epsilon)"));
        let e = build_constants(&params(0.2), 1.0, 2.0, -0.1, 1.0).unwrap_err();
        assert!(e.to_string().contains("epsilon > 0"));
        let e = build_constants(&params(0.2), 1.0, 2.0, 0.1, 0.0).unwrap_err();
        assert!(e.to_string().contains("C_GN"));
        let e = build_constants(&params(0.2), 1.0, 2.0, 0.1, 100.0).unwrap_err();
        assert!(e.to_string().contains("c3 c4"));
    }

    #[test]
    fn gradient_terms_cancel() {
        let k = build_constants(&params(0.15), 5.0, 2.0, default_epsilon(3, 2.0), 0.8).unwrap();
        let n = 3.0;
        let total = k.c2 * n / (2.0 * k.p) * k.epsilon1 * k.c_gn + k.c3 * k.c4;
        assert!((total - 4.0 * (k.p - 1.0) / (k.p * k.p)).abs() < 1e-14);
        assert!(k.epsilon1 > 0.0);
        assert!([k.b1, k.b2, k.b3, k.b4].iter().all(|b| *b > 0.0));
    }

    #[test]
    fn zero_sensitivity_drops_chemotactic_terms() {
        let p = ModelParams::new(3, 1.0, 0.1, 0.0).unwrap();
        let k = build_constants(&p, 2.0, 2.0, 0.05, 1.0).unwrap();
        assert_eq!([k.b1, k.b2, k.b3, k.b4], [0.0; 4]);
        assert_eq!(k.lower_bound_quadrature(1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn exponent_ordering_on_a_grid() {
        for dim in 3..=6u32 {
            let n = f64::from(dim);
            for i in 1..40 {
                let p = n / 2.0 + (n / 2.0) * f64::from(i) / 40.0;
                let eps_max = 2.0 * p / n - 1.0;
                for j in 1..20 {
                    let eps = eps_max * f64::from(j) / 20.0;
                    let (g1, g2, g3) = (gamma1(p), gamma2(dim, p), sigma(dim, p, eps));
                    assert!(1.0 < g1 && g1 < g2, "N={dim} p={p}");
                    assert!(g3 >= g2, "N={dim} p={p} eps={eps}");
                }
            }
        }
    }

    #[test]
    fn sigma_tends_to_gamma2() {
        let g2 = gamma2(3, 2.0);
        let mut prev = f64::INFINITY;
        for k in 1..12 {
            let eps = 10f64.powi(-k);
            let d = (sigma(3, 2.0, eps) - g2).abs();
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn deterministic_and_reported() {
        let a = build_constants(&params(0.15), 3.0, 2.2, 0.02, 0.7).unwrap();
        let b = build_constants(&params(0.15), 3.0, 2.2, 0.02, 0.7).unwrap();
        assert_eq!(a, b);
        let report = a.report();
        assert_eq!(report, b.report());
        for label in ["c_holder", "c1", "c2", "c3", "c4", "c5", "epsilon1", "c_tilde1", "B1", "B2", "B3", "B4", "gamma"]
        {
            assert!(report.lines().any(|l| l.starts_with(&format!("{label} = "))), "{label}");
        }
        assert!(report.lines().all(|l| l.contains(" = ") && l.contains(" # ")));
    }

    #[test]
    fn alternative_holder_form_is_smaller_on_unit_ball() {
        let a = holder_constant(3, 1.0, 2.0, 0.1);
        let b = holder_constant_alternative(3, 1.0, 2.0, 0.1);
        assert!(b < a);
    }
}
