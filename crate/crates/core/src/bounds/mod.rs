//! Lower bound on the blow-up time from the differential inequality
//! `Ψ' ≤ B₁Ψ + B₂Ψ^{γ₁} + B₃Ψ^{γ₂} + B₄Ψ^{γ₃}` for `Ψ = ‖u‖_p^p / p`.

pub mod constants;
pub mod gn;
pub mod holder;
pub mod majorant;
pub mod psi;
pub mod quadrature;

pub use constants::{build_constants, default_epsilon, holder_constant, BoundConstants, ProvenanceEntry};
pub use gn::estimate_gn_constant;
pub use majorant::{comparison_ode, lower_bound_closed_form, lower_bound_quadrature, ComparisonSolution, Majorant};
pub use psi::{check_psi_inequality, PsiCheckReport, PsiTrace};
