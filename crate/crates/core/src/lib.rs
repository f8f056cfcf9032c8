//! Radially symmetric lab for the flux-limited parabolic–elliptic chemotaxis system
//!
//! ```text
//! u_t = Δu - ∇·(u f(|∇v|²) ∇v),   0 = Δv - μ + u,   ∫_Ω v = 0,   f(ξ) = k_f (1+ξ)^{-α}
//! ```
//!
//! on a ball `B_R(0) ⊂ R^N`, `N ≥ 3`, with no-flux boundaries. The crate simulates radial
//! solutions up to numerical blow-up, checks the hypotheses on parameters and initial
//! data, and evaluates the explicit lower bound on the blow-up time obtained from a
//! differential inequality for `Ψ(t) = ‖u(t)‖_p^p / p`.

// `!(x > 0.0)` style guards are used on purpose: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod bounds;
pub mod chemotaxis;
pub mod elliptic;
pub mod error;
pub mod exec;
pub mod harness;
pub mod radial;

pub use admissibility::ModelParams;
pub use error::{Error, Result};
pub use exec::ExecMode;
pub use radial::{FieldKind, RadialField, RadialGrid};
