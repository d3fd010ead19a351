//! Solvers for the linearly constrained sparse group square-root Lasso
//!
//! ```text
//! min_x ‖A x − b‖ + λ₁ Σ_j ω_j ‖x_{G_j}‖ + λ₂ ‖x‖₁
//! s.t.  B_E x = c_E,  B_I x ≥ c_I
//! ```
//!
//! The main solver is a semismooth Newton augmented Lagrangian method applied
//! to the dual ([`alm::alm_solve`]); a semi-proximal ADMM on the same dual
//! ([`admm::admm_solve`]) serves as a baseline. Everything is generic over
//! [`Scalar`] (`f32` or `f64`); the `*64` aliases below fix `f64`.

mod scalar;

pub mod admm;
pub mod alm;
pub mod data;
pub mod error;
pub mod kkt;
pub mod linalg;
pub mod newton;
pub mod problem;
pub mod prox;
pub mod ssn;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Problem64 = problem::Problem<f64>;
pub type Problem32 = problem::Problem<f32>;
pub type PrimalDualPoint64 = problem::PrimalDualPoint<f64>;
pub type CscMatrix64 = linalg::CscMatrix<f64>;
pub type GroupPartition64 = prox::GroupPartition<f64>;
pub type PenaltyParams64 = prox::PenaltyParams<f64>;
