//! Vector and matrix building blocks: dense kernels, CSC storage, dense
//! Cholesky, the linear operator interface and preconditioned CG.

pub mod dense;
pub mod operator;
pub mod pcg;
pub mod sparse;
pub mod vector;

pub use dense::{cholesky_solve, Cholesky, DenseMatrix};
pub use operator::{Diagonal, Identity, LinearOperator};
pub use pcg::{pcg_solve, PcgOptions, PcgOutcome};
pub use sparse::CscMatrix;
pub use vector::{axpy, dot, norm1, norm2, norm2_sq, norm_inf};
