//! Dense and sparse linear algebra: permutation-free LDL for PSD matrices,
//! pseudoinverse solves, preconditioned conjugate gradient, and a matrix type
//! that hides the storage format.

mod ldl;
mod matrix;
mod pcg;

pub use ldl::{ldl_pinv_solve, ldl_pinv_solve_tol, ldl_psd, LdlFactors, DEFAULT_SOLVE_TOL, DEFAULT_ZERO_THRESHOLD};
pub use matrix::{CscMatrix, RealMatrix, SPARSE_DENSITY};
pub use pcg::{pcg, FallbackSolver, PcgOutcome};
