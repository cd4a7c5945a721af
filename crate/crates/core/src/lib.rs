//! Optimization over polyhedra `{x : Ax = b, x >= 0}` through the squared
//! parametrization `x = y∘y`.
//!
//! The feasible set in `y` is a real algebraic variety. This crate provides
//! its local geometry (tangent cones, regular representations, strata),
//! stationarity and multiplier recovery, a Newton retraction, a semismooth
//! Newton projection onto the polyhedron, and a hybrid Riemannian /
//! projected gradient solver with KKT-residual termination.
//!
//! ```
//! use hadamard_lcp::problems::simplex_projection_problem;
//! use hadamard_lcp::solver::{solve, SolverOptions};
//! use nalgebra::DVector;
//!
//! let v = DVector::from_vec(vec![0.5, 0.2, -0.3]);
//! let prob = simplex_projection_problem(&v).unwrap();
//! let out = solve(&prob, &SolverOptions::default(), None).unwrap();
//! assert!(out.report.max_residual() <= 1e-6);
//! assert!((out.point.x()[0] - 0.65).abs() < 1e-5);
//! ```

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod problems;
pub mod projection;
pub mod retraction;
pub mod solver;
pub mod stationarity;

pub use error::{Error, Result};
