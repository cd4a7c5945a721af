//! Problem data `min φ(x) s.t. Ax = b, x >= 0` and points of the
//! parametrized set `{y : A(y∘y) = b}`.

pub mod io;
mod objective;
mod point;

use nalgebra::DVector;

pub use objective::{Objective, ObjectiveOracle, QuadraticObjective};
pub use point::{lift, lift_with_tol, make_point, make_point_with_threshold, PrimalPoint, CLIP_TOL, SUPPORT_THRESHOLD};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{ldl_psd, RealMatrix, DEFAULT_ZERO_THRESHOLD};

/// A linearly constrained problem over the nonnegative orthant.
///
/// `A` must have full row rank; this is verified once on construction.
#[derive(Debug, Clone)]
pub struct ProblemLcp {
    name: String,
    a: RealMatrix,
    b: DVector<f64>,
    objective: Objective,
    a_norm_inf: f64,
}

impl ProblemLcp {
    pub fn new(name: impl Into<String>, a: RealMatrix, b: DVector<f64>, objective: Objective) -> Result<Self> {
        let (m, n) = (a.nrows(), a.ncols());
        check_dim(m, b.len())?;
        check_dim(n, objective.dim())?;
        if m > n {
            return Err(Error::RankDeficient { rank: n, rows: m });
        }
        if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let f = ldl_psd(&a.weighted_gram(&DVector::from_element(n, 1.0)), DEFAULT_ZERO_THRESHOLD)?;
        if f.rank() != m {
            return Err(Error::RankDeficient { rank: f.rank(), rows: m });
        }
        let a_norm_inf = a.norm_inf();
        Ok(Self { name: name.into(), a, b, objective, a_norm_inf })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn a(&self) -> &RealMatrix {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    /// Number of equality constraints.
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// `‖A‖∞`, cached.
    pub fn a_norm_inf(&self) -> f64 {
        self.a_norm_inf
    }

    /// `‖A·x − b‖`.
    pub fn residual(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.n(), x.len())?;
        Ok((self.a.mul_vec(x) - &self.b).norm())
    }

    /// `‖A·x − b‖ / (1+‖b‖)`.
    pub fn relative_residual(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.residual(x)? / (1.0 + self.b.norm()))
    }

    /// Copy of the problem with constraint rows reordered; row `k` of the new
    /// problem is row `perm[k]` of this one.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        check_dim(self.m(), perm.len())?;
        let b = DVector::from_fn(self.m(), |k, _| self.b[perm[k]]);
        Self::new(self.name.clone(), self.a.permute_rows(perm), b, self.objective.clone())
    }
}
