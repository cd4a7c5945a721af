use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::ProblemLcp;

/// Relative cutoff below which an entry of `y` is outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// Largest negative entry that [`lift`] silently clips to zero.
pub const CLIP_TOL: f64 = 1e-12;

/// A point `y` of the parametrized set together with `x = y∘y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalPoint {
    y: DVector<f64>,
    x: DVector<f64>,
    support: Vec<usize>,
    feas_residual: Option<f64>,
}

impl PrimalPoint {
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    /// Indices `i` with `|y_i| > 1e-12·(1+‖y‖∞)`.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// `‖A·x − b‖`, available once the point was attached to a problem.
    pub fn feas_residual(&self) -> Option<f64> {
        self.feas_residual
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    /// Records the feasibility residual with respect to `prob`.
    pub fn attach(mut self, prob: &ProblemLcp) -> Result<Self> {
        self.feas_residual = Some(prob.residual(&self.x)?);
        Ok(self)
    }

    /// `1` on the support and `0` elsewhere.
    pub fn indicator(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for &i in &self.support {
            out[i] = 1.0;
        }
        out
    }
}

/// Builds a point from `y`, caching `x = y∘y` and the support.
pub fn make_point(y: DVector<f64>) -> Result<PrimalPoint> {
    make_point_with_threshold(y, SUPPORT_THRESHOLD)
}

/// As [`make_point`] with support cutoff `supp_threshold·(1+‖y‖∞)`.
pub fn make_point_with_threshold(y: DVector<f64>, supp_threshold: f64) -> Result<PrimalPoint> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let x = y.map(|v| v * v);
    let cut = supp_threshold * (1.0 + y.amax());
    let support = (0..y.len()).filter(|&i| y[i].abs() > cut).collect();
    Ok(PrimalPoint { y, x, support, feas_residual: None })
}

/// Nonnegative square root of `max(x, 0)`; the returned point's `x` is
/// `max(x, 0)` exactly.
pub fn lift(x: &DVector<f64>) -> Result<PrimalPoint> {
    lift_with_tol(x, CLIP_TOL)
}

pub fn lift_with_tol(x: &DVector<f64>, clip_tol: f64) -> Result<PrimalPoint> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| **v < -clip_tol) {
        return Err(Error::NegativeInput { index, value });
    }
    let x = x.map(|v| v.max(0.0));
    let mut p = make_point(x.map(f64::sqrt))?;
    // Keep x itself rather than its rounded square root squared.
    p.x = x;
    Ok(p)
}
