use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::linalg::RealMatrix;
use crate::problems::{GwObjective, GwbcObjective};

/// Smooth objective `φ` evaluated on `x`.
///
/// Implementations must be pure: the solver may call them in any order.
pub trait ObjectiveOracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.value(x), self.gradient(x))
    }

    /// `∇²φ(x)·v`, or `None` when the oracle has no second-order information.
    fn hessian_vec(&self, _x: &DVector<f64>, _v: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }
}

/// `φ(x) = xᵀQx/2 + cᵀx`; a missing `Q` means a linear objective.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    q: Option<RealMatrix>,
    c: DVector<f64>,
}

impl QuadraticObjective {
    pub fn new(q: RealMatrix, c: DVector<f64>) -> Self {
        Self { q: Some(q), c }
    }

    pub fn linear(c: DVector<f64>) -> Self {
        Self { q: None, c }
    }

    pub fn q(&self) -> Option<&RealMatrix> {
        self.q.as_ref()
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }
}

impl ObjectiveOracle for QuadraticObjective {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_and_gradient(x).0
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.q {
            Some(q) => q.mul_vec(x) + &self.c,
            None => self.c.clone(),
        }
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        match &self.q {
            Some(q) => {
                let qx = q.mul_vec(x);
                let val = 0.5 * x.dot(&qx) + self.c.dot(x);
                (val, qx + &self.c)
            }
            None => (self.c.dot(x), self.c.clone()),
        }
    }

    fn hessian_vec(&self, _x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        Some(match &self.q {
            Some(q) => q.mul_vec(v),
            None => DVector::zeros(v.len()),
        })
    }
}

/// The objectives the library knows how to serialize, plus an escape hatch
/// for user-provided oracles.
#[derive(Debug, Clone)]
pub enum Objective {
    Quadratic(QuadraticObjective),
    Gw(GwObjective),
    Gwbc(GwbcObjective),
    Custom(Arc<dyn ObjectiveOracle>),
}

impl Objective {
    fn inner(&self) -> &dyn ObjectiveOracle {
        match self {
            Objective::Quadratic(o) => o,
            Objective::Gw(o) => o,
            Objective::Gwbc(o) => o,
            Objective::Custom(o) => o.as_ref(),
        }
    }
}

impl ObjectiveOracle for Objective {
    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.inner().value(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.inner().gradient(x)
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        self.inner().value_and_gradient(x)
    }

    fn hessian_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        self.inner().hessian_vec(x, v)
    }
}

impl From<QuadraticObjective> for Objective {
    fn from(o: QuadraticObjective) -> Self {
        Objective::Quadratic(o)
    }
}

impl From<GwObjective> for Objective {
    fn from(o: GwObjective) -> Self {
        Objective::Gw(o)
    }
}

impl From<GwbcObjective> for Objective {
    fn from(o: GwbcObjective) -> Self {
        Objective::Gwbc(o)
    }
}
