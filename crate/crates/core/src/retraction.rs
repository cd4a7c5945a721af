//! Newton retraction: Gauss-Newton restoration of `A(z∘z) = b` along
//! `z ← z + z∘(Aᵀλ)`.
//!
//! Every update is a multiple of `z` entrywise, so zero entries of the
//! starting point stay exactly zero and the iterate never leaves its stratum.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{ldl_psd, FallbackSolver, DEFAULT_ZERO_THRESHOLD};
use crate::model::{make_point, PrimalPoint, ProblemLcp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetractionConfig {
    /// Target for `‖A(z∘z) − b‖ / (1+‖b‖)`.
    pub tol: f64,
    pub maxit: usize,
    /// Failure when the residual exceeds this multiple of its value two
    /// steps earlier.
    pub divergence_factor: f64,
    /// Problem size above which PCG with the previous factorization as
    /// preconditioner replaces refactorization.
    pub pcg_threshold: usize,
}

impl Default for RetractionConfig {
    fn default() -> Self {
        Self { tol: 1e-8, maxit: 20, divergence_factor: 10.0, pcg_threshold: 5000 }
    }
}

#[derive(Debug, Clone)]
pub struct Retracted {
    pub point: PrimalPoint,
    pub iters: usize,
    pub factorizations: usize,
    /// Final `‖A(z∘z) − b‖`.
    pub residual: f64,
}

pub fn newton_retract(z0: &DVector<f64>, prob: &ProblemLcp, cfg: &RetractionConfig) -> Result<Retracted> {
    check_dim(prob.n(), z0.len())?;
    if !(cfg.tol > 0.0) || cfg.maxit == 0 {
        return Err(Error::InvalidArgument("retraction needs tol > 0 and maxit >= 1".into()));
    }
    if z0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let a = prob.a();
    let b = prob.b();
    let target = cfg.tol * (1.0 + b.norm());
    let mut z = z0.clone();
    let mut x = z.map(|v| v * v);
    let mut r = b - a.mul_vec(&x);
    let mut res = r.norm();
    if res <= target {
        return Ok(Retracted { point: make_point(z)?.attach(prob)?, iters: 0, factorizations: 0, residual: res });
    }
    let large = prob.n() > cfg.pcg_threshold;
    let mut solver: Option<FallbackSolver> = None;
    let mut factorizations = 0;
    let mut history = vec![res];
    for k in 1..=cfg.maxit {
        let rhs = &r * 0.5;
        let lambda = match solver.as_mut() {
            Some(s) => {
                let before = s.factorizations();
                let xs = &x;
                let out = s.solve(
                    |v| a.mul_vec(&xs.component_mul(&a.tr_mul_vec(v))),
                    &a.weighted_gram_diagonal(xs),
                    || a.weighted_gram(xs),
                    &rhs,
                    1e-3 * cfg.tol,
                )?;
                factorizations += s.factorizations() - before;
                out
            }
            None => {
                let f = ldl_psd(&a.weighted_gram(&x), DEFAULT_ZERO_THRESHOLD)?;
                factorizations += 1;
                let out = f.pinv_apply(&rhs);
                if large {
                    solver = Some(FallbackSolver::default().with_factors(f));
                }
                out
            }
        };
        let step = a.tr_mul_vec(&lambda);
        z += z.component_mul(&step);
        x = z.map(|v| v * v);
        r = b - a.mul_vec(&x);
        res = r.norm();
        if !res.is_finite() {
            return Err(Error::RetractionDiverged { iters: k, residual: res });
        }
        if res <= target {
            return Ok(Retracted { point: make_point(z)?.attach(prob)?, iters: k, factorizations, residual: res });
        }
        if k >= 2 && res > cfg.divergence_factor * history[k - 2] {
            return Err(Error::RetractionDiverged { iters: k, residual: res });
        }
        history.push(res);
    }
    Err(Error::RetractionDiverged { iters: cfg.maxit, residual: res })
}
