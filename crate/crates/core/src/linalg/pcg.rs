use nalgebra::{DMatrix, DVector};

use super::ldl::{ldl_psd, LdlFactors, DEFAULT_ZERO_THRESHOLD};
use crate::error::Result;

/// Result of a conjugate gradient run.
#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub solution: DVector<f64>,
    pub iters: usize,
    pub converged: bool,
}

/// Preconditioned conjugate gradient for a symmetric PSD operator.
///
/// Stops once `‖apply(x) − rhs‖ <= tol·(1+‖rhs‖)`. Breakdown (a non-positive
/// curvature estimate) ends the run with `converged = false`.
pub fn pcg<A, P>(apply: A, rhs: &DVector<f64>, precond: P, tol: f64, maxit: usize) -> PcgOutcome
where
    A: Fn(&DVector<f64>) -> DVector<f64>,
    P: Fn(&DVector<f64>) -> DVector<f64>,
{
    let target = tol * (1.0 + rhs.norm());
    let mut x = DVector::zeros(rhs.len());
    let mut r = rhs.clone();
    if r.norm() <= target {
        return PcgOutcome { solution: x, iters: 0, converged: true };
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 1..=maxit {
        let ap = apply(&p);
        let curv = p.dot(&ap);
        if !(curv > 0.0) || !(rz > 0.0) {
            return PcgOutcome { solution: x, iters: it, converged: false };
        }
        let alpha = rz / curv;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        if r.norm() <= target {
            return PcgOutcome { solution: x, iters: it, converged: true };
        }
        z = precond(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p *= beta;
        p += &z;
    }
    PcgOutcome { solution: x, iters: maxit, converged: false }
}

/// Solves a sequence of slowly changing PSD systems with PCG, falling back to
/// an LDL factorization only when PCG cannot reach the tolerance.
///
/// A cached factorization is reused as preconditioner for later systems until
/// PCG fails with it, at which point it is recomputed.
#[derive(Debug, Clone)]
pub struct FallbackSolver {
    cached: Option<LdlFactors>,
    factorizations: usize,
    pcg_maxit: usize,
}

impl Default for FallbackSolver {
    fn default() -> Self {
        Self::new(20)
    }
}

impl FallbackSolver {
    pub fn new(pcg_maxit: usize) -> Self {
        Self { cached: None, factorizations: 0, pcg_maxit }
    }

    /// Seeds the cache with an existing factorization.
    pub fn with_factors(mut self, f: LdlFactors) -> Self {
        self.cached = Some(f);
        self
    }

    /// Number of factorizations computed by this solver.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    /// Solves `H·x = rhs` where `apply` is `H`, `diag` its diagonal and
    /// `assemble` produces the dense matrix on demand.
    pub fn solve<A, F>(
        &mut self,
        apply: A,
        diag: &DVector<f64>,
        assemble: F,
        rhs: &DVector<f64>,
        tol: f64,
    ) -> Result<DVector<f64>>
    where
        A: Fn(&DVector<f64>) -> DVector<f64>,
        F: FnOnce() -> DMatrix<f64>,
    {
        if let Some(f) = &self.cached {
            let out = pcg(&apply, rhs, |v| ldl_precond(f, v), tol, self.pcg_maxit);
            if out.converged {
                return Ok(out.solution);
            }
        } else {
            let out = pcg(&apply, rhs, |v| jacobi(diag, v), tol, self.pcg_maxit);
            if out.converged {
                return Ok(out.solution);
            }
        }
        let f = ldl_psd(&assemble(), DEFAULT_ZERO_THRESHOLD)?;
        self.factorizations += 1;
        let out = pcg(&apply, rhs, |v| ldl_precond(&f, v), tol, 2 * self.pcg_maxit);
        let sol = if out.converged { out.solution } else { f.pinv_apply(rhs) };
        self.cached = Some(f);
        Ok(sol)
    }
}

fn jacobi(diag: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    v.zip_map(diag, |a, d| if d > 0.0 { a / d } else { a })
}

// Singular factors are made definite by treating zero pivots as unit pivots,
// which keeps the preconditioner positive definite.
fn ldl_precond(f: &LdlFactors, v: &DVector<f64>) -> DVector<f64> {
    let mut z = f.solve_l(v);
    for i in 0..f.dim() {
        if f.is_pivot(i) {
            z[i] /= f.d()[i];
        }
    }
    f.solve_lt(&z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ldl_pinv_solve;

    #[test]
    fn identity_converges_in_one_step() {
        let rhs = DVector::from_vec(vec![1.0, -2.0, 3.5]);
        let out = pcg(|v| v.clone(), &rhs, |v| v.clone(), 1e-12, 10);
        assert!(out.converged);
        assert_eq!(out.iters, 1);
        assert!((out.solution - rhs).norm() < 1e-15);
    }

    #[test]
    fn exact_preconditioner_converges_in_one_step() {
        let diag = DVector::from_fn(6, |i, _| (i + 1) as f64);
        let rhs = DVector::from_element(6, 1.0);
        let out = pcg(
            |v| v.component_mul(&diag),
            &rhs,
            |v| v.component_div(&diag),
            1e-12,
            10,
        );
        assert!(out.converged);
        assert_eq!(out.iters, 1);
    }

    #[test]
    fn zero_rhs_needs_no_iterations() {
        let out = pcg(|v| v.clone(), &DVector::zeros(3), |v| v.clone(), 1e-10, 5);
        assert!(out.converged);
        assert_eq!(out.iters, 0);
    }

    #[test]
    fn matches_direct_solve_on_spd_system() {
        // Deterministic SPD matrix G·Gᵀ + I.
        let g = DMatrix::from_fn(20, 20, |i, j| ((i * 7 + j * 13) % 11) as f64 / 11.0 - 0.5);
        let s = &g * g.transpose() + DMatrix::identity(20, 20);
        let rhs = DVector::from_fn(20, |i, _| (i as f64).sin());
        let diag = s.diagonal();
        let out = pcg(|v| &s * v, &rhs, |v| v.component_div(&diag), 1e-14, 200);
        assert!(out.converged);
        let f = ldl_psd(&s, 1e-12).unwrap();
        let direct = ldl_pinv_solve(&f, &rhs).unwrap();
        assert!((out.solution - direct).norm() <= 1e-10);
    }

    #[test]
    fn fallback_reuses_cached_factorization() {
        let g = DMatrix::from_fn(30, 30, |i, j| ((i * 5 + j * 3) % 17) as f64 - 8.0);
        let s = &g * g.transpose() + DMatrix::identity(30, 30) * 1e-3;
        let diag = s.diagonal();
        let rhs = DVector::from_fn(30, |i, _| 1.0 + i as f64);
        let mut solver = FallbackSolver::new(3);
        let x1 = solver.solve(|v| &s * v, &diag, || s.clone(), &rhs, 1e-12).unwrap();
        assert_eq!(solver.factorizations(), 1);
        assert!((&s * &x1 - &rhs).norm() <= 1e-8 * (1.0 + rhs.norm()));
        // The same system is solved by the cached preconditioner directly.
        let x2 = solver.solve(|v| &s * v, &diag, || s.clone(), &rhs, 1e-12).unwrap();
        assert_eq!(solver.factorizations(), 1);
        assert!((x1 - x2).norm() <= 1e-6);
    }
}
