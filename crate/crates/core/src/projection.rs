//! Euclidean projection onto `C = {x >= 0 : Ax = b}` and projected gradient
//! steps.
//!
//! The projection of `v` is `Proj₊(v + Aᵀλ*)` where `λ*` minimizes the dual
//! `θ(λ) = ½‖Proj₊(v + Aᵀλ)‖² − ⟨λ, b⟩`. The dual is solved by a
//! semismooth Newton method whose generalized Hessian `A·Diag(active)·Aᵀ`
//! systems go through [`FallbackSolver`]: PCG first, a cached LDL
//! preconditioner when PCG stalls.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::linalg::FallbackSolver;
use crate::model::{ObjectiveOracle, PrimalPoint, ProblemLcp};

/// Default tolerance on `‖Ax − b‖/(1+‖b‖)` for standalone projections.
pub const DEFAULT_PROJ_TOL: f64 = 1e-13;

const MAX_NEWTON: usize = 200;
const INFEASIBLE_CAP: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// The projection, `Proj₊(v + Aᵀ·lambda)` exactly.
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    /// `‖Ax − b‖/(1+‖b‖)`; the other optimality conditions hold by
    /// construction.
    pub residual: f64,
    pub iters: usize,
}

/// One projected gradient step `x⁺ = Proj(x − t·∇φ(x))`.
#[derive(Debug, Clone)]
pub struct PgdStep {
    pub x_plus: DVector<f64>,
    /// `x⁺ − x`.
    pub g_t: DVector<f64>,
    /// `‖g_t‖/t`.
    pub h_t: f64,
    /// Multiplier estimate for the original problem, the projection dual
    /// divided by `t`.
    pub lambda: DVector<f64>,
}

/// Accepted projected gradient step.
#[derive(Debug, Clone)]
pub struct PgdLinesearch {
    pub t: f64,
    pub x_plus: DVector<f64>,
    pub lambda: DVector<f64>,
    pub g_t: DVector<f64>,
    /// `φ(x⁺)`.
    pub value: f64,
    /// Set when `x⁺ = x` to projection accuracy; the step is then accepted at
    /// the first trial with zero movement.
    pub stationary: bool,
    pub trials: usize,
}

/// Projection solver that keeps its dual iterate and factorization between
/// calls.
#[derive(Debug, Clone, Default)]
pub struct Projector {
    warm: Option<DVector<f64>>,
    /// Multiplier of the last projected gradient step, in units of the
    /// original problem; scaled by the next step size to warm start.
    step_multiplier: Option<DVector<f64>>,
    linear: FallbackSolver,
    newton_steps: usize,
    projections: usize,
}

fn plus(v: &DVector<f64>) -> DVector<f64> {
    v.map(|t| t.max(0.0))
}

impl Projector {
    pub fn new() -> Self {
        Self::default()
    }

    /// LDL factorizations computed so far.
    pub fn factorizations(&self) -> usize {
        self.linear.factorizations()
    }

    pub fn newton_steps(&self) -> usize {
        self.newton_steps
    }

    pub fn projections(&self) -> usize {
        self.projections
    }

    pub fn reset_warm_start(&mut self) {
        self.warm = None;
        self.step_multiplier = None;
    }

    pub fn project(&mut self, v: &DVector<f64>, prob: &ProblemLcp, proj_tol: f64) -> Result<ProjectionResult> {
        check_dim(prob.n(), v.len())?;
        if v.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        self.projections += 1;
        let a = prob.a();
        let b = prob.b();
        let (m, n) = (prob.m(), prob.n());
        let bscale = 1.0 + b.norm();
        let target = proj_tol * bscale;
        let lambda_cap = INFEASIBLE_CAP * (bscale + v.norm());
        let mut lambda = match &self.warm {
            Some(l) if l.len() == m && l.iter().all(|t| t.is_finite()) => l.clone(),
            // Cold start from the multiplier of the affine projection, which
            // leaves roughly half the entries active.
            _ => {
                let ones = DVector::from_element(n, 1.0);
                let ones_ref = &ones;
                self.linear
                    .solve(
                        |w| a.mul_vec(&a.tr_mul_vec(w)),
                        &a.weighted_gram_diagonal(ones_ref),
                        || a.weighted_gram(ones_ref),
                        &(b - a.mul_vec(v)),
                        1e-6,
                    )
                    .unwrap_or_else(|_| DVector::zeros(m))
            }
        };
        let mut u = v + a.tr_mul_vec(&lambda);
        let mut x = plus(&u);
        let mut grad = a.mul_vec(&x) - b;
        let mut gn = grad.norm();
        let mut theta = 0.5 * x.norm_squared() - lambda.dot(b);
        let mut iters = 0;
        while gn > target {
            if iters >= MAX_NEWTON {
                return Err(Error::MaxIterExceeded { what: "projection", iters });
            }
            if lambda.norm() > lambda_cap {
                return Err(Error::InfeasibleDetected);
            }
            iters += 1;
            let active = u.map(|t| if t > 0.0 { 1.0 } else { 0.0 });
            let diag = a.weighted_gram_diagonal(&active);
            let mean_diag = diag.mean().max(f64::MIN_POSITIVE);
            let ridge = 1e-12 * n as f64 + 1e-3 * gn.min(1.0) * mean_diag;
            let rhs = -&grad;
            let cg_tol = (0.1_f64.min(gn.sqrt()) * gn / (1.0 + gn)).max(1e-3 * target / (1.0 + gn));
            let act = &active;
            let d = self.linear.solve(
                |w| a.mul_vec(&act.component_mul(&a.tr_mul_vec(w))) + w * ridge,
                &diag.add_scalar(ridge),
                || {
                    let mut h = a.weighted_gram(act);
                    for i in 0..m {
                        h[(i, i)] += ridge;
                    }
                    h
                },
                &rhs,
                cg_tol,
            )?;
            let mut d = d;
            let mut slope = grad.dot(&d);
            if !(slope < 0.0) {
                d = rhs.clone();
                slope = -gn * gn;
            }
            // Exact minimizer of the piecewise quadratic dual along d, with
            // halving from 1 as a fallback when rounding spoils it.
            let w = a.tr_mul_vec(&d);
            let exact = exact_dual_step(&u, &w, d.dot(b)).map(|s| s.min(1.0));
            let mut accepted = false;
            let mut step = 1.0;
            for trial in 0..61 {
                let s_try = match (trial, exact) {
                    (0, Some(s)) => s,
                    (0, None) => continue,
                    _ => {
                        let cur = step;
                        step *= 0.5;
                        cur
                    }
                };
                let lc = &lambda + &d * s_try;
                let uc = v + a.tr_mul_vec(&lc);
                let xc = plus(&uc);
                let tc = 0.5 * xc.norm_squared() - lc.dot(b);
                let armijo = tc <= theta + 1e-4 * s_try * slope;
                let noise = (tc - theta).abs() <= 1e-13 * (1.0 + theta.abs());
                let gc = a.mul_vec(&xc) - b;
                let gcn = gc.norm();
                if armijo || (noise && gcn < gn) {
                    lambda = lc;
                    u = uc;
                    x = xc;
                    grad = gc;
                    gn = gcn;
                    theta = tc;
                    accepted = true;
                    break;
                }
            }
            self.newton_steps += 1;
            if !accepted {
                // Rounding floor of the dual objective.
                if gn <= 1e3 * target {
                    break;
                }
                return Err(Error::MaxIterExceeded { what: "projection", iters });
            }
        }
        // Polish on the final active set with accurate inner solves; steps
        // are kept only while they reduce the residual.
        for _ in 0..3 {
            if gn <= 1e-15 * bscale {
                break;
            }
            let active = u.map(|t| if t > 0.0 { 1.0 } else { 0.0 });
            let ridge = 1e-14 * a.weighted_gram_diagonal(&active).mean().max(f64::MIN_POSITIVE);
            let act = &active;
            let Ok(d) = self.linear.solve(
                |w| a.mul_vec(&act.component_mul(&a.tr_mul_vec(w))) + w * ridge,
                &a.weighted_gram_diagonal(act).add_scalar(ridge),
                || {
                    let mut h = a.weighted_gram(act);
                    for i in 0..m {
                        h[(i, i)] += ridge;
                    }
                    h
                },
                &(-&grad),
                1e-8 * gn / (1.0 + gn),
            ) else {
                break;
            };
            let lc = &lambda + d;
            let uc = v + a.tr_mul_vec(&lc);
            let xc = plus(&uc);
            let gc = a.mul_vec(&xc) - b;
            let gcn = gc.norm();
            if !(gcn < gn) {
                break;
            }
            lambda = lc;
            u = uc;
            x = xc;
            grad = gc;
            gn = gcn;
        }
        self.warm = Some(lambda.clone());
        Ok(ProjectionResult { x, lambda, residual: gn / bscale, iters })
    }

    /// `Proj(x − t·grad)` with the derived step quantities.
    pub fn pgd_step_at(
        &mut self,
        x: &DVector<f64>,
        grad: &DVector<f64>,
        t: f64,
        prob: &ProblemLcp,
        proj_tol: f64,
    ) -> Result<PgdStep> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {t}")));
        }
        // The projection dual grows linearly in t for a fixed multiplier.
        if let Some(mu) = &self.step_multiplier {
            self.warm = Some(mu * t);
        }
        let proj = self.project(&(x - grad * t), prob, proj_tol)?;
        let g_t = &proj.x - x;
        let h_t = g_t.norm() / t;
        let lambda = proj.lambda / t;
        self.step_multiplier = Some(lambda.clone());
        Ok(PgdStep { x_plus: proj.x, g_t, h_t, lambda })
    }

    /// Backtracking projected gradient linesearch starting at `t_init`:
    /// accepts the first `t = t_init·2⁻ʲ` with
    /// `φ(x⁺) <= reference − δ·‖x⁺ − x‖²/t`.
    #[allow(clippy::too_many_arguments)]
    pub fn pgd_linesearch(
        &mut self,
        x: &DVector<f64>,
        grad: &DVector<f64>,
        t_init: f64,
        reference: f64,
        delta: f64,
        max_halvings: usize,
        prob: &ProblemLcp,
        proj_tol: f64,
    ) -> Result<PgdLinesearch> {
        let stat_tol = 1e-10 * (1.0 + x.norm());
        let mut t = t_init;
        for trial in 0..=max_halvings {
            // A projection that runs out of Newton steps counts as a
            // rejection; shorter steps project more easily.
            let step = match self.pgd_step_at(x, grad, t, prob, proj_tol) {
                Ok(s) => s,
                Err(Error::MaxIterExceeded { .. }) if trial < max_halvings => {
                    t *= 0.5;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let gn2 = step.g_t.norm_squared();
            let value = prob.objective().value(&step.x_plus);
            // Scaled by t so that a short trial step is not mistaken for a
            // fixed point.
            if trial == 0 && gn2.sqrt() <= stat_tol * t.min(1.0) {
                return Ok(PgdLinesearch {
                    t,
                    x_plus: step.x_plus,
                    lambda: step.lambda,
                    g_t: step.g_t,
                    value,
                    stationary: true,
                    trials: 1,
                });
            }
            if value <= reference - delta * gn2 / t {
                return Ok(PgdLinesearch {
                    t,
                    x_plus: step.x_plus,
                    lambda: step.lambda,
                    g_t: step.g_t,
                    value,
                    stationary: false,
                    trials: trial + 1,
                });
            }
            t *= 0.5;
        }
        Err(Error::LinesearchFailed { halvings: max_halvings })
    }
}

/// Minimizer over `s >= 0` of `½‖(u + s·w)₊‖² − s·db`, found by sweeping the
/// breakpoints of the piecewise linear derivative. `None` when the
/// derivative at zero is not negative or no minimizer exists.
fn exact_dual_step(u: &DVector<f64>, w: &DVector<f64>, db: f64) -> Option<f64> {
    let mut a0 = 0.0;
    let mut a1 = 0.0;
    let mut events: Vec<(f64, usize)> = Vec::new();
    for i in 0..u.len() {
        let (ui, wi) = (u[i], w[i]);
        let on = ui > 0.0 || (ui == 0.0 && wi > 0.0);
        if on {
            a0 += ui * wi;
            a1 += wi * wi;
        }
        if wi != 0.0 {
            let s = -ui / wi;
            if s > 0.0 && s.is_finite() {
                events.push((s, i));
            }
        }
    }
    if !(a0 - db < 0.0) {
        return None;
    }
    events.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
    for &(s_next, i) in &events {
        // Root of the derivative a0 + s·a1 − db on the current piece.
        if a1 > 0.0 {
            let root = (db - a0) / a1;
            if root <= s_next {
                return Some(root);
            }
        }
        let (ui, wi) = (u[i], w[i]);
        if wi > 0.0 {
            a0 += ui * wi;
            a1 += wi * wi;
        } else {
            a0 -= ui * wi;
            a1 -= wi * wi;
        }
        a1 = a1.max(0.0);
    }
    (a1 > 0.0).then(|| (db - a0) / a1).filter(|s| *s > 0.0 && s.is_finite())
}

/// Cold-start projection of `v` onto `C`.
pub fn project_polyhedron(v: &DVector<f64>, prob: &ProblemLcp, proj_tol: f64) -> Result<ProjectionResult> {
    Projector::new().project(v, prob, proj_tol)
}

/// Projected gradient step of length `t` from `p`.
pub fn pgd_step(p: &PrimalPoint, t: f64, prob: &ProblemLcp) -> Result<PgdStep> {
    let g = prob.objective().gradient(p.x());
    Projector::new().pgd_step_at(p.x(), &g, t, prob, DEFAULT_PROJ_TOL)
}

/// Armijo projected gradient linesearch over `t = 2⁻ᵏ`, `k >= 1`.
pub fn armijo_pgd(p: &PrimalPoint, delta: f64, prob: &ProblemLcp, max_halvings: usize) -> Result<PgdLinesearch> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    let (value, g) = prob.objective().value_and_gradient(p.x());
    let out = Projector::new().pgd_linesearch(p.x(), &g, 0.5, value, delta, max_halvings, prob, DEFAULT_PROJ_TOL)?;
    debug_assert!(out.stationary || out.value <= value - delta * out.g_t.norm_squared() / out.t);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_point, QuadraticObjective};
    use crate::problems::{birkhoff_constraints, simplex_constraints, simplex_projection_problem};

    fn simplex_lin(n: usize) -> ProblemLcp {
        let (a, b) = simplex_constraints(n);
        ProblemLcp::new("s", a, b, QuadraticObjective::linear(DVector::zeros(n)).into()).unwrap()
    }

    #[test]
    fn feasible_point_projects_to_itself() {
        let prob = simplex_lin(3);
        let v = DVector::from_vec(vec![0.2, 0.3, 0.5]);
        let r = project_polyhedron(&v, &prob, 1e-12).unwrap();
        assert!((r.x - v).norm() < 1e-15);
        assert_eq!(r.iters, 0);
        assert_eq!(r.lambda, DVector::zeros(1));
    }

    #[test]
    fn simplex_example() {
        let prob = simplex_lin(3);
        let v = DVector::from_vec(vec![0.5, 0.2, -0.3]);
        let r = project_polyhedron(&v, &prob, 1e-13).unwrap();
        // Shift τ = 0.15 makes the positive part sum to one.
        let expect = [0.65, 0.35, 0.0];
        for i in 0..3 {
            assert!((r.x[i] - expect[i]).abs() <= 1e-12, "{:?}", r.x);
        }
    }

    #[test]
    fn birkhoff_projection_is_doubly_stochastic() {
        let n = 4;
        let (a, b) = birkhoff_constraints(n);
        let prob = ProblemLcp::new("bh", a, b, QuadraticObjective::linear(DVector::zeros(n * n)).into()).unwrap();
        let v = DVector::from_fn(n * n, |i, _| ((i * 7) % 5) as f64 - 2.0);
        let r = project_polyhedron(&v, &prob, 1e-13).unwrap();
        let xm = nalgebra::DMatrix::from_column_slice(n, n, r.x.as_slice());
        assert!((xm.column_sum() - DVector::from_element(n, 1.0)).amax() < 1e-11);
        assert!((xm.row_sum().transpose() - DVector::from_element(n, 1.0)).amax() < 1e-11);
    }

    #[test]
    fn armijo_accepts_first_trial_far_from_optimum() {
        let v = DVector::from_vec(vec![3.0, 0.0, 0.0, 0.0]);
        let prob = simplex_projection_problem(&v).unwrap();
        let p = make_point(DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0])).unwrap();
        let ls = armijo_pgd(&p, 1e-4, &prob, 50).unwrap();
        assert_eq!(ls.t, 0.5);
        assert!(!ls.stationary);
        let f0 = prob.objective().value(p.x());
        assert!(ls.value <= f0 - 1e-4 * ls.g_t.norm_squared() / ls.t);
    }

    #[test]
    fn stationary_point_flags_zero_step() {
        let v = DVector::from_vec(vec![0.5, 0.2, -0.3]);
        let prob = simplex_projection_problem(&v).unwrap();
        let p = make_point(DVector::from_vec(vec![0.65_f64.sqrt(), 0.35_f64.sqrt(), 0.0])).unwrap();
        let ls = armijo_pgd(&p, 1e-4, &prob, 50).unwrap();
        assert!(ls.stationary);
        assert!(ls.g_t.norm() < 1e-10);
        for t in [1.0, 0.1, 0.01] {
            assert!(pgd_step(&p, t, &prob).unwrap().g_t.norm() < 1e-10);
        }
    }

    #[test]
    fn warm_start_reuses_dual() {
        let prob = simplex_lin(5);
        let v = DVector::from_vec(vec![1.0, -0.5, 0.3, 2.0, 0.0]);
        let mut pr = Projector::new();
        let r1 = pr.project(&v, &prob, 1e-13).unwrap();
        let r2 = pr.project(&v, &prob, 1e-13).unwrap();
        assert_eq!(r2.iters, 0);
        assert_eq!(r1.x, r2.x);
    }
}
