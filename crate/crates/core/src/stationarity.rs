//! Stationarity tests, multiplier recovery and KKT residuals.
//!
//! At a point `y`, the Riemannian gradient projects `∇φ(x)∘y` onto the kernel
//! of `A·Diag(y)`; the coefficients of that projection give a multiplier
//! `λ'`. When the point is singular, `λ'` is one element of an affine family
//! `λ' + Nᵀμ`, and [`dual_feasibility`] searches the family for an element
//! with nonnegative reduced costs. If none exists, the minimizer yields a
//! witness from which [`escape_direction`] builds a feasible descent
//! direction for the original problem.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::RegularRep;
use crate::linalg::{ldl_psd, DEFAULT_ZERO_THRESHOLD};
use crate::model::{ObjectiveOracle, PrimalPoint, ProblemLcp};
use crate::problems::rng;

/// Which multiplier certified a KKT report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierSource {
    /// From the gradient projection at a smooth iterate.
    SmoothProjection,
    /// From the dual of the projection in a projected gradient step.
    PgdDual,
    /// Supplied by the caller or assembled from a dual-feasibility search.
    External,
}

/// Normalized primal, dual and complementarity residuals.
#[derive(Debug, Clone)]
pub struct KktReport {
    pub rp: f64,
    pub rd: f64,
    pub rc: f64,
    pub lambda: DVector<f64>,
    pub objective: f64,
    pub multiplier_source: MultiplierSource,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.rp.max(self.rd).max(self.rc)
    }
}

/// Riemannian gradient of `f(y) = φ(y∘y)` and the multiplier `λ'` solving
/// `A·Diag(x)·Aᵀ·λ = A·(x∘∇φ(x))`.
pub fn riemannian_gradient(p: &PrimalPoint, rep: &RegularRep, prob: &ProblemLcp) -> Result<(DVector<f64>, DVector<f64>)> {
    check_dim(prob.n(), p.dim())?;
    let g = prob.objective().gradient(p.x());
    Ok(riemannian_gradient_from(p, &g, rep, prob))
}

/// As [`riemannian_gradient`] with `∇φ(x)` already evaluated.
pub fn riemannian_gradient_from(
    p: &PrimalPoint,
    grad_phi: &DVector<f64>,
    rep: &RegularRep,
    prob: &ProblemLcp,
) -> (DVector<f64>, DVector<f64>) {
    let a = prob.a();
    let rhs = a.mul_vec(&p.x().component_mul(grad_phi));
    let lambda = rep.factors().pinv_apply(&rhs);
    let reduced = grad_phi - a.tr_mul_vec(&lambda);
    let grad = p.y().component_mul(&reduced) * 2.0;
    (grad, lambda)
}

/// Outcome of the search for a dual-feasible multiplier in `λ' + Nᵀμ`.
#[derive(Debug, Clone)]
pub struct DualFeasibilityResult {
    pub mu: DVector<f64>,
    /// `min_μ ½‖Proj₋(∇φ − Aᵀλ' − Aᵀ·Nᵀ·μ)‖²`.
    pub primal_violation: f64,
    /// `−Proj₋(∇φ − Aᵀ(λ' + Nᵀμ*))`, present when the violation exceeds
    /// the tolerance.
    pub witness_z: Option<DVector<f64>>,
    pub iters: usize,
}

impl DualFeasibilityResult {
    /// `λ' + Nᵀμ`.
    pub fn assembled_multiplier(&self, rep: &RegularRep, lambda_prime: &DVector<f64>) -> DVector<f64> {
        if self.mu.is_empty() {
            lambda_prime.clone()
        } else {
            lambda_prime + rep.apply_n_transpose(&self.mu)
        }
    }
}

const DUAL_MAX_ITER: usize = 200;

fn neg_part(v: &DVector<f64>) -> DVector<f64> {
    v.map(|t| t.min(0.0))
}

/// Minimizes `½‖Proj₋(g − Bᵀμ)‖²` with `g = ∇φ(x) − Aᵀλ'` and `B = N·A` by
/// a regularized semismooth Newton method.
pub fn dual_feasibility(
    p: &PrimalPoint,
    rep: &RegularRep,
    lambda_prime: &DVector<f64>,
    prob: &ProblemLcp,
    tol: f64,
) -> Result<DualFeasibilityResult> {
    check_dim(prob.m(), lambda_prime.len())?;
    let a = prob.a();
    let g = prob.objective().gradient(p.x()) - a.tr_mul_vec(lambda_prime);
    let k = rep.m() - rep.rank();
    if k == 0 {
        let neg = neg_part(&g);
        let primal_violation = 0.5 * neg.norm_squared();
        let witness_z = (primal_violation > tol).then(|| -neg);
        return Ok(DualFeasibilityResult { mu: DVector::zeros(0), primal_violation, witness_z, iters: 0 });
    }

    let b = rep.n_a_diag(prob, &DVector::from_element(prob.n(), 1.0));
    let finish = |mu: DVector<f64>, s: &DVector<f64>, iters: usize| -> Result<DualFeasibilityResult> {
        let neg = neg_part(s);
        let primal_violation = 0.5 * neg.norm_squared();
        let witness_z = if primal_violation > tol { Some(polish_witness(&b, -neg)?) } else { None };
        Ok(DualFeasibilityResult { mu, primal_violation, witness_z, iters })
    };
    let trace = b.norm_squared();
    let ridge = 1e-10 * (trace / k as f64).max(f64::MIN_POSITIVE);
    let gtol = 1e-14 * (1.0 + g.norm()) * (1.0 + trace.sqrt());
    let objective = |mu: &DVector<f64>| {
        let s = &g - b.tr_mul(mu);
        (0.5 * neg_part(&s).norm_squared(), s)
    };

    let mut mu = DVector::zeros(k);
    let (mut f, mut s) = objective(&mu);
    for it in 0..DUAL_MAX_ITER {
        let neg = neg_part(&s);
        let grad = -(&b * &neg);
        if f == 0.0 || grad.norm() <= gtol {
            return finish(mu, &s, it);
        }
        let active = s.map(|t| if t < 0.0 { 1.0 } else { 0.0 });
        let mut bd = b.clone();
        for (j, mut col) in bd.column_iter_mut().enumerate() {
            col *= active[j];
        }
        let mut h = &bd * b.transpose();
        for i in 0..k {
            h[(i, i)] += ridge;
        }
        let hs = (&h + h.transpose()) * 0.5;
        let dir = ldl_psd(&hs, DEFAULT_ZERO_THRESHOLD)?.pinv_apply(&(-&grad));
        let slope = grad.dot(&dir);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &mu + &dir * t;
            let (fc, sc) = objective(&cand);
            if fc <= f + 1e-4 * t * slope {
                mu = cand;
                f = fc;
                s = sc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No further decrease is representable; the current point is the
            // numerical minimizer.
            return finish(mu, &s, it);
        }
    }
    let grad = -(&b * neg_part(&s));
    if grad.norm() <= 1e4 * gtol {
        return finish(mu, &s, DUAL_MAX_ITER);
    }
    Err(Error::MaxIterExceeded { what: "dual feasibility search", iters: DUAL_MAX_ITER })
}

/// Removes the rounding-level residual of `B·z = 0` from a witness by a
/// least-squares correction on its support. The correction is orders of
/// magnitude below the positive entries; any entry it would push negative
/// is clipped.
fn polish_witness(b: &DMatrix<f64>, z: DVector<f64>) -> Result<DVector<f64>> {
    let supp: Vec<usize> = (0..z.len()).filter(|&i| z[i] > 0.0).collect();
    if supp.is_empty() || b.nrows() == 0 {
        return Ok(z);
    }
    let bf = b.select_columns(&supp);
    let zf = DVector::from_iterator(supp.len(), supp.iter().map(|&i| z[i]));
    let gram = &bf * bf.transpose();
    let gram = (&gram + gram.transpose()) * 0.5;
    let eta = ldl_psd(&gram, DEFAULT_ZERO_THRESHOLD)?.pinv_apply(&(&bf * &zf));
    let corr = bf.tr_mul(&eta);
    let mut out = z;
    for (k, &i) in supp.iter().enumerate() {
        out[i] = (out[i] - corr[k]).max(0.0);
    }
    Ok(out)
}

/// Feasible descent direction `y∘w + z` built from a dual-feasibility
/// witness `z >= 0`.
///
/// With `h = √z`, the vector `w = y∘(Aᵀη)` with `A·Diag(x)·Aᵀ·η = −A·z`
/// solves `M·A(y∘w) = −M·A(h∘h)` in the least-squares sense, so the
/// direction satisfies `A·dir = 0`.
pub fn escape_direction(p: &PrimalPoint, rep: &RegularRep, witness_z: &DVector<f64>, prob: &ProblemLcp) -> Result<DVector<f64>> {
    check_dim(prob.n(), witness_z.len())?;
    if witness_z.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument("witness must be finite and nonnegative".into()));
    }
    if witness_z.norm() == 0.0 {
        return Err(Error::ZeroWitness);
    }
    let a = prob.a();
    let h = witness_z.map(f64::sqrt);
    let hh = h.component_mul(&h);
    let eta = rep.factors().pinv_apply(&(-a.mul_vec(&hh)));
    let w = p.y().component_mul(&a.tr_mul_vec(&eta));
    Ok(p.y().component_mul(&w) + hh)
}

const SAMPLED_KERNEL_LIMIT: usize = 2000;
const KERNEL_SAMPLES: usize = 50;

/// Second-order test on the smooth stratum through `p`: true when `∇²φ(x)`
/// is positive semidefinite (to `1e-8·‖∇²φ‖`) on the kernel of `A`
/// restricted to the support columns.
///
/// Beyond 2000 support columns the test samples 50 random kernel vectors and
/// is therefore probabilistic.
pub fn second_order_check(p: &PrimalPoint, prob: &ProblemLcp) -> Result<bool> {
    let n = prob.n();
    check_dim(n, p.dim())?;
    let obj = prob.objective();
    let x = p.x();
    let hv = |v: &DVector<f64>| obj.hessian_vec(x, v).ok_or(Error::NoHessian);
    let supp = p.support();

    // ‖∇²φ‖ by power iteration on a fixed start vector.
    let mut g = rng(0x5eed);
    let mut v = DVector::from_fn(n, |_, _| g.sample::<f64, _>(StandardNormal));
    v /= v.norm().max(f64::MIN_POSITIVE);
    let mut hnorm = 0.0_f64;
    for _ in 0..30 {
        let hvv = hv(&v)?;
        hnorm = hvv.norm();
        if hnorm == 0.0 {
            break;
        }
        v = hvv / hnorm;
    }
    let psd_tol = 1e-8 * hnorm;
    if supp.is_empty() {
        return Ok(true);
    }

    let embed = |z: &[f64]| {
        let mut full = DVector::zeros(n);
        for (k, &i) in supp.iter().enumerate() {
            full[i] = z[k];
        }
        full
    };
    let a_s = prob.a().select_columns(supp);
    let s = supp.len();
    if s > SAMPLED_KERNEL_LIMIT {
        let f = ldl_psd(&(&a_s * a_s.transpose()), DEFAULT_ZERO_THRESHOLD)?;
        for _ in 0..KERNEL_SAMPLES {
            let r = DVector::from_fn(s, |_, _| g.sample::<f64, _>(StandardNormal));
            let z = &r - a_s.tr_mul(&f.pinv_apply(&(&a_s * &r)));
            let zf = embed(z.as_slice());
            if zf.dot(&hv(&zf)?) < -psd_tol * zf.norm_squared() {
                return Ok(false);
            }
        }
        return Ok(true);
    }

    let m = a_s.nrows();
    let mut padded = DMatrix::zeros(m.max(s), s);
    padded.view_mut((0, 0), (m, s)).copy_from(&a_s);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.max();
    let cut = 1e-10 * smax.max(1.0) * s as f64;
    let kernel: Vec<usize> = (0..s).filter(|&k| svd.singular_values[k] <= cut).collect();
    if kernel.is_empty() {
        return Ok(true);
    }
    let zs: Vec<DVector<f64>> = kernel.iter().map(|&k| embed(vt.row(k).transpose().as_slice())).collect();
    let hz: Vec<DVector<f64>> = zs.iter().map(&hv).collect::<Result<_>>()?;
    let kd = zs.len();
    let reduced = DMatrix::from_fn(kd, kd, |i, j| 0.5 * (zs[i].dot(&hz[j]) + zs[j].dot(&hz[i])));
    let min_eig = SymmetricEigen::new(reduced).eigenvalues.min();
    Ok(min_eig >= -psd_tol)
}

/// KKT residuals at `p` for multiplier `lambda`.
pub fn kkt_residuals(p: &PrimalPoint, lambda: &DVector<f64>, prob: &ProblemLcp) -> Result<KktReport> {
    kkt_residuals_at(p.x(), lambda, prob, MultiplierSource::External)
}

/// KKT residuals at an arbitrary `x` (not necessarily nonnegative):
///
/// - `Rp = max(‖Ax − b‖/(1+‖b‖), ‖Proj₋(x)‖/(1+‖x‖))`
/// - `Rd = ‖Proj₋(∇φ − Aᵀλ)‖/(1+‖∇φ‖)`
/// - `Rc = |⟨∇φ − Aᵀλ, x⟩|/(1+‖∇φ‖)`
pub fn kkt_residuals_at(
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    prob: &ProblemLcp,
    source: MultiplierSource,
) -> Result<KktReport> {
    check_dim(prob.n(), x.len())?;
    let (objective, g) = prob.objective().value_and_gradient(x);
    kkt_from_gradient(x, objective, &g, lambda, prob, source)
}

pub(crate) fn kkt_from_gradient(
    x: &DVector<f64>,
    objective: f64,
    g: &DVector<f64>,
    lambda: &DVector<f64>,
    prob: &ProblemLcp,
    source: MultiplierSource,
) -> Result<KktReport> {
    check_dim(prob.m(), lambda.len())?;
    let a = prob.a();
    let rp = (prob.residual(x)? / (1.0 + prob.b().norm())).max(neg_part(x).norm() / (1.0 + x.norm()));
    let s = g - a.tr_mul_vec(lambda);
    let gscale = 1.0 + g.norm();
    let rd = neg_part(&s).norm() / gscale;
    let rc = s.dot(x).abs() / gscale;
    Ok(KktReport { rp, rd, rc, lambda: lambda.clone(), objective, multiplier_source: source })
}
