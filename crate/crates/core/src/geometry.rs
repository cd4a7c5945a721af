//! Local geometry of `P = {y : A(y∘y) = b}`.
//!
//! A regular representation splits `ℝᵐ` into the range `R` of `A·Diag(y)`
//! and a complement. It is read off the LDL factors of `A·Diag(x)·Aᵀ`:
//! `M = I_{piv,:}·Lᵀ` has rows spanning `R`, and `N = I_{zero,:}·L⁻¹`
//! annihilates `A·Diag(y)`. Neither matrix is formed; both are applied
//! through triangular products and solves.
//!
//! Membership tests compare residual norms against
//! `MEMB_TOL·(1+‖A‖∞)·(1+‖y‖∞)²` times a size factor of the directions.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{ldl_psd, LdlFactors, DEFAULT_ZERO_THRESHOLD};
use crate::model::{PrimalPoint, ProblemLcp};

/// Default relative tolerance for tangent-cone membership.
pub const MEMB_TOL: f64 = 1e-8;

/// Regular representation at a point, held as LDL factors of
/// `A·Diag(x)·Aᵀ`.
#[derive(Debug, Clone)]
pub struct RegularRep {
    factors: LdlFactors,
    zero_rows: Vec<usize>,
}

impl RegularRep {
    pub fn from_factors(factors: LdlFactors) -> Self {
        let zero_rows = factors.zero_pivots();
        Self { factors, zero_rows }
    }

    pub fn factors(&self) -> &LdlFactors {
        &self.factors
    }

    /// Rank of `A·Diag(y)`.
    pub fn rank(&self) -> usize {
        self.factors.rank()
    }

    /// Number of constraints.
    pub fn m(&self) -> usize {
        self.factors.dim()
    }

    /// Whether the constraint gradients are linearly independent (`r = m`).
    pub fn is_regular(&self) -> bool {
        self.rank() == self.m()
    }

    /// `M·v`, of length `r`.
    pub fn apply_m(&self, v: &DVector<f64>) -> DVector<f64> {
        let t = self.factors.mul_lt(v);
        DVector::from_iterator(self.rank(), self.factors.pivot_support().iter().map(|&i| t[i]))
    }

    /// `N·v`, of length `m − r`.
    pub fn apply_n(&self, v: &DVector<f64>) -> DVector<f64> {
        let t = self.factors.solve_l(v);
        DVector::from_iterator(self.zero_rows.len(), self.zero_rows.iter().map(|&i| t[i]))
    }

    /// `Nᵀ·μ`, of length `m`.
    pub fn apply_n_transpose(&self, mu: &DVector<f64>) -> DVector<f64> {
        let mut t = DVector::zeros(self.m());
        for (k, &i) in self.zero_rows.iter().enumerate() {
            t[i] = mu[k];
        }
        self.factors.solve_lt(&t)
    }

    /// Dense `N·A·Diag(w)` of size `(m − r) × n`; zero columns are skipped.
    pub fn n_a_diag(&self, prob: &ProblemLcp, w: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.zero_rows.len(), prob.n());
        if self.zero_rows.is_empty() {
            return out;
        }
        for j in 0..prob.n() {
            if w[j] != 0.0 {
                let col = self.apply_n(&prob.a().column(j)) * w[j];
                out.set_column(j, &col);
            }
        }
        out
    }
}

/// Factors `A·Diag(x)·Aᵀ` at `p` with the default zero-pivot threshold.
pub fn regular_representation(p: &PrimalPoint, prob: &ProblemLcp) -> Result<RegularRep> {
    regular_representation_with(p, prob, DEFAULT_ZERO_THRESHOLD)
}

pub fn regular_representation_with(p: &PrimalPoint, prob: &ProblemLcp, zero_threshold: f64) -> Result<RegularRep> {
    check_dim(prob.n(), p.dim())?;
    if p.x().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let g = prob.a().weighted_gram(p.x());
    Ok(RegularRep::from_factors(ldl_psd(&g, zero_threshold)?))
}

/// `(1+‖A‖∞)·(1+‖y‖∞)²`.
pub fn membership_scale(prob: &ProblemLcp, y: &DVector<f64>) -> f64 {
    let ny = 1.0 + y.amax();
    (1.0 + prob.a_norm_inf()) * ny * ny
}

/// Residuals of the first-order tangent conditions
/// `M·A(y∘h) = 0` and `N·A(h∘h) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentResidual {
    pub res_m: f64,
    pub res_n: f64,
    /// Membership threshold `MEMB_TOL·(1+‖h‖²)·scale`.
    pub bound: f64,
}

impl TangentResidual {
    pub fn is_member(&self) -> bool {
        self.res_m <= self.bound && self.res_n <= self.bound
    }
}

pub fn tangent_residual(p: &PrimalPoint, h: &DVector<f64>, rep: &RegularRep, prob: &ProblemLcp) -> Result<TangentResidual> {
    check_dim(p.dim(), h.len())?;
    check_dim(prob.m(), rep.m())?;
    let a = prob.a();
    let res_m = rep.apply_m(&a.mul_vec(&p.y().component_mul(h))).norm();
    let res_n = rep.apply_n(&a.mul_vec(&h.component_mul(h))).norm();
    let bound = MEMB_TOL * (1.0 + h.norm_squared()) * membership_scale(prob, p.y());
    Ok(TangentResidual { res_m, res_n, bound })
}

/// Splits `ℝ^{m−r}` for the second-order conditions: `V` has rows spanning
/// the range of `N·A·Diag(h)` and `W` annihilates it.
#[derive(Debug, Clone)]
pub struct SecondOrderBasis {
    inner: RegularRep,
}

impl SecondOrderBasis {
    pub fn inner_factors(&self) -> &LdlFactors {
        self.inner.factors()
    }

    pub fn apply_v(&self, u: &DVector<f64>) -> DVector<f64> {
        self.inner.apply_m(u)
    }

    pub fn apply_w(&self, u: &DVector<f64>) -> DVector<f64> {
        self.inner.apply_n(u)
    }
}

pub fn second_order_basis(h: &DVector<f64>, rep: &RegularRep, prob: &ProblemLcp) -> Result<SecondOrderBasis> {
    check_dim(prob.n(), h.len())?;
    let b = rep.n_a_diag(prob, h);
    let mut g = &b * b.transpose();
    let k = g.nrows();
    for j in 0..k {
        for i in j + 1..k {
            g[(j, i)] = g[(i, j)];
        }
    }
    Ok(SecondOrderBasis { inner: RegularRep::from_factors(ldl_psd(&g, DEFAULT_ZERO_THRESHOLD)?) })
}

/// Residuals of the second-order tangent conditions
/// `M·A(y∘w + h∘h) = 0`, `V·N·A(h∘w) = 0` and `W·N·A(w∘w) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderResidual {
    pub res1: f64,
    pub res2: f64,
    pub res3: f64,
    /// Membership threshold `MEMB_TOL·(1+‖h‖²+‖w‖²)·scale`.
    pub bound: f64,
}

impl SecondOrderResidual {
    pub fn is_member(&self) -> bool {
        self.res1 <= self.bound && self.res2 <= self.bound && self.res3 <= self.bound
    }
}

pub fn second_order_residual(
    p: &PrimalPoint,
    h: &DVector<f64>,
    w: &DVector<f64>,
    rep: &RegularRep,
    sob: &SecondOrderBasis,
    prob: &ProblemLcp,
) -> Result<SecondOrderResidual> {
    check_dim(p.dim(), w.len())?;
    let first = tangent_residual(p, h, rep, prob)?;
    if !first.is_member() {
        return Err(Error::NotInTangentCone { res_m: first.res_m, res_n: first.res_n });
    }
    let a = prob.a();
    let y = p.y();
    let res1 = rep.apply_m(&a.mul_vec(&(y.component_mul(w) + h.component_mul(h)))).norm();
    let res2 = sob.apply_v(&rep.apply_n(&a.mul_vec(&h.component_mul(w)))).norm();
    let res3 = sob.apply_w(&rep.apply_n(&a.mul_vec(&w.component_mul(w)))).norm();
    let bound = MEMB_TOL * (1.0 + h.norm_squared() + w.norm_squared()) * membership_scale(prob, y);
    Ok(SecondOrderResidual { res1, res2, res3, bound })
}

/// True when the smallest positive pivot is below `sigma`. A point without
/// any positive pivot (only possible for `y = 0`, `b = 0`) counts as singular.
pub fn is_sigma_singular(rep: &RegularRep, sigma: f64) -> bool {
    match rep.factors().smallest_pivot() {
        Some(d) => d < sigma,
        None => true,
    }
}

/// Whether two points share a regular representation, i.e. whether
/// `A·Diag(y1)` and `A·Diag(y2)` have the same range.
pub fn same_stratum(p1: &PrimalPoint, p2: &PrimalPoint, prob: &ProblemLcp) -> Result<bool> {
    let r1 = regular_representation(p1, prob)?;
    let r2 = regular_representation(p2, prob)?;
    if r1.rank() != r2.rank() {
        return Ok(false);
    }
    let scale = {
        let ny = 1.0 + p1.y().amax().max(p2.y().amax());
        (1.0 + prob.a_norm_inf()) * ny * ny
    };
    let tol = MEMB_TOL * scale;
    Ok(r1.n_a_diag(prob, p2.y()).norm() <= tol && r2.n_a_diag(prob, p1.y()).norm() <= tol)
}

/// One connected component of the bipartite support graph of a square matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteComponent {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Connected components of the bipartite graph with an edge `(i, j)` for
/// every nonzero `Y_ij`, found by breadth-first search. Components are
/// ordered by their smallest vertex, rows before columns.
pub fn birkhoff_components(y: &DMatrix<f64>) -> Vec<BipartiteComponent> {
    let (nr, nc) = (y.nrows(), y.ncols());
    let mut row_adj = vec![Vec::new(); nr];
    let mut col_adj = vec![Vec::new(); nc];
    for j in 0..nc {
        for i in 0..nr {
            if y[(i, j)] != 0.0 {
                row_adj[i].push(j);
                col_adj[j].push(i);
            }
        }
    }
    let mut row_seen = vec![false; nr];
    let mut col_seen = vec![false; nc];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    let starts = (0..nr).map(|i| (true, i)).chain((0..nc).map(|j| (false, j)));
    for (is_row, v) in starts {
        let seen = if is_row { row_seen[v] } else { col_seen[v] };
        if seen {
            continue;
        }
        let mut comp = BipartiteComponent { rows: Vec::new(), cols: Vec::new() };
        if is_row {
            row_seen[v] = true;
        } else {
            col_seen[v] = true;
        }
        queue.push_back((is_row, v));
        while let Some((r, u)) = queue.pop_front() {
            if r {
                comp.rows.push(u);
                for &j in &row_adj[u] {
                    if !col_seen[j] {
                        col_seen[j] = true;
                        queue.push_back((false, j));
                    }
                }
            } else {
                comp.cols.push(u);
                for &i in &col_adj[u] {
                    if !row_seen[i] {
                        row_seen[i] = true;
                        queue.push_back((true, i));
                    }
                }
            }
        }
        comp.rows.sort_unstable();
        comp.cols.sort_unstable();
        out.push(comp);
    }
    out
}
