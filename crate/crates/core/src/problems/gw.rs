use nalgebra::{DMatrix, DVector};

use super::transport::TransportPolytope;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{CscMatrix, RealMatrix};
use crate::model::{ObjectiveOracle, ProblemLcp};

fn left_mul(a: &RealMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    match a {
        RealMatrix::Dense(a) => a * x,
        RealMatrix::Sparse(a) => a.mul_dense(x),
    }
}

// `x·b` for symmetric `b`, computed as `(b·xᵀ)ᵀ` so sparse `b` stays on the left.
fn right_mul_sym(x: &DMatrix<f64>, b: &RealMatrix) -> DMatrix<f64> {
    left_mul(b, &x.transpose()).transpose()
}

fn is_symmetric(a: &RealMatrix) -> bool {
    match a {
        RealMatrix::Dense(d) => d.nrows() == d.ncols() && d == &d.transpose(),
        RealMatrix::Sparse(s) => s.is_symmetric(),
    }
}

fn quad_of_squares(a: &RealMatrix, w: &DVector<f64>) -> f64 {
    a.triplets().into_iter().map(|(i, j, v)| v * v * w[i] * w[j]).sum()
}

/// Data of a Gromov-Wasserstein distance between two weighted graphs.
#[derive(Debug, Clone)]
pub struct GwInstance {
    a_dist: RealMatrix,
    b_dist: RealMatrix,
    mu: DVector<f64>,
    nu: DVector<f64>,
    constant_term: f64,
}

impl GwInstance {
    pub fn new(a_dist: RealMatrix, b_dist: RealMatrix, mu: DVector<f64>, nu: DVector<f64>) -> Result<Self> {
        check_dim(a_dist.nrows(), mu.len())?;
        check_dim(b_dist.nrows(), nu.len())?;
        if !is_symmetric(&a_dist) || !is_symmetric(&b_dist) {
            return Err(Error::NotSymmetric { asymmetry: f64::NAN });
        }
        let constant_term = 0.5 * (quad_of_squares(&a_dist, &mu) + quad_of_squares(&b_dist, &nu));
        Ok(Self { a_dist, b_dist, mu, nu, constant_term })
    }

    /// Uniform marginals `1/m` and `1/n`.
    pub fn uniform(a_dist: RealMatrix, b_dist: RealMatrix) -> Result<Self> {
        let (m, n) = (a_dist.nrows(), b_dist.nrows());
        let mu = DVector::from_element(m, 1.0 / m as f64);
        let nu = DVector::from_element(n, 1.0 / n as f64);
        Self::new(a_dist, b_dist, mu, nu)
    }

    pub fn a_dist(&self) -> &RealMatrix {
        &self.a_dist
    }

    pub fn b_dist(&self) -> &RealMatrix {
        &self.b_dist
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn nu(&self) -> &DVector<f64> {
        &self.nu
    }

    /// `(μᵀ(A∘A)μ + νᵀ(B∘B)ν)/2`.
    pub fn constant_term(&self) -> f64 {
        self.constant_term
    }

    pub fn m(&self) -> usize {
        self.mu.len()
    }

    pub fn n(&self) -> usize {
        self.nu.len()
    }
}

/// `φ(X) = constant_term − ⟨X, A·X·B⟩` over vectorized couplings.
#[derive(Debug, Clone)]
pub struct GwObjective {
    inst: GwInstance,
}

pub fn gw_objective(inst: GwInstance) -> GwObjective {
    GwObjective { inst }
}

impl GwObjective {
    pub fn instance(&self) -> &GwInstance {
        &self.inst
    }

    fn axb(&self, x: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let xm = DMatrix::from_column_slice(self.inst.m(), self.inst.n(), x.as_slice());
        let axb = right_mul_sym(&left_mul(&self.inst.a_dist, &xm), &self.inst.b_dist);
        (xm, axb)
    }
}

impl ObjectiveOracle for GwObjective {
    fn dim(&self) -> usize {
        self.inst.m() * self.inst.n()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_and_gradient(x).0
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (xm, axb) = self.axb(x);
        let value = self.inst.constant_term - xm.dot(&axb);
        (value, DVector::from_column_slice((axb * -2.0).as_slice()))
    }

    fn hessian_vec(&self, _x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let (_, avb) = self.axb(v);
        Some(DVector::from_column_slice((avb * -2.0).as_slice()))
    }
}

/// Transport-constrained GW problem over couplings of `inst.mu` and `inst.nu`.
pub fn gw_problem(inst: GwInstance) -> Result<ProblemLcp> {
    let t = TransportPolytope::new(inst.mu.clone(), inst.nu.clone())?;
    let (a, b) = t.constraints();
    let name = format!("gw-{}x{}", inst.m(), inst.n());
    ProblemLcp::new(name, a.into(), b, gw_objective(inst).into())
}

/// Reduced Gromov-Wasserstein barycenter objective over stacked couplings
/// `(X_1, …, X_k)` with `X_i` of size `m × n_i` and fixed barycenter weights
/// `mu`.
///
/// With `S = Σ λ_i·X_i·C_i·X_iᵀ` and `R = 1/(μμᵀ)` entrywise,
/// `φ = Σ ½λ_i·ν_iᵀ(C_i∘C_i)ν_i − ½⟨S∘S, R⟩`.
#[derive(Debug, Clone)]
pub struct GwbcObjective {
    cs: Vec<RealMatrix>,
    lambdas: Vec<f64>,
    mu: DVector<f64>,
    nus: Vec<DVector<f64>>,
    offsets: Vec<usize>,
    constant_term: f64,
}

pub fn gwbc_objective(
    cs: Vec<RealMatrix>,
    lambdas: Vec<f64>,
    mu: DVector<f64>,
    nus: Vec<DVector<f64>>,
) -> Result<GwbcObjective> {
    let k = cs.len();
    check_dim(k, lambdas.len())?;
    check_dim(k, nus.len())?;
    if k == 0 {
        return Err(Error::InvalidArgument("barycenter needs at least one input".into()));
    }
    if lambdas.iter().any(|&l| !(l >= 0.0)) || (lambdas.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("weights must be nonnegative and sum to 1".into()));
    }
    if mu.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("barycenter marginal must be positive".into()));
    }
    let mut offsets = vec![0];
    let mut constant_term = 0.0;
    for i in 0..k {
        check_dim(cs[i].nrows(), nus[i].len())?;
        check_dim(cs[i].ncols(), nus[i].len())?;
        if !is_symmetric(&cs[i]) {
            return Err(Error::NotSymmetric { asymmetry: f64::NAN });
        }
        constant_term += 0.5 * lambdas[i] * quad_of_squares(&cs[i], &nus[i]);
        offsets.push(offsets[i] + mu.len() * nus[i].len());
    }
    Ok(GwbcObjective { cs, lambdas, mu, nus, offsets, constant_term })
}

impl GwbcObjective {
    pub fn cs(&self) -> &[RealMatrix] {
        &self.cs
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn nus(&self) -> &[DVector<f64>] {
        &self.nus
    }

    pub fn constant_term(&self) -> f64 {
        self.constant_term
    }

    fn block(&self, x: &DVector<f64>, i: usize) -> DMatrix<f64> {
        let r = self.offsets[i]..self.offsets[i + 1];
        DMatrix::from_column_slice(self.mu.len(), self.nus[i].len(), &x.as_slice()[r])
    }

    fn weights(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.mu.len(), self.mu.len(), |a, b| 1.0 / (self.mu[a] * self.mu[b]))
    }

    fn s_matrix(&self, x: &DVector<f64>) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>, DMatrix<f64>) {
        let m = self.mu.len();
        let mut s = DMatrix::zeros(m, m);
        let mut blocks = Vec::with_capacity(self.cs.len());
        let mut xcs = Vec::with_capacity(self.cs.len());
        for i in 0..self.cs.len() {
            let xi = self.block(x, i);
            let xc = right_mul_sym(&xi, &self.cs[i]);
            s += (&xc * xi.transpose()) * self.lambdas[i];
            blocks.push(xi);
            xcs.push(xc);
        }
        (blocks, xcs, s)
    }
}

impl ObjectiveOracle for GwbcObjective {
    fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let (_, _, s) = self.s_matrix(x);
        self.constant_term - 0.5 * s.component_mul(&s).dot(&self.weights())
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (_, xcs, s) = self.s_matrix(x);
        let sr = s.component_mul(&self.weights());
        let value = self.constant_term - 0.5 * s.dot(&sr);
        let mut grad = DVector::zeros(self.dim());
        for j in 0..self.cs.len() {
            // −λ_j·(Ŝ·X_j·C_jᵀ + Ŝᵀ·X_j·C_j) with C_j symmetric.
            let g = (&sr + sr.transpose()) * &xcs[j] * (-self.lambdas[j]);
            grad.rows_mut(self.offsets[j], g.len()).copy_from_slice(g.as_slice());
        }
        (value, grad)
    }

    fn hessian_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let (blocks, xcs, s) = self.s_matrix(x);
        let w = self.weights();
        let sr = s.component_mul(&w);
        let m = self.mu.len();
        let mut ds = DMatrix::zeros(m, m);
        let mut vcs = Vec::with_capacity(self.cs.len());
        for i in 0..self.cs.len() {
            let vi = self.block(v, i);
            let vc = right_mul_sym(&vi, &self.cs[i]);
            let t = &vc * blocks[i].transpose();
            ds += (&t + t.transpose()) * self.lambdas[i];
            vcs.push(vc);
        }
        let dsr = ds.component_mul(&w);
        let sym = &sr + sr.transpose();
        let dsym = &dsr + dsr.transpose();
        let mut out = DVector::zeros(self.dim());
        for j in 0..self.cs.len() {
            let h = (&dsym * &xcs[j] + &sym * &vcs[j]) * (-self.lambdas[j]);
            out.rows_mut(self.offsets[j], h.len()).copy_from_slice(h.as_slice());
        }
        Some(out)
    }
}

/// Barycenter problem: each block `X_i` couples `mu` with `nus[i]`; the
/// constraint matrix is block diagonal.
pub fn gwbc_problem(obj: GwbcObjective) -> Result<ProblemLcp> {
    let mut trip = Vec::new();
    let mut b = Vec::new();
    let (mut row0, mut col0) = (0, 0);
    for nu in &obj.nus {
        let t = TransportPolytope::new(obj.mu.clone(), nu.clone())?;
        let (a, bi) = t.constraints();
        trip.extend(a.triplets().map(|(i, j, v)| (i + row0, j + col0, v)));
        b.extend(bi.iter().copied());
        row0 += a.nrows();
        col0 += a.ncols();
    }
    let a = CscMatrix::from_triplets(row0, col0, &trip)?;
    let name = format!("gwbc-m{}-k{}", obj.mu.len(), obj.cs.len());
    ProblemLcp::new(name, a.into(), DVector::from_vec(b), obj.into())
}
