use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{rng, simplex_constraints};
use crate::error::{Error, Result};
use crate::linalg::{CscMatrix, RealMatrix};
use crate::model::{ProblemLcp, QuadraticObjective};

/// Random strictly convex QP with eigenvalues of `Q` log-uniform in `[κ, 1]`.
///
/// Draw order: eigenvalues, the symmetrized Gaussian matrix whose
/// eigenvectors rotate them, the unconstrained minimizer `x1` (`c = −Q·x1`),
/// the uniform constraint matrix, and the interior point `x2` (`b = A·x2`).
/// Matrices are filled column by column.
pub fn gen_random_cqp(n: usize, m: usize, kappa: f64, seed: u64) -> Result<ProblemLcp> {
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!("need 0 < m < n, got m = {m}, n = {n}")));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidArgument(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    let mut g = rng(seed);
    let eigs = DVector::from_fn(n, |_, _| kappa.powf(1.0 - g.random::<f64>()));
    let s = DMatrix::from_iterator(n, n, (0..n * n).map(|_| g.sample::<f64, _>(StandardNormal)));
    let s = &s + s.transpose();
    let p = SymmetricEigen::new(s).eigenvectors;
    let mut pd = p.clone();
    for (j, mut col) in pd.column_iter_mut().enumerate() {
        col *= eigs[j];
    }
    let mut q = pd * p.transpose();
    for j in 0..n {
        for i in j + 1..n {
            let v = 0.5 * (q[(i, j)] + q[(j, i)]);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    let x1 = DVector::from_iterator(n, (0..n).map(|_| g.sample::<f64, _>(StandardNormal)));
    let c = -(&q * &x1);
    let a = DMatrix::from_iterator(m, n, (0..m * n).map(|_| g.random::<f64>()));
    let x2 = DVector::from_iterator(n, (0..n).map(|_| g.random::<f64>()));
    let b = &a * &x2;
    let name = format!("cqp-n{n}-m{m}-k{kappa}-s{seed}");
    ProblemLcp::new(name, RealMatrix::Dense(a), b, QuadraticObjective::new(RealMatrix::Dense(q), c).into())
}

/// `min ‖x − v‖²/2` over the unit simplex, written as `xᵀx/2 − vᵀx`.
pub fn simplex_projection_problem(v: &DVector<f64>) -> Result<ProblemLcp> {
    let n = v.len();
    let (a, b) = simplex_constraints(n);
    let ident: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
    let q = CscMatrix::from_triplets(n, n, &ident)?;
    ProblemLcp::new("simplex-projection", a, b, QuadraticObjective::new(q.into(), -v).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ObjectiveOracle, Objective};

    fn q_of(p: &ProblemLcp) -> DMatrix<f64> {
        match p.objective() {
            Objective::Quadratic(o) => o.q().unwrap().to_dense(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn unit_kappa_gives_identity_hessian() {
        let p = gen_random_cqp(12, 3, 1.0, 7).unwrap();
        let q = q_of(&p);
        assert!((q - DMatrix::<f64>::identity(12, 12)).amax() < 1e-12);
    }

    #[test]
    fn same_seed_is_bit_reproducible() {
        let p1 = gen_random_cqp(20, 5, 0.1, 3).unwrap();
        let p2 = gen_random_cqp(20, 5, 0.1, 3).unwrap();
        assert_eq!(p1.a().to_dense(), p2.a().to_dense());
        assert_eq!(p1.b(), p2.b());
        assert_eq!(q_of(&p1), q_of(&p2));
        let p3 = gen_random_cqp(20, 5, 0.1, 4).unwrap();
        assert_ne!(p1.b(), p3.b());
    }

    #[test]
    fn simplex_projection_gradient() {
        let v = DVector::from_vec(vec![0.5, 0.2, -0.3]);
        let p = simplex_projection_problem(&v).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(p.objective().gradient(&x).as_slice(), &[0.5, -0.2, 0.3]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(gen_random_cqp(5, 5, 0.1, 0).is_err());
        assert!(gen_random_cqp(5, 2, 0.0, 0).is_err());
    }
}
