use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{CscMatrix, RealMatrix};

/// Couplings with prescribed row marginals `mu` and column marginals `nu`.
///
/// A coupling `X` (`m_rows × n_cols`) is vectorized column by column, so
/// entry `(i, j)` has index `i + j·m_rows`.
#[derive(Debug, Clone)]
pub struct TransportPolytope {
    pub mu: DVector<f64>,
    pub nu: DVector<f64>,
}

impl TransportPolytope {
    pub fn new(mu: DVector<f64>, nu: DVector<f64>) -> Result<Self> {
        let (mu_sum, nu_sum) = (mu.sum(), nu.sum());
        if (mu_sum - nu_sum).abs() > 1e-12 * mu_sum.abs().max(1.0) {
            return Err(Error::MarginalMismatch { mu_sum, nu_sum });
        }
        if mu.is_empty() || nu.is_empty() {
            return Err(Error::InvalidArgument("marginals must be nonempty".into()));
        }
        Ok(Self { mu, nu })
    }

    pub fn m_rows(&self) -> usize {
        self.mu.len()
    }

    pub fn n_cols(&self) -> usize {
        self.nu.len()
    }

    pub fn num_vars(&self) -> usize {
        self.m_rows() * self.n_cols()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.m_rows()
    }

    /// Row sums for every row, column sums for all columns but the last.
    pub fn constraints(&self) -> (CscMatrix, DVector<f64>) {
        let (m, n) = (self.m_rows(), self.n_cols());
        let mut trip = Vec::with_capacity(2 * m * n);
        for j in 0..n {
            for i in 0..m {
                trip.push((i, i + j * m, 1.0));
                if j + 1 < n {
                    trip.push((m + j, i + j * m, 1.0));
                }
            }
        }
        let a = CscMatrix::from_triplets(m + n - 1, m * n, &trip).expect("indices in range");
        let mut b = DVector::zeros(m + n - 1);
        b.rows_mut(0, m).copy_from(&self.mu);
        b.rows_mut(m, n - 1).copy_from(&self.nu.rows(0, n - 1));
        (a, b)
    }

    /// Reshapes a vectorized coupling.
    pub fn unvec(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.m_rows(), self.n_cols(), x.as_slice())
    }

    /// The independent coupling `μ·νᵀ`, vectorized.
    pub fn product_coupling(&self) -> DVector<f64> {
        let x = &self.mu * self.nu.transpose();
        DVector::from_column_slice(x.as_slice())
    }
}

/// Constraint pair `(A, b)` for couplings of `mu` and `nu`.
pub fn transport_constraints(mu: &DVector<f64>, nu: &DVector<f64>) -> Result<(RealMatrix, DVector<f64>)> {
    let t = TransportPolytope::new(mu.clone(), nu.clone())?;
    let (a, b) = t.constraints();
    Ok((a.into(), b))
}

/// Doubly stochastic `n × n` matrices.
pub fn birkhoff_constraints(n: usize) -> (RealMatrix, DVector<f64>) {
    let ones = DVector::from_element(n, 1.0);
    transport_constraints(&ones, &ones).expect("equal marginals")
}

/// The unit simplex `{x >= 0 : Σx = 1}`.
pub fn simplex_constraints(n: usize) -> (RealMatrix, DVector<f64>) {
    (RealMatrix::Dense(DMatrix::from_element(1, n, 1.0)), DVector::from_element(1, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ldl_psd;

    #[test]
    fn two_by_two_has_three_independent_rows() {
        let half = DVector::from_vec(vec![0.5, 0.5]);
        let (a, b) = transport_constraints(&half, &half).unwrap();
        assert_eq!((a.nrows(), a.ncols()), (3, 4));
        let g = a.weighted_gram(&DVector::from_element(4, 1.0));
        assert_eq!(ldl_psd(&g, 1e-12).unwrap().rank(), 3);
        assert_eq!(b.as_slice(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn one_by_one_is_the_simplex_row() {
        let one = DVector::from_vec(vec![1.0]);
        let (a, b) = transport_constraints(&one, &one).unwrap();
        assert_eq!(a.to_dense(), DMatrix::from_element(1, 1, 1.0));
        assert_eq!(b.as_slice(), &[1.0]);
        let (a, b) = simplex_constraints(4);
        assert_eq!(a.to_dense(), DMatrix::from_element(1, 4, 1.0));
        assert_eq!(b.as_slice(), &[1.0]);
    }

    #[test]
    fn product_coupling_is_feasible() {
        let mu = DVector::from_vec(vec![0.2, 0.3, 0.5]);
        let nu = DVector::from_vec(vec![0.6, 0.1, 0.3]);
        let t = TransportPolytope::new(mu.clone(), nu.clone()).unwrap();
        let (a, b) = transport_constraints(&mu, &nu).unwrap();
        let x = t.product_coupling();
        assert!((a.mul_vec(&x) - b).amax() <= 1e-14);
        let xm = t.unvec(&x);
        assert!((xm.column_sum() - &mu).amax() <= 1e-15);
    }

    #[test]
    fn mismatched_marginals_rejected() {
        let mu = DVector::from_vec(vec![0.5, 0.5]);
        let nu = DVector::from_vec(vec![0.5, 0.6]);
        assert!(matches!(transport_constraints(&mu, &nu), Err(Error::MarginalMismatch { .. })));
    }
}
