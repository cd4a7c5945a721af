//! Permutation-free `L·Diag(d)·Lᵀ` factorization of symmetric positive
//! semidefinite matrices.
//!
//! Pivots that fall below a relative threshold are set to exactly zero and
//! the corresponding column of `L` below the diagonal is cleared. Because no
//! rows or columns are exchanged, the factors are a deterministic function of
//! the constraint order, and the set of nonzero pivots reveals the rank.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative cutoff separating zero pivots from positive ones.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-12;
/// Default relative tolerance for the a posteriori residual check in
/// [`ldl_pinv_solve`].
pub const DEFAULT_SOLVE_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-10;

/// Factors `S = L·Diag(d)·Lᵀ` with `L` unit lower triangular and `d >= 0`.
#[derive(Debug, Clone)]
pub struct LdlFactors {
    l: DMatrix<f64>,
    d: DVector<f64>,
    pivot_support: Vec<usize>,
    is_pivot: Vec<bool>,
}

impl LdlFactors {
    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    /// Indices with a positive pivot, in increasing order.
    pub fn pivot_support(&self) -> &[usize] {
        &self.pivot_support
    }

    /// Indices whose pivot was thresholded to zero, in increasing order.
    pub fn zero_pivots(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| !self.is_pivot[i]).collect()
    }

    pub fn is_pivot(&self, i: usize) -> bool {
        self.is_pivot[i]
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn rank(&self) -> usize {
        self.pivot_support.len()
    }

    /// Smallest positive pivot, or `None` when every pivot is zero.
    pub fn smallest_pivot(&self) -> Option<f64> {
        self.pivot_support
            .iter()
            .map(|&i| self.d[i])
            .min_by(f64::total_cmp)
    }

    /// `L⁻¹·v` by forward substitution.
    pub fn solve_l(&self, v: &DVector<f64>) -> DVector<f64> {
        let m = self.dim();
        let mut z = v.clone();
        for j in 0..m {
            let zj = z[j];
            if zj != 0.0 {
                let col = self.l.column(j);
                for i in j + 1..m {
                    z[i] -= col[i] * zj;
                }
            }
        }
        z
    }

    /// `L⁻ᵀ·v` by backward substitution.
    pub fn solve_lt(&self, v: &DVector<f64>) -> DVector<f64> {
        let m = self.dim();
        let mut z = v.clone();
        for j in (0..m).rev() {
            let col = self.l.column(j);
            let mut s = z[j];
            for i in j + 1..m {
                s -= col[i] * z[i];
            }
            z[j] = s;
        }
        z
    }

    /// `Lᵀ·v`.
    pub fn mul_lt(&self, v: &DVector<f64>) -> DVector<f64> {
        self.l.tr_mul(v)
    }

    /// `L·v`.
    pub fn mul_l(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.l * v
    }

    /// `L·Diag(d)·Lᵀ·v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let t = self.mul_lt(v).component_mul(&self.d);
        self.mul_l(&t)
    }

    /// `L⁻ᵀ·Diag(d)⁺·L⁻¹·rhs`, inverting only the positive pivots.
    pub fn pinv_apply(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut z = self.solve_l(rhs);
        for i in 0..self.dim() {
            z[i] = if self.is_pivot[i] { z[i] / self.d[i] } else { 0.0 };
        }
        self.solve_lt(&z)
    }

    /// Dense reconstruction `L·Diag(d)·Lᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut ld = self.l.clone();
        for (j, mut col) in ld.column_iter_mut().enumerate() {
            col *= self.d[j];
        }
        &ld * self.l.transpose()
    }
}

/// Factors a symmetric positive semidefinite matrix without pivoting.
///
/// A pivot at or below `zero_threshold·max(1, max_i S_ii)`, or inside the
/// rounding bound accumulated by the elimination so far, becomes exactly
/// zero. The largest diagonal entry bounds every pivot of a PSD matrix, so the
/// cutoff is relative to the largest possible pivot.
pub fn ldl_psd(s: &DMatrix<f64>, zero_threshold: f64) -> Result<LdlFactors> {
    let m = s.nrows();
    if s.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, found: s.ncols() });
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let max_abs = s.amax();
    let mut asymmetry = 0.0_f64;
    for j in 0..m {
        for i in j + 1..m {
            asymmetry = asymmetry.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    if asymmetry > SYMMETRY_TOL * (1.0 + max_abs) {
        return Err(Error::NotSymmetric { asymmetry });
    }

    let scale = (0..m).map(|i| s[(i, i)]).fold(1.0_f64, f64::max);
    let cutoff = zero_threshold * scale;

    // Right-looking outer-product elimination on the lower triangle.
    let mut work = s.clone();
    let mut l = DMatrix::identity(m, m);
    let mut d = DVector::zeros(m);
    let mut is_pivot = vec![false; m];
    let mut col = vec![0.0; m];
    // First-order rounding bound on each remaining diagonal entry. Without
    // pivoting a small accepted pivot d_j scales its column of L up, and the
    // update l_ij²·d_j it feeds into entry i inherits both the error of d_j
    // (through l_ij²) and that of the off-diagonal entry (through 2|l_ij|).
    let root_diag: Vec<f64> = (0..m).map(|i| s[(i, i)].max(0.0).sqrt()).collect();
    let unit = 4.0 * m as f64 * f64::EPSILON;
    let mut noise = vec![0.0_f64; m];
    for j in 0..m {
        let dj = work[(j, j)];
        let tol = cutoff.max(noise[j]);
        if dj < -tol {
            return Err(Error::IndefiniteMatrix { index: j, pivot: dj });
        }
        if dj <= tol {
            continue;
        }
        d[j] = dj;
        is_pivot[j] = true;
        let err_j = noise[j] + unit * s[(j, j)].abs();
        for i in j + 1..m {
            col[i] = work[(i, j)] / dj;
            l[(i, j)] = col[i];
            noise[i] += col[i] * col[i] * err_j + 2.0 * unit * col[i].abs() * root_diag[i] * root_diag[j];
        }
        for k in j + 1..m {
            let f = col[k] * dj;
            if f == 0.0 {
                continue;
            }
            let mut wk = work.column_mut(k);
            for i in k..m {
                wk[i] -= col[i] * f;
            }
        }
    }
    let pivot_support = (0..m).filter(|&i| is_pivot[i]).collect();
    Ok(LdlFactors { l, d, pivot_support, is_pivot })
}

/// Particular solution `L⁻ᵀ·Diag(d)⁺·L⁻¹·rhs` of `L·Diag(d)·Lᵀ·λ = rhs`,
/// rejected when the residual exceeds `DEFAULT_SOLVE_TOL·(1+‖rhs‖)`.
pub fn ldl_pinv_solve(f: &LdlFactors, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    ldl_pinv_solve_tol(f, rhs, DEFAULT_SOLVE_TOL)
}

pub fn ldl_pinv_solve_tol(f: &LdlFactors, rhs: &DVector<f64>, solve_tol: f64) -> Result<DVector<f64>> {
    if rhs.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: rhs.len() });
    }
    let sol = f.pinv_apply(rhs);
    let residual = (f.apply(&sol) - rhs).norm();
    let bound = solve_tol * (1.0 + rhs.norm());
    if residual > bound || !residual.is_finite() {
        return Err(Error::InconsistentSystem { residual, bound });
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn identity_factors_trivially() {
        let f = ldl_psd(&DMatrix::identity(3, 3), DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(f.l(), &DMatrix::<f64>::identity(3, 3));
        assert_eq!(f.d().as_slice(), &[1.0, 1.0, 1.0]);
        assert_eq!(f.rank(), 3);
    }

    #[test]
    fn zero_matrix_has_no_pivots() {
        let f = ldl_psd(&DMatrix::zeros(2, 2), DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(f.l(), &DMatrix::<f64>::identity(2, 2));
        assert_eq!(f.d().as_slice(), &[0.0, 0.0]);
        assert!(f.pivot_support().is_empty());
        assert_eq!(f.smallest_pivot(), None);
    }

    #[test]
    fn two_by_two_matches_hand_factorization() {
        let s = dmatrix![4.0, 2.0; 2.0, 2.0];
        let f = ldl_psd(&s, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(f.l(), &dmatrix![1.0, 0.0; 0.5, 1.0]);
        assert_eq!(f.d().as_slice(), &[4.0, 1.0]);
        assert!((f.reconstruct() - s).norm() < 1e-15);
    }

    #[test]
    fn rank_one_case_zeroes_second_pivot() {
        let s = dmatrix![1.0, 1.0; 1.0, 1.0];
        let f = ldl_psd(&s, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(f.l(), &dmatrix![1.0, 0.0; 1.0, 1.0]);
        assert_eq!(f.d().as_slice(), &[1.0, 0.0]);
        assert_eq!(f.pivot_support(), &[0]);
        assert_eq!(f.zero_pivots(), vec![1]);
        assert!((f.reconstruct() - s).norm() < 1e-15);
    }

    #[test]
    fn zero_pivot_column_is_cleared() {
        // Second row duplicates the first; the third is independent.
        let s = dmatrix![1.0, 1.0, 0.5; 1.0, 1.0, 0.5; 0.5, 0.5, 2.0];
        let f = ldl_psd(&s, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(f.pivot_support(), &[0, 2]);
        assert_eq!(f.l()[(2, 1)], 0.0);
        assert!((f.reconstruct() - s).norm() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let s = dmatrix![1.0, 2.0; 0.0, 1.0];
        assert!(matches!(ldl_psd(&s, 1e-12), Err(Error::NotSymmetric { .. })));
        let s = dmatrix![1.0, 0.0; 0.0, -1.0];
        assert!(matches!(ldl_psd(&s, 1e-12), Err(Error::IndefiniteMatrix { index: 1, .. })));
        let s = dmatrix![1.0, 2.0; 2.0, 1.0];
        assert!(matches!(ldl_psd(&s, 1e-12), Err(Error::IndefiniteMatrix { .. })));
    }

    #[test]
    fn rank_deficient_gram_with_small_pivot() {
        // Rank 2 with a pivot of 1e-6, so L picks up entries of size 1e3. The
        // stored S is rank 2 only up to its rounding, which shows in the third
        // pivot at about ε·1e6; that pivot is dropped, not reported as
        // indefinite.
        let f = dmatrix![1.0, 0.0; 1.0, 1e-3; 2.0, 1.0];
        let s = &f * f.transpose();
        let out = ldl_psd(&s, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(out.pivot_support(), &[0, 1]);
        assert!((out.reconstruct() - &s).amax() < 1e-9);
    }

    #[test]
    fn pinv_solve_examples() {
        let f = ldl_psd(&DMatrix::identity(3, 3), 1e-12).unwrap();
        let rhs = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(ldl_pinv_solve(&f, &rhs).unwrap(), rhs);

        let f = ldl_psd(&dmatrix![1.0, 1.0; 1.0, 1.0], 1e-12).unwrap();
        let sol = ldl_pinv_solve(&f, &DVector::from_vec(vec![2.0, 2.0])).unwrap();
        assert_eq!(sol.as_slice(), &[2.0, 0.0]);
        assert_eq!(f.apply(&sol).as_slice(), &[2.0, 2.0]);

        let err = ldl_pinv_solve(&f, &DVector::from_vec(vec![1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::InconsistentSystem { .. }));
    }

    #[test]
    fn triangular_solves_invert_products() {
        let s = dmatrix![4.0, 2.0, 1.0; 2.0, 3.0, 0.5; 1.0, 0.5, 2.0];
        let f = ldl_psd(&s, 1e-12).unwrap();
        let v = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        assert!((f.mul_l(&f.solve_l(&v)) - &v).norm() < 1e-14);
        assert!((f.mul_lt(&f.solve_lt(&v)) - &v).norm() < 1e-14);
        assert!((&s * f.pinv_apply(&v) - &v).norm() < 1e-13);
    }
}
