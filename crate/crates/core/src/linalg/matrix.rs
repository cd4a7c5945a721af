use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Density below which [`RealMatrix::auto`] stores a matrix in CSC form.
pub const SPARSE_DENSITY: f64 = 0.05;

/// Compressed sparse column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= nrows {
                return Err(Error::DimensionMismatch { expected: nrows, found: i + 1 });
            }
            if j >= ncols {
                return Err(Error::DimensionMismatch { expected: ncols, found: j + 1 });
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteInput);
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|&(i, j, _)| (j, i));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut out = Self { nrows, ncols, col_ptr, row_idx, values };
        out.drop_zeros();
        Ok(out)
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut col_ptr = Vec::with_capacity(a.ncols() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in a.column_iter() {
            for (i, &v) in col.iter().enumerate() {
                if v != 0.0 {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self { nrows: a.nrows(), ncols: a.ncols(), col_ptr, row_idx, values }
    }

    fn drop_zeros(&mut self) {
        let mut ptr = vec![0usize; self.ncols + 1];
        let mut k = 0;
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                if self.values[p] != 0.0 {
                    self.row_idx[k] = self.row_idx[p];
                    self.values[k] = self.values[p];
                    k += 1;
                }
            }
            ptr[j + 1] = k;
        }
        self.row_idx.truncate(k);
        self.values.truncate(k);
        self.col_ptr = ptr;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row indices and values of column `j`.
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    /// Iterates `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            let (rows, vals) = self.column(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.nrows);
        for j in 0..self.ncols {
            let vj = v[j];
            if vj == 0.0 {
                continue;
            }
            let (rows, vals) = self.column(j);
            for (&i, &a) in rows.iter().zip(vals) {
                out[i] += a * vj;
            }
        }
        out
    }

    pub fn tr_mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.ncols, |j, _| {
            let (rows, vals) = self.column(j);
            rows.iter().zip(vals).map(|(&i, &a)| a * v[i]).sum()
        })
    }

    /// Sparse times dense, `self · b`.
    pub fn mul_dense(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, b.ncols());
        for j in 0..self.ncols {
            let (rows, vals) = self.column(j);
            if rows.is_empty() {
                continue;
            }
            for k in 0..b.ncols() {
                let bjk = b[(j, k)];
                if bjk == 0.0 {
                    continue;
                }
                let mut oc = out.column_mut(k);
                for (&i, &a) in rows.iter().zip(vals) {
                    oc[i] += a * bjk;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            out[(i, j)] = v;
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && {
            let t = self.transpose();
            t == *self
        }
    }

    pub fn transpose(&self) -> CscMatrix {
        let trip: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        CscMatrix::from_triplets(self.ncols, self.nrows, &trip).expect("transpose of valid matrix")
    }
}

/// A matrix stored densely or in CSC form behind one interface.
#[derive(Debug, Clone)]
pub enum RealMatrix {
    Dense(DMatrix<f64>),
    Sparse(CscMatrix),
}

impl RealMatrix {
    /// Chooses the sparse representation when fewer than 5% of entries are
    /// nonzero.
    pub fn auto(a: DMatrix<f64>) -> Self {
        let total = (a.nrows() * a.ncols()).max(1);
        let nnz = a.iter().filter(|v| **v != 0.0).count();
        if (nnz as f64) < SPARSE_DENSITY * total as f64 {
            RealMatrix::Sparse(CscMatrix::from_dense(&a))
        } else {
            RealMatrix::Dense(a)
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            RealMatrix::Dense(a) => a.nrows(),
            RealMatrix::Sparse(a) => a.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            RealMatrix::Dense(a) => a.ncols(),
            RealMatrix::Sparse(a) => a.ncols(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            RealMatrix::Dense(a) => a.iter().filter(|v| **v != 0.0).count(),
            RealMatrix::Sparse(a) => a.nnz(),
        }
    }

    pub fn density(&self) -> f64 {
        self.nnz() as f64 / ((self.nrows() * self.ncols()).max(1)) as f64
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            RealMatrix::Dense(a) => a * v,
            RealMatrix::Sparse(a) => a.mul_vec(v),
        }
    }

    pub fn tr_mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            RealMatrix::Dense(a) => a.tr_mul(v),
            RealMatrix::Sparse(a) => a.tr_mul_vec(v),
        }
    }

    /// Column `j` as a dense vector.
    pub fn column(&self, j: usize) -> DVector<f64> {
        match self {
            RealMatrix::Dense(a) => a.column(j).into_owned(),
            RealMatrix::Sparse(a) => {
                let mut out = DVector::zeros(a.nrows());
                let (rows, vals) = a.column(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    out[i] = v;
                }
                out
            }
        }
    }

    /// Dense submatrix made of the listed columns.
    pub fn select_columns(&self, cols: &[usize]) -> DMatrix<f64> {
        match self {
            RealMatrix::Dense(a) => a.select_columns(cols),
            RealMatrix::Sparse(a) => {
                let mut out = DMatrix::zeros(a.nrows(), cols.len());
                for (k, &j) in cols.iter().enumerate() {
                    let (rows, vals) = a.column(j);
                    for (&i, &v) in rows.iter().zip(vals) {
                        out[(i, k)] = v;
                    }
                }
                out
            }
        }
    }

    /// `A·Diag(w)·Aᵀ`, exactly symmetric. Columns with `w_j = 0` are skipped.
    pub fn weighted_gram(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let m = self.nrows();
        match self {
            RealMatrix::Dense(a) => {
                let cols: Vec<usize> = (0..a.ncols()).filter(|&j| w[j] != 0.0).collect();
                let mut g = if cols.len() == a.ncols() {
                    let mut scaled = a.clone();
                    for (j, mut c) in scaled.column_iter_mut().enumerate() {
                        c *= w[j];
                    }
                    scaled * a.transpose()
                } else {
                    let sub = a.select_columns(&cols);
                    let mut scaled = sub.clone();
                    for (k, mut c) in scaled.column_iter_mut().enumerate() {
                        c *= w[cols[k]];
                    }
                    scaled * sub.transpose()
                };
                for j in 0..m {
                    for i in j + 1..m {
                        g[(j, i)] = g[(i, j)];
                    }
                }
                g
            }
            RealMatrix::Sparse(a) => {
                let mut g = DMatrix::zeros(m, m);
                for j in 0..a.ncols() {
                    let wj = w[j];
                    if wj == 0.0 {
                        continue;
                    }
                    let (rows, vals) = a.column(j);
                    for (p, &ip) in rows.iter().enumerate() {
                        let f = wj * vals[p];
                        for (q, &iq) in rows.iter().enumerate() {
                            g[(iq, ip)] += f * vals[q];
                        }
                    }
                }
                g
            }
        }
    }

    /// Diagonal of `A·Diag(w)·Aᵀ`.
    pub fn weighted_gram_diagonal(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.nrows());
        match self {
            RealMatrix::Dense(a) => {
                for (j, col) in a.column_iter().enumerate() {
                    if w[j] != 0.0 {
                        for i in 0..a.nrows() {
                            out[i] += w[j] * col[i] * col[i];
                        }
                    }
                }
            }
            RealMatrix::Sparse(a) => {
                for j in 0..a.ncols() {
                    if w[j] != 0.0 {
                        let (rows, vals) = a.column(j);
                        for (&i, &v) in rows.iter().zip(vals) {
                            out[i] += w[j] * v * v;
                        }
                    }
                }
            }
        }
        out
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0_f64; self.nrows()];
        match self {
            RealMatrix::Dense(a) => {
                for col in a.column_iter() {
                    for (i, v) in col.iter().enumerate() {
                        rows[i] += v.abs();
                    }
                }
            }
            RealMatrix::Sparse(a) => {
                for (i, _, v) in a.triplets() {
                    rows[i] += v.abs();
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            RealMatrix::Dense(a) => a.clone(),
            RealMatrix::Sparse(a) => a.to_dense(),
        }
    }

    /// Nonzero entries as `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        match self {
            RealMatrix::Dense(a) => {
                let mut out = Vec::new();
                for (j, col) in a.column_iter().enumerate() {
                    for (i, &v) in col.iter().enumerate() {
                        if v != 0.0 {
                            out.push((i, j, v));
                        }
                    }
                }
                out
            }
            RealMatrix::Sparse(a) => a.triplets().collect(),
        }
    }

    /// Applies a row permutation: row `k` of the result is row `perm[k]`.
    pub fn permute_rows(&self, perm: &[usize]) -> RealMatrix {
        match self {
            RealMatrix::Dense(a) => RealMatrix::Dense(a.select_rows(perm)),
            RealMatrix::Sparse(a) => {
                let mut inv = vec![0; perm.len()];
                for (k, &p) in perm.iter().enumerate() {
                    inv[p] = k;
                }
                let trip: Vec<_> = a.triplets().map(|(i, j, v)| (inv[i], j, v)).collect();
                RealMatrix::Sparse(CscMatrix::from_triplets(a.nrows(), a.ncols(), &trip).expect("valid permutation"))
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            RealMatrix::Dense(a) => a.iter().all(|v| v.is_finite()),
            RealMatrix::Sparse(a) => a.values.iter().all(|v| v.is_finite()),
        }
    }
}

impl From<DMatrix<f64>> for RealMatrix {
    fn from(a: DMatrix<f64>) -> Self {
        RealMatrix::Dense(a)
    }
}

impl From<CscMatrix> for RealMatrix {
    fn from(a: CscMatrix) -> Self {
        RealMatrix::Sparse(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn sample() -> DMatrix<f64> {
        dmatrix![1.0, 0.0, 2.0, 0.0; 0.0, 3.0, 0.0, -1.0; 4.0, 0.0, 0.0, 5.0]
    }

    #[test]
    fn sparse_and_dense_agree() {
        let a = sample();
        let d = RealMatrix::Dense(a.clone());
        let s = RealMatrix::Sparse(CscMatrix::from_dense(&a));
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let u = DVector::from_vec(vec![0.3, 1.0, -1.0]);
        assert_eq!(d.mul_vec(&v), s.mul_vec(&v));
        assert_eq!(d.tr_mul_vec(&u), s.tr_mul_vec(&u));
        let w = DVector::from_vec(vec![1.0, 0.0, 2.0, 0.5]);
        assert!((d.weighted_gram(&w) - s.weighted_gram(&w)).amax() < 1e-14);
        assert_eq!(d.weighted_gram_diagonal(&w), s.weighted_gram(&w).diagonal());
        assert_eq!(d.norm_inf(), 9.0);
        assert_eq!(s.norm_inf(), 9.0);
        assert_eq!(s.to_dense(), a);
        assert_eq!(d.select_columns(&[3, 0]), s.select_columns(&[3, 0]));
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0), (1, 1, -1.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.to_dense(), dmatrix![3.0, 0.0; 0.0, 0.0]);
        assert!(CscMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn auto_picks_sparse_for_low_density() {
        let mut a = DMatrix::zeros(10, 30);
        a[(0, 0)] = 1.0;
        assert!(matches!(RealMatrix::auto(a), RealMatrix::Sparse(_)));
        assert!(matches!(RealMatrix::auto(sample()), RealMatrix::Dense(_)));
    }

    #[test]
    fn sparse_dense_product() {
        let a = sample();
        let s = CscMatrix::from_dense(&a);
        let b = DMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64);
        assert_eq!(s.mul_dense(&b), &a * &b);
        assert_eq!(s.transpose().to_dense(), a.transpose());
    }

    #[test]
    fn row_permutation() {
        let a = sample();
        let s = RealMatrix::Sparse(CscMatrix::from_dense(&a));
        let p = [2, 0, 1];
        assert_eq!(s.permute_rows(&p).to_dense(), a.select_rows(&p));
    }
}
