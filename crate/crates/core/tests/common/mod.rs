//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the solver machinery; the oracles work from
//! dense linear algebra, sorting and brute-force enumeration.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(g: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| g.sample(StandardNormal))
}

pub fn normal_mat(g: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| g.sample(StandardNormal))
}

/// Euclidean projection onto `{x >= 0, Σx = s}` by sorting.
pub fn simplex_projection_sort(v: &DVector<f64>, s: f64) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let cand = (cum - s) / (k + 1) as f64;
        if uk - cand > 0.0 {
            tau = cand;
        }
    }
    v.map(|t| (t - tau).max(0.0))
}

/// Least-squares projection of `v` onto `{A x = b}` through the SVD
/// pseudo-inverse; `None` when the system is inconsistent.
pub fn affine_projection(v: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if a.ncols() == 0 {
        return (b.norm() <= 1e-12).then(|| DVector::zeros(0));
    }
    let pinv = a.clone().pseudo_inverse(1e-12).ok()?;
    let x = v - &pinv * (a * v - b);
    ((a * &x - b).norm() <= 1e-10 * (1.0 + b.norm())).then_some(x)
}

/// Projection onto `{A x = b, x >= 0}` by enumerating every candidate zero
/// set, projecting onto the remaining affine slice and keeping the nearest
/// nonnegative candidate. Exponential in `n`; meant for `n <= 12`.
pub fn polytope_projection_enum(v: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    assert!(n <= 16);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << n) {
        let free: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) == 0).collect();
        let af = a.select_columns(&free);
        let vf = DVector::from_iterator(free.len(), free.iter().map(|&j| v[j]));
        let Some(xf) = affine_projection(&vf, &af, b) else { continue };
        if xf.iter().any(|&t| t < -1e-12) {
            continue;
        }
        let mut x = DVector::zeros(n);
        for (k, &j) in free.iter().enumerate() {
            x[j] = xf[k].max(0.0);
        }
        let d = (&x - v).norm();
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    best.expect("nonempty polytope").1
}

/// Estimated distance from `z0` to `{z : A(z∘z) = b}`: length of the
/// Gauss-Newton path with minimum-norm steps through the SVD pseudo-inverse
/// of `2·A·Diag(z)`. `None` when the iteration does not reach feasibility.
pub fn gn_distance(z0: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Option<f64> {
    let mut z = z0.clone();
    let target = 1e-15 * (1.0 + b.norm());
    for _ in 0..200 {
        let r = b - a * z.component_mul(&z);
        if r.norm() <= target {
            return Some((&z - z0).norm());
        }
        let mut j = a.clone();
        for (k, mut col) in j.column_iter_mut().enumerate() {
            col *= 2.0 * z[k];
        }
        let svd = j.svd(true, true);
        let smax = svd.singular_values.max();
        let step = svd.solve(&r, 1e-13 * smax.max(1e-300)).ok()?;
        z += step;
        if !z.iter().all(|t| t.is_finite()) {
            return None;
        }
    }
    let r = b - a * z.component_mul(&z);
    (r.norm() <= 1e3 * target).then(|| (&z - z0).norm())
}

/// Ratios `dist(curve(t)) / t^order` at `t = 1e-1 .. 1e-4`.
pub fn curve_ratios(
    curve: impl Fn(f64) -> DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    order: i32,
) -> Vec<f64> {
    [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&t| gn_distance(&curve(t), a, b).map_or(f64::INFINITY, |d| d / t.powi(order)))
        .collect()
}

/// True when every decade reduces the ratio at least threefold, or the
/// distance is already at the rounding floor.
pub fn decays_per_decade(ratios: &[f64], floor: &[f64]) -> bool {
    ratios.windows(2).zip(floor.iter().skip(1)).all(|(w, &fl)| w[1] * 3.0 <= w[0] || w[1] <= fl)
}

/// Doubly stochastic positive `k × k` matrix by Sinkhorn balancing.
pub fn sinkhorn_block(g: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(k, k, |_, _| g.random_range(0.2..1.0));
    for _ in 0..10_000 {
        for mut r in m.row_iter_mut() {
            let s = r.sum();
            r /= s;
        }
        for mut c in m.column_iter_mut() {
            let s = c.sum();
            c /= s;
        }
        let err = m.row_iter().map(|r| (r.sum() - 1.0f64).abs()).fold(0.0, f64::max);
        if err <= 1e-15 {
            break;
        }
    }
    m
}

/// Doubly stochastic `n × n` matrix with `k` planted square blocks under
/// random row and column permutations. Returns the matrix and the block
/// label of every row and every column.
pub fn planted_birkhoff(g: &mut ChaCha8Rng, n: usize, k: usize) -> (DMatrix<f64>, Vec<usize>, Vec<usize>) {
    assert!(k >= 1 && k <= n);
    let mut sizes = vec![1usize; k];
    for _ in 0..n - k {
        let i = g.random_range(0..k);
        sizes[i] += 1;
    }
    let mut rows: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    rows.shuffle(g);
    cols.shuffle(g);
    let mut x = DMatrix::zeros(n, n);
    let mut row_label = vec![0; n];
    let mut col_label = vec![0; n];
    let mut off = 0;
    for (lab, &s) in sizes.iter().enumerate() {
        let blk = sinkhorn_block(g, s);
        for i in 0..s {
            row_label[rows[off + i]] = lab;
            col_label[cols[off + i]] = lab;
            for j in 0..s {
                x[(rows[off + i], cols[off + j])] = blk[(i, j)];
            }
        }
        off += s;
    }
    (x, row_label, col_label)
}

/// Canonical form of a block labelling: the sets of rows and columns of
/// each block, sorted.
pub fn partition_key(row_label: &[usize], col_label: &[usize]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let k = row_label.iter().copied().max().map_or(0, |v| v + 1);
    let mut out: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|l| {
            (
                (0..row_label.len()).filter(|&i| row_label[i] == l).collect(),
                (0..col_label.len()).filter(|&j| col_label[j] == l).collect(),
            )
        })
        .collect();
    out.sort();
    out
}

/// Dense Birkhoff constraints in the same row order as the library: row sums,
/// then all column sums but the last. Column-major vectorization.
pub fn birkhoff_dense(n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let m = 2 * n - 1;
    let mut a = DMatrix::zeros(m, n * n);
    for j in 0..n {
        for i in 0..n {
            a[(i, i + j * n)] = 1.0;
            if j + 1 < n {
                a[(n + j, i + j * n)] = 1.0;
            }
        }
    }
    (a, DVector::from_element(m, 1.0))
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let mut out = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = f(&xp);
        xp[i] = xi - h;
        let fm = f(&xp);
        xp[i] = xi;
        out[i] = (fp - fm) / (2.0 * h);
    }
    out
}

/// Random symmetric matrix with zero diagonal and nonnegative entries.
pub fn random_distance(g: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let v: f64 = g.random_range(0.0..2.0);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Random probability vector with entries bounded away from zero.
pub fn random_marginal(g: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| g.random_range(0.5..1.5));
    let s = v.sum();
    v / s
}

/// A degenerate linear program whose optimal point sits on a singular
/// stratum: the support columns repeat two directions, so `A_S` has rank 2
/// while `A` has `m = 4` rows.
pub struct DegenerateLp {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub x: DVector<f64>,
    /// A multiplier with `c − Aᵀλ >= 0` and equality on the support, when the
    /// instance was built to admit one.
    pub lambda_star: DVector<f64>,
    pub support: Vec<usize>,
}

/// Builds an instance with `n = 20`: ten support columns copying two base
/// columns with positive scalings and ten generic columns. With
/// `slack_floor >= 0` the reduced costs at `lambda_star` are nonnegative.
/// With a negative floor the last column is the negation of the one before
/// it and their reduced costs sum to about `slack_floor`, so no multiplier
/// on the stratum is dual feasible.
pub fn degenerate_lp(g: &mut ChaCha8Rng, slack_floor: f64) -> DegenerateLp {
    let (m, n, ns) = (4, 20, 10);
    let base = normal_mat(g, m, 2);
    let mut a = DMatrix::zeros(m, n);
    for j in 0..ns {
        let s: f64 = g.random_range(0.5..2.0);
        a.set_column(j, &(base.column(j % 2) * s));
    }
    for j in ns..n {
        a.set_column(j, &normal_vec(g, m));
    }
    if slack_floor < 0.0 {
        let prev = -a.column(n - 2);
        a.set_column(n - 1, &prev);
    }
    let mut x = DVector::zeros(n);
    for j in 0..ns {
        x[j] = g.random_range(0.5..1.5);
    }
    let b = &a * &x;
    let lambda_star = normal_vec(g, m) * 3.0;
    let mut c = a.transpose() * &lambda_star;
    for j in ns..n {
        c[j] += g.random_range(0.0..0.2);
    }
    if slack_floor < 0.0 {
        c[n - 1] = (a.transpose() * &lambda_star)[n - 1] + slack_floor - 0.2;
    }
    DegenerateLp { a, b, c, x, lambda_star, support: (0..ns).collect() }
}

/// Random PSD `n × n` matrix of the given rank, returned with the factor
/// `G` such that `S = G·Gᵀ`.
pub fn random_psd(g: &mut ChaCha8Rng, n: usize, rank: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let f = normal_mat(g, n, rank);
    let s = &f * f.transpose();
    (s, f)
}

/// `Σ_k g_k·g_kᵀ` accumulated over the columns of `f` in the given order.
pub fn assemble_outer(f: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    let n = f.nrows();
    let mut s = DMatrix::zeros(n, n);
    for &k in order {
        let col = f.column(k);
        for j in 0..n {
            for i in 0..n {
                s[(i, j)] += col[i] * col[j];
            }
        }
    }
    s
}
