use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, Poisson};

use super::rng;
use crate::error::{Error, Result};
use crate::linalg::CscMatrix;

/// A source graph and a noisy copy of it.
#[derive(Debug, Clone)]
pub struct KnnGraphPair {
    /// Symmetric weighted adjacency of the source graph.
    pub source: CscMatrix,
    /// Symmetric weighted adjacency of the target graph; its leading block
    /// holds the source edges.
    pub target: CscMatrix,
    /// Number of neighbours drawn for each source vertex.
    pub selections: Vec<usize>,
    /// Directed `(from, to, weight)` draws before symmetrization.
    pub source_edges: Vec<(usize, usize, f64)>,
    pub target_edges: Vec<(usize, usize, f64)>,
}

const WEIGHT_MEAN: f64 = 10.0;

fn draw_neighbours(
    g: &mut super::Rng,
    v: usize,
    pool: usize,
    mean_degree: f64,
    weight: &Poisson<f64>,
    edges: &mut Vec<(usize, usize, f64)>,
) -> usize {
    let k = if mean_degree > 0.0 {
        Poisson::new(mean_degree).expect("positive mean").sample(g) as usize
    } else {
        0
    };
    let k = k.min(pool - 1);
    for u in sample(g, pool - 1, k) {
        let u = if u >= v { u + 1 } else { u };
        edges.push((v, u, weight.sample(g)));
    }
    k
}

fn symmetrize(n: usize, edges: &[(usize, usize, f64)]) -> CscMatrix {
    let mut trip = Vec::with_capacity(2 * edges.len());
    for &(i, j, w) in edges {
        trip.push((i, j, w));
        trip.push((j, i, w));
    }
    CscMatrix::from_triplets(n, n, &trip).expect("indices in range")
}

/// Random graph imitating a K-nearest-neighbour graph.
///
/// Every vertex draws `K ~ Poisson(0.1·n)` distinct neighbours, each edge with
/// weight `Poisson(10)`; the adjacency is the sum of both directions. The
/// target graph adds `⌈noise·n⌉` vertices drawn the same way and
/// `⌈noise·|E|⌉` random edges.
pub fn gen_knn_graph(n: usize, noise_pct: f64, seed: u64) -> Result<KnnGraphPair> {
    if n < 10 {
        return Err(Error::InvalidArgument(format!("graph needs at least 10 vertices, got {n}")));
    }
    if !(noise_pct >= 0.0 && noise_pct.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise must be nonnegative, got {noise_pct}")));
    }
    let mut g = rng(seed);
    let weight = Poisson::new(WEIGHT_MEAN).expect("positive mean");
    let mut source_edges = Vec::new();
    let selections: Vec<usize> = (0..n)
        .map(|v| draw_neighbours(&mut g, v, n, 0.1 * n as f64, &weight, &mut source_edges))
        .collect();
    let source = symmetrize(n, &source_edges);

    let extra_nodes = (noise_pct * n as f64).ceil() as usize;
    let n_target = n + extra_nodes;
    let mut target_edges = source_edges.clone();
    for v in n..n_target {
        draw_neighbours(&mut g, v, n_target, 0.1 * n_target as f64, &weight, &mut target_edges);
    }
    let undirected = source.nnz() / 2 + (0..n).filter(|&i| source.column(i).0.contains(&i)).count();
    let extra_edges = (noise_pct * undirected as f64).ceil() as usize;
    for _ in 0..extra_edges {
        let u = g.random_range(0..n_target);
        let mut v = g.random_range(0..n_target - 1);
        if v >= u {
            v += 1;
        }
        target_edges.push((u, v, weight.sample(&mut g)));
    }
    let target = symmetrize(n_target, &target_edges);
    Ok(KnnGraphPair { source, target, selections, source_edges, target_edges })
}
