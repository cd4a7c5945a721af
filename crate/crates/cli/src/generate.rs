use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use hadamard_lcp::linalg::{CscMatrix, RealMatrix};
use hadamard_lcp::model::io::write_problem;
use hadamard_lcp::model::ProblemLcp;
use hadamard_lcp::problems::{
    gen_knn_graph, gen_random_cqp, gw_problem, gwbc_objective, gwbc_problem, rng, simplex_projection_problem, GwInstance,
};
use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use crate::Failure;

#[derive(Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    kind: Kind,
    /// Problem header to write; matrices go next to it.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Kind {
    /// Random strictly convex QP with a strictly feasible point.
    Cqp {
        #[arg(long)]
        n: usize,
        /// Constraint count; defaults to n/4.
        #[arg(long)]
        m: Option<usize>,
        /// Smallest eigenvalue of Q (the largest is 1).
        #[arg(long, default_value_t = 0.1)]
        kappa: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Projection of a standard normal vector onto the probability simplex.
    SimplexProjection {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Gromov-Wasserstein matching of a random graph with a noisy copy.
    Gw {
        #[arg(long)]
        n: usize,
        /// Fraction of extra vertices and edges in the target graph.
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write both graphs as `i j weight` edge lists into this
        /// directory.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Gromov-Wasserstein barycenter of random graphs with uniform weights.
    Gwbc {
        /// Barycenter size.
        #[arg(long)]
        m: usize,
        /// Comma-separated sizes of the input graphs.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Undirected edge list, 1-based, one line per stored pair `i <= j`.
fn write_edges(path: &Path, a: &CscMatrix) -> std::io::Result<()> {
    let mut out = format!("% {} vertices\n", a.nrows());
    for (i, j, w) in a.triplets() {
        if i <= j {
            let _ = writeln!(out, "{} {} {}", i + 1, j + 1, w);
        }
    }
    std::fs::write(path, out)
}

fn build(kind: &Kind) -> Result<ProblemLcp, Failure> {
    Ok(match kind {
        Kind::Cqp { n, m, kappa, seed } => gen_random_cqp(*n, m.unwrap_or(n / 4), *kappa, *seed)?,
        Kind::SimplexProjection { n, seed } => {
            let mut g = rng(*seed);
            let v = DVector::from_fn(*n, |_, _| StandardNormal.sample(&mut g));
            simplex_projection_problem(&v)?
        }
        Kind::Gw { n, noise, seed, edges } => {
            let pair = gen_knn_graph(*n, *noise, *seed)?;
            if let Some(dir) = edges {
                std::fs::create_dir_all(dir)?;
                write_edges(&dir.join("source.edges"), &pair.source)?;
                write_edges(&dir.join("target.edges"), &pair.target)?;
            }
            gw_problem(GwInstance::uniform(pair.source.into(), pair.target.into())?)?
        }
        Kind::Gwbc { m, sizes, seed } => {
            let k = sizes.len();
            let mut cs: Vec<RealMatrix> = Vec::with_capacity(k);
            let mut nus = Vec::with_capacity(k);
            for (i, &ni) in sizes.iter().enumerate() {
                let pair = gen_knn_graph(ni, 0.0, seed.wrapping_add(i as u64))?;
                cs.push(pair.source.into());
                nus.push(DVector::from_element(ni, 1.0 / ni as f64));
            }
            let mu = DVector::from_element(*m, 1.0 / *m as f64);
            gwbc_problem(gwbc_objective(cs, vec![1.0 / k as f64; k], mu, nus)?)?
        }
    })
}

pub fn run(args: &GenerateArgs) -> Result<u8, Failure> {
    let prob = build(&args.kind)?;
    let path = args.output.clone().unwrap_or_else(|| PathBuf::from(format!("{}.json", prob.name())));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_problem(&prob, &path)?;
    println!("{} (m = {}, n = {}) -> {}", prob.name(), prob.m(), prob.n(), path.display());
    Ok(0)
}
