use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, ValueEnum};
use hadamard_lcp::model::ProblemLcp;
use hadamard_lcp::problems::{gen_knn_graph, gen_random_cqp, gw_problem, GwInstance};
use hadamard_lcp::solver::{solve, SolveOutcome, SolverMode, SolverOptions};

use crate::report::status_label;
use crate::{Failure, SolverArgs};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    /// Random convex QPs; the parameter is the smallest eigenvalue of Q.
    Cqp,
    /// Graph matching; the parameter is the noise fraction.
    Gw,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "cqp")]
    family: Family,
    /// Comma-separated problem sizes.
    #[arg(long, value_delimiter = ',', default_value = "200,500,1000")]
    n: Vec<usize>,
    /// Comma-separated family parameters (kappa or noise).
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
    param: Vec<f64>,
    /// Comma-separated instance seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Also solve each cell with projected gradient steps only.
    #[arg(long)]
    baseline: bool,
    /// Cells solved concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

const HEADER: &str = "family,n,m,param,seed,status,Rp,Rd,Rc,obj,time,iter,ldl,pg";
const BASELINE_HEADER: &str = ",base_status,base_obj,base_time,base_iter,rel_gap";

struct Cell {
    n: usize,
    param: f64,
    seed: u64,
}

fn instance(family: Family, cell: &Cell) -> hadamard_lcp::Result<ProblemLcp> {
    match family {
        Family::Cqp => gen_random_cqp(cell.n, cell.n / 4, cell.param, cell.seed),
        Family::Gw => {
            let pair = gen_knn_graph(cell.n, cell.param, cell.seed)?;
            gw_problem(GwInstance::uniform(pair.source.into(), pair.target.into())?)
        }
    }
}

fn outcome_fields(out: &SolveOutcome) -> String {
    let r = &out.report;
    format!(
        "{},{:e},{:e},{:e},{:e},{:.3},{},{},{}",
        status_label(out.status),
        r.rp,
        r.rd,
        r.rc,
        r.objective,
        out.trace.wall_time,
        out.trace.iter,
        out.trace.ldl_count,
        out.trace.pg_count
    )
}

/// One CSV row; a failed cell records the error in the status column.
fn run_cell(family: Family, cell: &Cell, opts: &SolverOptions, baseline: bool) -> String {
    let name = match family {
        Family::Cqp => "cqp",
        Family::Gw => "gw",
    };
    let prob = match instance(family, cell) {
        Ok(p) => p,
        Err(e) => return format!("{name},{},,{},{},error: {}", cell.n, cell.param, cell.seed, csv_text(&e.to_string())),
    };
    let mut row = format!("{name},{},{},{},{},", cell.n, prob.m(), cell.param, cell.seed);
    let main = match solve(&prob, opts, None) {
        Ok(out) => {
            row.push_str(&outcome_fields(&out));
            Some(out)
        }
        Err(e) => {
            let _ = write!(row, "error: {},,,,,,,,", csv_text(&e.to_string()));
            None
        }
    };
    if baseline {
        let base_opts = SolverOptions { mode: SolverMode::PgdOnly, ..opts.clone() };
        match solve(&prob, &base_opts, None) {
            Ok(base) => {
                let gap = main
                    .as_ref()
                    .map(|m| {
                        let o = base.report.objective;
                        format!("{:e}", (m.report.objective - o).abs() / o.abs().max(1.0))
                    })
                    .unwrap_or_default();
                let _ = write!(
                    row,
                    ",{},{:e},{:.3},{},{gap}",
                    status_label(base.status),
                    base.report.objective,
                    base.trace.wall_time,
                    base.trace.iter
                );
            }
            Err(e) => {
                let _ = write!(row, ",error: {},,,,", csv_text(&e.to_string()));
            }
        }
    }
    row
}

fn csv_text(s: &str) -> String {
    s.replace(',', ";")
}

pub fn run(args: &BenchArgs) -> Result<u8, Failure> {
    let opts = args.solver.options();
    opts.validate()?;
    let mut cells = Vec::new();
    for &n in &args.n {
        for &param in &args.param {
            for &seed in &args.seeds {
                cells.push(Cell { n, param, seed });
            }
        }
    }
    let rows: Vec<Mutex<Option<String>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..args.jobs.max(1).min(cells.len().max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(k) else { break };
                let row = run_cell(args.family, cell, &opts, args.baseline);
                *rows[k].lock().expect("row lock") = Some(row);
            });
        }
    });
    let mut csv = String::from(HEADER);
    if args.baseline {
        csv.push_str(BASELINE_HEADER);
    }
    csv.push('\n');
    for r in rows {
        csv.push_str(&r.into_inner().expect("row lock").expect("every cell ran"));
        csv.push('\n');
    }
    match &args.output {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}
