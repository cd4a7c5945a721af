//! `hadlcp`: generate instances, solve them, verify candidate points and run
//! benchmark grids.
//!
//! Exit codes: 0 success, 1 unreadable input or dimension mismatch, 2 solver
//! stopped without meeting the tolerance, 3 verification failed.

mod bench;
mod generate;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hadamard_lcp::model::io::read_problem;
use hadamard_lcp::solver::{solve_with_callback, SolveStatus, SolverMode, SolverOptions};

#[derive(Parser)]
#[command(name = "hadlcp", version, about = "Squared-variable solver for nonnegative linearly constrained problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance in the problem file format.
    Generate(generate::GenerateArgs),
    /// Solve a problem file.
    Solve(SolveArgs),
    /// Check the optimality conditions at a point.
    Verify(verify::VerifyArgs),
    /// Run a grid of generated instances and write one CSV row per cell.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

/// Overrides of the solver defaults.
#[derive(Args, Clone)]
pub struct SolverArgs {
    /// KKT tolerance on max(Rp, Rd, Rc).
    #[arg(long)]
    tol: Option<f64>,
    /// Pivot threshold for singular iterates.
    #[arg(long)]
    sigma: Option<f64>,
    /// Riemannian gradient norm below which a projected step is taken.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Armijo constant.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    max_time: Option<f64>,
    /// Force a projected step every this many iterations (0 disables).
    #[arg(long)]
    pgd_period: Option<usize>,
    /// Barzilai-Borwein steps with a nonmonotone linesearch.
    #[arg(long, value_enum)]
    bb: Option<Switch>,
    /// Seed of the random initial point.
    #[arg(long)]
    seed: Option<u64>,
    /// Projected gradient steps only.
    #[arg(long)]
    pgd_only: bool,
}

impl SolverArgs {
    pub fn options(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        if let Some(v) = self.tol {
            o.tol = v;
        }
        if let Some(v) = self.sigma {
            o.sigma = v;
        }
        if let Some(v) = self.epsilon {
            o.epsilon = v;
        }
        if let Some(v) = self.delta {
            o.delta = v;
        }
        if let Some(v) = self.max_iter {
            o.max_iter = v;
        }
        if let Some(v) = self.max_time {
            o.max_time = v;
        }
        if let Some(v) = self.pgd_period {
            o.pgd_period = v;
        }
        if let Some(v) = self.bb {
            o.use_bb = v == Switch::On;
        }
        if let Some(v) = self.seed {
            o.seed = v;
        }
        if self.pgd_only {
            o.mode = SolverMode::PgdOnly;
        }
        o
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem header (JSON).
    problem: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Result file (JSON); written also when a limit is hit.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Print one line per iteration to stderr.
    #[arg(long, short)]
    verbose: bool,
}

/// Failure carrying its exit code.
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn input(e: impl std::fmt::Display) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

impl From<hadamard_lcp::Error> for Failure {
    fn from(e: hadamard_lcp::Error) -> Self {
        Self::input(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::input(e)
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<u8, Failure> {
    let prob = read_problem(&args.problem)?;
    let opts = args.solver.options();
    let verbose = args.verbose;
    let out = solve_with_callback(&prob, &opts, None, &mut |r| {
        if verbose {
            let kkt = r.kkt.map(|k| format!(" kkt {:.2e} {:.2e} {:.2e}", k[0], k[1], k[2])).unwrap_or_default();
            eprintln!(
                "{:6} {:?} t {:.3e} obj {:.10e} |grad| {:.3e} support {}{kkt}",
                r.iter, r.step_kind, r.t, r.obj, r.grad_norm, r.support
            );
        }
    })?;
    let result = report::SolveRecord::new(&prob, &out);
    if let Some(path) = &args.output {
        std::fs::write(path, serde_json::to_string_pretty(&result).map_err(Failure::input)?)?;
    }
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&result).map_err(Failure::input)?),
        Format::Csv => {
            println!("{}", report::SOLVE_CSV_HEADER);
            println!("{}", result.csv_row());
        }
        Format::Table => {
            println!("{}", report::TABLE_HEADER);
            println!("{}", result.table_row());
        }
    }
    Ok(if out.status == SolveStatus::Converged { 0 } else { 2 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Generate(a) => generate::run(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => verify::run(a),
        Command::Bench(a) => bench::run(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
