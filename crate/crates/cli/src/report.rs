use hadamard_lcp::model::ProblemLcp;
use hadamard_lcp::solver::{IterationRecord, SolveOutcome, SolveStatus};
use hadamard_lcp::stationarity::MultiplierSource;
use serde::Serialize;

pub const TABLE_HEADER: &str = "      Rp       Rd       Rc              obj     time  iter/ldl/pg";
pub const SOLVE_CSV_HEADER: &str = "name,status,Rp,Rd,Rc,obj,time,iter,ldl,pg";

/// Result file written by `solve`; `verify` reads its `x` and `lambda`.
#[derive(Serialize)]
pub struct SolveRecord {
    pub name: String,
    pub status: SolveStatus,
    pub objective: f64,
    #[serde(rename = "Rp")]
    pub rp: f64,
    #[serde(rename = "Rd")]
    pub rd: f64,
    #[serde(rename = "Rc")]
    pub rc: f64,
    pub iter: usize,
    pub ldl_count: usize,
    pub pg_count: usize,
    pub time: f64,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub multiplier_source: MultiplierSource,
    pub trace: Vec<IterationRecord>,
}

impl SolveRecord {
    pub fn new(prob: &ProblemLcp, out: &SolveOutcome) -> Self {
        let r = &out.report;
        Self {
            name: prob.name().to_string(),
            status: out.status,
            objective: r.objective,
            rp: r.rp,
            rd: r.rd,
            rc: r.rc,
            iter: out.trace.iter,
            ldl_count: out.trace.ldl_count,
            pg_count: out.trace.pg_count,
            time: out.trace.wall_time,
            x: out.point.x().as_slice().to_vec(),
            lambda: r.lambda.as_slice().to_vec(),
            multiplier_source: r.multiplier_source,
            trace: out.trace.records.clone(),
        }
    }

    pub fn table_row(&self) -> String {
        table_row(self.rp, self.rd, self.rc, self.objective, self.time, self.iter, self.ldl_count, self.pg_count)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{:e},{:e},{:.3},{},{},{}",
            self.name,
            status_label(self.status),
            self.rp,
            self.rd,
            self.rc,
            self.objective,
            self.time,
            self.iter,
            self.ldl_count,
            self.pg_count
        )
    }
}

#[allow(clippy::too_many_arguments)]
pub fn table_row(rp: f64, rd: f64, rc: f64, obj: f64, time: f64, iter: usize, ldl: usize, pg: usize) -> String {
    format!("{rp:8.1e} {rd:8.1e} {rc:8.1e} {obj:16.8e} {time:8.2} {:>12}", format!("{iter}/{ldl}/{pg}"))
}

/// Status column: `limit` for iteration and time limits.
pub fn status_label(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::IterLimit | SolveStatus::TimeLimit => "limit",
        SolveStatus::Stalled => "stalled",
    }
}
