use std::path::PathBuf;

use clap::Args;
use hadamard_lcp::geometry::{is_sigma_singular, regular_representation};
use hadamard_lcp::model::io::{read_point, read_problem};
use hadamard_lcp::model::{make_point, ObjectiveOracle};
use hadamard_lcp::solver::SolverOptions;
use hadamard_lcp::stationarity::{
    dual_feasibility, escape_direction, kkt_residuals_at, riemannian_gradient, KktReport, MultiplierSource,
};
use serde::Serialize;

use crate::{Failure, Format};

#[derive(Args)]
pub struct VerifyArgs {
    /// Problem header (JSON).
    problem: PathBuf,
    /// Point file: a JSON array `x`, or a solve result with `x` and
    /// optionally `lambda`.
    point: PathBuf,
    /// KKT tolerance on max(Rp, Rd, Rc).
    #[arg(long)]
    tol: Option<f64>,
    /// Pivot threshold for singular points.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Serialize)]
struct Residuals {
    #[serde(rename = "Rp")]
    rp: f64,
    #[serde(rename = "Rd")]
    rd: f64,
    #[serde(rename = "Rc")]
    rc: f64,
}

impl From<&KktReport> for Residuals {
    fn from(r: &KktReport) -> Self {
        Self { rp: r.rp, rd: r.rd, rc: r.rc }
    }
}

#[derive(Serialize)]
struct Verdict {
    objective: f64,
    rank: usize,
    m: usize,
    sigma_singular: bool,
    riemannian_grad_norm: f64,
    primal_violation: f64,
    /// Residuals with the multiplier from the point file.
    supplied: Option<Residuals>,
    /// Residuals with the multiplier assembled from the stratum.
    assembled: Residuals,
    escape_slope: Option<f64>,
    pass: bool,
}

pub fn run(args: &VerifyArgs) -> Result<u8, Failure> {
    let prob = read_problem(&args.problem)?;
    let (x, lambda) = read_point(&args.point)?;
    if x.len() != prob.n() {
        return Err(Failure::input(format!("point has {} entries, problem has {} variables", x.len(), prob.n())));
    }
    if let Some(l) = &lambda {
        if l.len() != prob.m() {
            return Err(Failure::input(format!("multiplier has {} entries, problem has {} rows", l.len(), prob.m())));
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Failure::input("point contains non-finite values"));
    }
    let defaults = SolverOptions::default();
    let tol = args.tol.unwrap_or(defaults.tol);
    let sigma = args.sigma.unwrap_or(defaults.sigma);

    let supplied = lambda.as_ref().map(|l| kkt_residuals_at(&x, l, &prob, MultiplierSource::External)).transpose()?;

    // Geometry at the nonnegative part; negative entries already show up in Rp.
    let p = make_point(x.map(|v| v.max(0.0).sqrt()))?;
    let rep = regular_representation(&p, &prob)?;
    let (grad, lambda_prime) = riemannian_gradient(&p, &rep, &prob)?;
    let g = prob.objective().gradient(&x);
    // ½‖Proj₋(·)‖² above this bound means Rd > tol for every multiplier of
    // the stratum.
    let violation_tol = 0.5 * (tol * (1.0 + g.norm())).powi(2);
    let df = dual_feasibility(&p, &rep, &lambda_prime, &prob, violation_tol)?;
    let assembled = kkt_residuals_at(&x, &df.assembled_multiplier(&rep, &lambda_prime), &prob, MultiplierSource::External)?;
    let escape_slope = match &df.witness_z {
        Some(z) => Some(g.dot(&escape_direction(&p, &rep, z, &prob)?)),
        None => None,
    };
    let pass = assembled.max_residual() <= tol || supplied.as_ref().is_some_and(|r| r.max_residual() <= tol);

    let verdict = Verdict {
        objective: assembled.objective,
        rank: rep.rank(),
        m: rep.m(),
        sigma_singular: is_sigma_singular(&rep, sigma),
        riemannian_grad_norm: grad.norm(),
        primal_violation: df.primal_violation,
        supplied: supplied.as_ref().map(Residuals::from),
        assembled: Residuals::from(&assembled),
        escape_slope,
        pass,
    };
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&verdict).map_err(Failure::input)?),
        Format::Csv => {
            println!("objective,rank,m,sigma_singular,grad_norm,primal_violation,Rp,Rd,Rc,escape_slope,pass");
            println!(
                "{:e},{},{},{},{:e},{:e},{:e},{:e},{:e},{},{}",
                verdict.objective,
                verdict.rank,
                verdict.m,
                verdict.sigma_singular,
                verdict.riemannian_grad_norm,
                verdict.primal_violation,
                assembled.rp,
                assembled.rd,
                assembled.rc,
                escape_slope.map(|s| format!("{s:e}")).unwrap_or_default(),
                pass
            );
        }
        Format::Table => {
            println!("objective         {:.10e}", verdict.objective);
            println!("rank              {} of {}", verdict.rank, verdict.m);
            println!("sigma-singular    {}", verdict.sigma_singular);
            println!("|grad|            {:.3e}", verdict.riemannian_grad_norm);
            println!("primal_violation  {:.3e}", verdict.primal_violation);
            if let Some(r) = &supplied {
                println!("supplied lambda   Rp {:.3e} Rd {:.3e} Rc {:.3e}", r.rp, r.rd, r.rc);
            }
            println!("assembled lambda  Rp {:.3e} Rd {:.3e} Rc {:.3e}", assembled.rp, assembled.rd, assembled.rc);
            if let Some(s) = escape_slope {
                println!("<grad phi, dir>   {s:.6e}");
            }
            println!("{}", if pass { "PASS" } else { "FAIL" });
        }
    }
    Ok(if pass { 0 } else { 3 })
}
