//! Hybrid Riemannian / projected gradient method.
//!
//! Each iteration factors `A·Diag(x)·Aᵀ` at the current `y`. When the
//! smallest positive pivot is at least `sigma` and the Riemannian gradient
//! exceeds `epsilon`, the iterate takes a Riemannian gradient step on its
//! stratum followed by the Newton retraction. Otherwise, and additionally
//! every `pgd_period` iterations, it takes a projected gradient step in `x`
//! and lifts back with `y = √x`. Projected steps are the only way entries of
//! `y` can become zero or leave zero.
//!
//! Termination uses KKT residuals: after every projected step with the
//! projection dual, and every few Riemannian steps with the multiplier from
//! the gradient projection.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{is_sigma_singular, regular_representation};
use crate::model::{lift, ObjectiveOracle, PrimalPoint, ProblemLcp};
use crate::problems::rng;
use crate::projection::{Projector, DEFAULT_PROJ_TOL};
use crate::retraction::{newton_retract, RetractionConfig};
use crate::stationarity::{kkt_from_gradient, riemannian_gradient_from, KktReport, MultiplierSource};

/// Which branches the solver may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Hybrid,
    /// Projected gradient steps only; used as a reference method.
    PgdOnly,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Riemannian gradient norm below which a projected step is taken.
    pub epsilon: f64,
    /// Pivot threshold below which the iterate counts as singular.
    pub sigma: f64,
    /// Armijo constant for both linesearches.
    pub delta: f64,
    /// KKT tolerance on `max(Rp, Rd, Rc)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Wall-clock limit in seconds.
    pub max_time: f64,
    /// Force a projected step every this many iterations; `0` disables.
    pub pgd_period: usize,
    /// Barzilai-Borwein initial steps with a nonmonotone reference value.
    pub use_bb: bool,
    pub seed: u64,
    pub mode: SolverMode,
    pub max_halvings: usize,
    /// KKT check cadence counted in Riemannian steps.
    pub kkt_every: usize,
    /// History length of the nonmonotone reference value.
    pub nonmonotone_window: usize,
    pub proj_tol: f64,
    /// Tolerance 1e-12 by default, tighter than a standalone retraction, so
    /// that Riemannian iterates are feasible enough for projected steps to
    /// make progress near a solution.
    pub retraction: RetractionConfig,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-10,
            sigma: 1e-10,
            delta: 1e-4,
            tol: 1e-6,
            max_iter: 20_000,
            max_time: 3600.0,
            pgd_period: 20,
            use_bb: true,
            seed: 0,
            mode: SolverMode::Hybrid,
            max_halvings: 50,
            kkt_every: 5,
            nonmonotone_window: 5,
            proj_tol: 1e-12,
            retraction: RetractionConfig { tol: 1e-12, ..RetractionConfig::default() },
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.epsilon) || !unit(self.sigma) || !unit(self.delta) {
            return Err(Error::InvalidArgument("epsilon, sigma and delta must lie in (0, 1)".into()));
        }
        if !(self.tol > 0.0) || !(self.proj_tol > 0.0) || !(self.max_time > 0.0) {
            return Err(Error::InvalidArgument("tolerances and time limit must be positive".into()));
        }
        if self.nonmonotone_window == 0 || self.kkt_every == 0 {
            return Err(Error::InvalidArgument("window and KKT cadence must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Rgd,
    Pgd,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub step_kind: StepKind,
    pub t: f64,
    /// Objective after the step.
    pub obj: f64,
    /// Riemannian gradient norm before the step (`NaN` in projected-only mode).
    pub grad_norm: f64,
    pub sigma_regular: bool,
    pub support: usize,
    /// `[Rp, Rd, Rc]` when residuals were evaluated this iteration.
    pub kkt: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
    pub iter: usize,
    pub ldl_count: usize,
    pub pg_count: usize,
    /// Riemannian linesearch failures that fell back to a projected step.
    pub rgd_fallbacks: usize,
    pub wall_time: f64,
    /// With BB steps the objective only decreases against the maximum of
    /// the recent history, not monotonically.
    pub nonmonotone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    IterLimit,
    TimeLimit,
    /// The projected linesearch made no further progress.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub point: PrimalPoint,
    pub report: KktReport,
    pub trace: SolverTrace,
    pub status: SolveStatus,
}

/// Accepted Riemannian gradient step.
#[derive(Debug, Clone)]
pub struct RgdStep {
    pub t: f64,
    pub point: PrimalPoint,
    pub value: f64,
    pub trials: usize,
    pub factorizations: usize,
}

/// Armijo linesearch for a Riemannian gradient step over `t = 2⁻ᵏ`, `k >= 0`.
pub fn armijo_rgd(
    p: &PrimalPoint,
    grad: &DVector<f64>,
    delta: f64,
    prob: &ProblemLcp,
    cfg: &RetractionConfig,
) -> Result<RgdStep> {
    let f0 = prob.objective().value(p.x());
    rgd_linesearch(p, grad, 1.0, f0, delta, 50, prob, cfg)
}

/// Backtracking from `t_init`: accepts the first `t` with
/// `φ(Retr(y − t·grad)) <= reference − t·δ·‖grad‖²`. Retraction failures
/// count as rejections.
#[allow(clippy::too_many_arguments)]
pub fn rgd_linesearch(
    p: &PrimalPoint,
    grad: &DVector<f64>,
    t_init: f64,
    reference: f64,
    delta: f64,
    max_halvings: usize,
    prob: &ProblemLcp,
    cfg: &RetractionConfig,
) -> Result<RgdStep> {
    check_dim(p.dim(), grad.len())?;
    let g2 = grad.norm_squared();
    let mut t = t_init;
    let mut factorizations = 0;
    for trial in 0..=max_halvings {
        let z0 = p.y() - grad * t;
        match newton_retract(&z0, prob, cfg) {
            Ok(r) => {
                factorizations += r.factorizations;
                let value = prob.objective().value(r.point.x());
                if value <= reference - t * delta * g2 {
                    return Ok(RgdStep { t, point: r.point, value, trials: trial + 1, factorizations });
                }
            }
            Err(Error::RetractionDiverged { .. }) => {}
            Err(e) => return Err(e),
        }
        t *= 0.5;
    }
    Err(Error::LinesearchFailed { halvings: max_halvings })
}

fn initial_point_with(prob: &ProblemLcp, seed: u64, projector: &mut Projector, proj_tol: f64) -> Result<PrimalPoint> {
    let mut g = rng(seed);
    let v = DVector::from_fn(prob.n(), |_, _| StandardNormal.sample(&mut g));
    let proj = projector.project(&v, prob, proj_tol)?;
    lift(&proj.x)?.attach(prob)
}

/// Projection of a seeded standard normal vector, lifted to `y`.
pub fn initial_point(prob: &ProblemLcp, seed: u64) -> Result<PrimalPoint> {
    initial_point_with(prob, seed, &mut Projector::new(), DEFAULT_PROJ_TOL)
}

fn bb_step(s: &DVector<f64>, v: &DVector<f64>, fallback: f64) -> f64 {
    let sv = s.dot(v);
    let t = if sv > 0.0 { s.norm_squared() / sv } else { fallback };
    t.clamp(1e-10, 1e10)
}

pub fn solve(prob: &ProblemLcp, opts: &SolverOptions, y0: Option<PrimalPoint>) -> Result<SolveOutcome> {
    solve_with_callback(prob, opts, y0, &mut |_| {})
}

/// [`solve`] with a hook receiving every iteration record as it is produced.
pub fn solve_with_callback(
    prob: &ProblemLcp,
    opts: &SolverOptions,
    y0: Option<PrimalPoint>,
    callback: &mut dyn FnMut(&IterationRecord),
) -> Result<SolveOutcome> {
    opts.validate()?;
    let start = Instant::now();
    let hybrid = opts.mode == SolverMode::Hybrid;
    let mut projector = Projector::new();
    let mut trace = SolverTrace { nonmonotone: opts.use_bb, ..Default::default() };
    let mut rep_factorizations = 0;

    let mut y = match y0 {
        Some(p) => {
            check_dim(prob.n(), p.dim())?;
            if prob.relative_residual(p.x())? <= opts.retraction.tol {
                p
            } else {
                match newton_retract(p.y(), prob, &opts.retraction) {
                    Ok(r) => {
                        rep_factorizations += r.factorizations;
                        r.point
                    }
                    Err(_) => lift(&projector.project(p.x(), prob, opts.proj_tol)?.x)?,
                }
            }
        }
        None => initial_point_with(prob, opts.seed, &mut projector, opts.proj_tol)?,
    };
    let (mut phi, mut g) = prob.objective().value_and_gradient(y.x());
    let mut history: VecDeque<f64> = VecDeque::from([phi]);
    let mut prev_xg: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut prev_rgd: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut rgd_steps = 0usize;
    let mut last_pgd_lambda: Option<DVector<f64>> = None;
    let mut restored = false;
    let mut converged: Option<KktReport> = None;
    let mut status: SolveStatus;

    let consider = |best: &mut Option<KktReport>, r: &KktReport| {
        if best.as_ref().map_or(true, |b| r.max_residual() < b.max_residual()) {
            *best = Some(r.clone());
        }
    };

    loop {
        if trace.iter >= opts.max_iter {
            status = SolveStatus::IterLimit;
            break;
        }
        if start.elapsed().as_secs_f64() >= opts.max_time {
            status = SolveStatus::TimeLimit;
            break;
        }
        let forced = hybrid && opts.pgd_period > 0 && trace.iter > 0 && trace.iter % opts.pgd_period == 0;
        let mut record: Option<IterationRecord> = None;
        let mut sigma_regular = false;
        let mut grad_norm = f64::NAN;

        if hybrid {
            let rep = regular_representation(&y, prob)?;
            rep_factorizations += 1;
            sigma_regular = !is_sigma_singular(&rep, opts.sigma);
            let (rgrad, lam_s) = riemannian_gradient_from(&y, &g, &rep, prob);
            grad_norm = rgrad.norm();
            let use_rgd = sigma_regular && grad_norm > opts.epsilon && !forced;
            let check_now = sigma_regular && (!use_rgd || rgd_steps % opts.kkt_every == 0);
            let mut kkt = None;
            if check_now {
                let r = kkt_from_gradient(y.x(), phi, &g, &lam_s, prob, MultiplierSource::SmoothProjection)?;
                kkt = Some([r.rp, r.rd, r.rc]);
                if r.max_residual() <= opts.tol {
                    converged = Some(r);
                    status = SolveStatus::Converged;
                    break;
                }
            }
            if use_rgd {
                let t0 = match (&prev_rgd, opts.use_bb) {
                    (Some((yp, gp)), true) => bb_step(&(y.y() - yp), &(&rgrad - gp), 1.0),
                    _ => 1.0,
                };
                let reference = if opts.use_bb { history.iter().copied().fold(f64::MIN, f64::max) } else { phi };
                match rgd_linesearch(&y, &rgrad, t0, reference, opts.delta, opts.max_halvings, prob, &opts.retraction) {
                    Ok(step) => {
                        debug_assert!(step.value <= reference - step.t * opts.delta * grad_norm * grad_norm);
                        debug_assert!((0..y.dim()).all(|i| y.y()[i] != 0.0 || step.point.y()[i] == 0.0));
                        rep_factorizations += step.factorizations;
                        rgd_steps += 1;
                        restored = false;
                        prev_rgd = Some((y.y().clone(), rgrad));
                        prev_xg = Some((y.x().clone(), g.clone()));
                        y = step.point;
                        let vg = prob.objective().value_and_gradient(y.x());
                        phi = vg.0;
                        g = vg.1;
                        record = Some(IterationRecord {
                            iter: trace.iter,
                            step_kind: StepKind::Rgd,
                            t: step.t,
                            obj: phi,
                            grad_norm,
                            sigma_regular,
                            support: y.support().len(),
                            kkt,
                        });
                    }
                    Err(Error::LinesearchFailed { .. }) => trace.rgd_fallbacks += 1,
                    Err(e) => return Err(e),
                }
            }
        }

        if record.is_none() {
            let t0 = match (&prev_xg, opts.use_bb) {
                (Some((xp, gp)), true) => bb_step(&(y.x() - xp), &(&g - gp), 0.5),
                _ => 0.5,
            };
            let reference = if opts.use_bb { history.iter().copied().fold(f64::MIN, f64::max) } else { phi };
            let ls = match projector.pgd_linesearch(
                y.x(),
                &g,
                t0,
                reference,
                opts.delta,
                opts.max_halvings,
                prob,
                opts.proj_tol,
            ) {
                Ok(ls) => ls,
                Err(Error::LinesearchFailed { .. }) => {
                    // An iterate that is feasible only to retraction accuracy
                    // can block descent for short steps: projecting it onto C
                    // alone may raise φ. Restore feasibility once before
                    // declaring a stall.
                    if restored {
                        status = SolveStatus::Stalled;
                        break;
                    }
                    restored = true;
                    y = lift(&projector.project(y.x(), prob, opts.proj_tol)?.x)?;
                    (phi, g) = prob.objective().value_and_gradient(y.x());
                    history = VecDeque::from([phi]);
                    prev_xg = None;
                    prev_rgd = None;
                    continue;
                }
                Err(e) => return Err(e),
            };
            trace.pg_count += 1;
            restored = false;
            prev_rgd = None;
            prev_xg = Some((y.x().clone(), g.clone()));
            y = lift(&ls.x_plus)?;
            let vg = prob.objective().value_and_gradient(y.x());
            phi = vg.0;
            g = vg.1;
            let r = kkt_from_gradient(y.x(), phi, &g, &ls.lambda, prob, MultiplierSource::PgdDual)?;
            last_pgd_lambda = Some(ls.lambda.clone());
            let rec = IterationRecord {
                iter: trace.iter,
                step_kind: StepKind::Pgd,
                t: ls.t,
                obj: phi,
                grad_norm,
                sigma_regular,
                support: y.support().len(),
                kkt: Some([r.rp, r.rd, r.rc]),
            };
            trace.iter += 1;
            callback(&rec);
            trace.records.push(rec);
            if r.max_residual() <= opts.tol {
                converged = Some(r);
                status = SolveStatus::Converged;
                break;
            }
            if ls.stationary {
                status = SolveStatus::Stalled;
                break;
            }
        } else {
            let rec = record.unwrap();
            trace.iter += 1;
            callback(&rec);
            trace.records.push(rec);
        }
        history.push_back(phi);
        while history.len() > opts.nonmonotone_window {
            history.pop_front();
        }
    }

    let report = match converged {
        Some(r) => r,
        None => {
            // Residuals at the final iterate with every available multiplier;
            // a passing certificate overrides the limit that stopped the loop.
            let mut fin: Option<KktReport> = None;
            if hybrid {
                let rep = regular_representation(&y, prob)?;
                rep_factorizations += 1;
                let (_, lam_s) = riemannian_gradient_from(&y, &g, &rep, prob);
                let r = kkt_from_gradient(y.x(), phi, &g, &lam_s, prob, MultiplierSource::SmoothProjection)?;
                consider(&mut fin, &r);
            }
            if let Some(l) = &last_pgd_lambda {
                let r = kkt_from_gradient(y.x(), phi, &g, l, prob, MultiplierSource::PgdDual)?;
                consider(&mut fin, &r);
            }
            let fin = match fin {
                Some(r) => r,
                None => kkt_from_gradient(y.x(), phi, &g, &DVector::zeros(prob.m()), prob, MultiplierSource::External)?,
            };
            if fin.max_residual() <= opts.tol {
                status = SolveStatus::Converged;
            }
            fin
        }
    };
    trace.ldl_count = rep_factorizations + projector.factorizations();
    trace.wall_time = start.elapsed().as_secs_f64();
    let point = y.attach(prob)?;
    Ok(SolveOutcome { point, report, trace, status })
}
