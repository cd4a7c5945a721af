use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is indefinite: pivot {index} is {pivot:.3e}")]
    IndefiniteMatrix { index: usize, pivot: f64 },
    #[error("linear system is inconsistent: residual {residual:.3e} exceeds {bound:.3e}")]
    InconsistentSystem { residual: f64, bound: f64 },
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("entry {index} is {value:.3e}, below the clipping tolerance")]
    NegativeInput { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("constraint matrix is rank deficient ({rank} independent rows out of {rows})")]
    RankDeficient { rank: usize, rows: usize },
    #[error("direction is not in the tangent cone (residuals {res_m:.3e}, {res_n:.3e})")]
    NotInTangentCone { res_m: f64, res_n: f64 },
    #[error("{what} did not converge within {iters} iterations")]
    MaxIterExceeded { what: &'static str, iters: usize },
    #[error("escape witness is zero")]
    ZeroWitness,
    #[error("objective does not provide Hessian-vector products")]
    NoHessian,
    #[error("retraction failed after {iters} iterations (residual {residual:.3e})")]
    RetractionDiverged { iters: usize, residual: f64 },
    #[error("projection dual diverged; the constraint set appears to be empty")]
    InfeasibleDetected,
    #[error("linesearch failed after {halvings} halvings")]
    LinesearchFailed { halvings: usize },
    #[error("marginals disagree: sum(mu) = {mu_sum}, sum(nu) = {nu_sum}")]
    MarginalMismatch { mu_sum: f64, nu_sum: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
