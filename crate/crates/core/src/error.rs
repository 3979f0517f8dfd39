use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no strictly interior point found")]
    InfeasibleInterior,
    #[error("constraint matrix has rank {rank} < dimension {n}")]
    RankDeficient { rank: usize, n: usize },
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("point is not strictly interior (min slack {min_slack:e})")]
    NotInterior { min_slack: f64 },
    #[error("Cholesky factorization of the metric failed")]
    FactorizationFailure,
    #[error("damped Newton did not reach the analytic center: {0}")]
    NoInteriorPoint(String),
    #[error("fixed-point iteration diverged after {iters} sweeps: {reason}")]
    FixedPointDivergence { iters: usize, reason: String },
    #[error("reference flow not converged: Richardson difference {diff:e} exceeds {tol:e}")]
    OracleNotConverged { diff: f64, tol: f64 },
    #[error("insufficient samples: have {have}, need at least {need}")]
    InsufficientSamples { have: usize, need: usize },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
