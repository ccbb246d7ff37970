use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A problem, catalog or solver setting is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A transform or family parameter lies outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Evaluation was requested where a function (or model) is not defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The normal matrix of an unregularized least-squares problem is singular.
    #[error("rank deficient design matrix ({cols} columns, lambda = 0)")]
    Rank { cols: usize },

    /// A scoring routine was called with an all-zero residual.
    #[error("residual has zero norm; the solver should already have stopped")]
    ZeroResidual,

    /// The problem shape is outside what a routine supports.
    #[error("unsupported problem: {0}")]
    Unsupported(String),

    /// The greedy loop cannot continue.
    #[error("solver aborted: {0}")]
    SolverAbort(String),

    /// A relative metric has a zero denominator.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
