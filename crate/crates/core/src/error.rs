use thiserror::Error;

use crate::transform::ExprError;

pub type Result<T, E = HeunError> = std::result::Result<T, E>;

/// Broad failure class, used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Domain,
    Convergence,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeunError {
    #[error("singular parameter: a must be nonzero")]
    SingularParameter,

    #[error("non-finite parameter `{0}`")]
    NonFiniteParameter(&'static str),

    #[error("resonant index n = {0}: recurrence denominator a(n+1+λ)(n+γ+λ) vanishes")]
    ResonantIndex(usize),

    #[error("degenerate branch: {0}")]
    DegenerateBranch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular point: x = {0} is a singularity of the Heun equation")]
    SingularPoint(f64),

    #[error("no convergence by {limit} terms ({what})")]
    NoConvergence { what: &'static str, limit: usize },

    #[error("step-size underflow at x = {0}")]
    StepUnderflow(f64),

    #[error("nonconvergent argument: |z| = {0} >= 1 and the series does not terminate")]
    NonconvergentArgument(f64),

    #[error("polar parameter c = {0}")]
    PolarParameter(f64),

    #[error("not B-terminated: no recurrence coefficient B_n vanishes")]
    NotBTerminated,

    #[error("not doubly terminated: alpha and beta must both hit a zero of B_n")]
    NotDoublyTerminated,

    #[error(
        "alpha/beta order violated: alpha-side bound {alpha_bound} exceeds beta-side bound {beta_bound}; swap alpha and beta (their roles are symmetric)"
    )]
    OrderViolated { alpha_bound: usize, beta_bound: usize },

    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("transformation: {0}")]
    Transformation(String),

    #[error("table record {index}, field `{field}`: {message}")]
    TableFormat {
        index: usize,
        field: String,
        message: String,
    },

    #[error("io: {0}")]
    Io(String),

    #[error("usage: {0}")]
    Usage(String),
}

impl ErrorClass {
    /// Process exit code: 1 usage, 2 domain, 3 convergence.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 1,
            ErrorClass::Domain => 2,
            ErrorClass::Convergence => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Usage => "usage",
            ErrorClass::Domain => "domain",
            ErrorClass::Convergence => "convergence",
        }
    }
}

impl HeunError {
    pub fn class(&self) -> ErrorClass {
        use HeunError::*;
        match self {
            NoConvergence { .. } | StepUnderflow(_) => ErrorClass::Convergence,
            InvalidTruncation(_) | TableFormat { .. } | Io(_) | Usage(_) => ErrorClass::Usage,
            _ => ErrorClass::Domain,
        }
    }

    /// Stable snake_case name of the variant, for structured error output.
    pub fn kind(&self) -> &'static str {
        use HeunError::*;
        match self {
            SingularParameter => "singular_parameter",
            NonFiniteParameter(_) => "non_finite_parameter",
            ResonantIndex(_) => "resonant_index",
            DegenerateBranch(_) => "degenerate_branch",
            Domain(_) => "domain",
            SingularPoint(_) => "singular_point",
            NoConvergence { .. } => "no_convergence",
            StepUnderflow(_) => "step_underflow",
            NonconvergentArgument(_) => "nonconvergent_argument",
            PolarParameter(_) => "polar_parameter",
            NotBTerminated => "not_b_terminated",
            NotDoublyTerminated => "not_doubly_terminated",
            OrderViolated { .. } => "order_violated",
            InvalidTruncation(_) => "invalid_truncation",
            Expr(_) => "expression",
            Transformation(_) => "transformation",
            TableFormat { .. } => "table_format",
            Io(_) => "io",
            Usage(_) => "usage",
        }
    }
}
