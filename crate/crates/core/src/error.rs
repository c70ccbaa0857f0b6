use thiserror::Error;

/// Errors raised by the solvers and verifiers.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type
/// the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("operation requires {0}")]
    WrongLattice(&'static str),

    #[error("support index k = {k} exceeds n = {n}")]
    SupportIndexOutOfRange { k: usize, n: usize },

    #[error("budget {cbar} is served by support S_{expected}, not S_{requested}")]
    RegimeMismatch {
        cbar: f64,
        requested: usize,
        expected: usize,
    },

    #[error("budget {cbar} is not below the critical cost {cbar_star}; the constraint is inactive")]
    InactiveBudget { cbar: f64, cbar_star: f64 },

    #[error("budget {cbar} too small: expected cost still above it at lambda = {lambda_max}")]
    BudgetTooSmall { cbar: f64, lambda_max: f64 },

    #[error("position {x} is not a lattice point of the unconstrained support")]
    NotOnLattice { x: f64 },

    #[error("mass structure violated: {0}")]
    Structure(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
