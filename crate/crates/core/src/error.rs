//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::redundancy::RedundancyReport;

/// Which operator of an ARMA model an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    /// The autoregressive polynomial φ(B).
    Phi,
    /// The moving-average polynomial θ(B).
    Theta,
}

impl std::fmt::Display for Operator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Operator::Phi => f.write_str("phi"),
            Operator::Theta => f.write_str("theta"),
        }
    }
}

#[derive(Debug, Error)]
pub enum FimError {
    /// An operator has an inverse root outside the admissible disc.
    /// For φ this is nonstationarity, for θ noninvertibility.
    #[error("{} operator {operator} has inverse root(s) {offending:?} with modulus above {bound} (max modulus {max_modulus})",
        if matches!(operator, Operator::Phi) { "nonstationary" } else { "noninvertible" })]
    NonStationary {
        operator: Operator,
        max_modulus: f64,
        bound: f64,
        /// Offending inverse roots as `(re, im)`.
        offending: Vec<(f64, f64)>,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resultant undefined: both polynomials have degree zero")]
    UndefinedResultant,

    /// The information matrix is (numerically) singular. A singular
    /// information matrix means the AR and MA operators share a root.
    #[error("information matrix is singular (singularity margin {margin:e} < {threshold:e}); \
             the model is likely redundant: phi(B) and theta(B) appear to share a common root \
             (redundancy verdict: {})", if report.is_redundant() { "redundant" } else { "not redundant at current root tolerance, near-redundant" })]
    Singular {
        margin: f64,
        threshold: f64,
        report: Box<RedundancyReport>,
    },

    /// Certificates exist only for redundant models.
    #[error("no certificate exists: the model is not redundant, so its information matrix is nonsingular")]
    NotRedundant,
}

pub type Result<T> = std::result::Result<T, FimError>;
