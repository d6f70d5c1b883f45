//! Fisher information for ARMA(p,q) models.
//!
//! Computes `I(φ,θ)`, inverts it to asymptotic parameter covariances,
//! detects common AR/MA roots, and produces null-space certificates for
//! redundant models. `I(φ,θ)` is singular exactly when `φ(B)` and `θ(B)`
//! share a root; the test suites check this equivalence on random models.
//!
//! All polynomials use Box–Jenkins signs: coefficients `[c₁, …, c_d]` mean
//! `1 − c₁B − … − c_dB^d`.

pub mod cli;
pub mod error;
pub mod fisher;
pub mod inference;
pub mod montecarlo;
pub mod poly;
pub mod redundancy;

pub use error::{FimError, Operator, Result};
pub use fisher::{
    ar_autocovariance, cross_covariance, diagnostics, information_matrix, psi_weights, ArmaModel,
    InformationMatrix, SpectralDiagnostics, WeightSequence,
};
pub use inference::{asymptotic_covariance, invert_information, AsymptoticCovariance};
pub use montecarlo::{
    mc_compare, simulate_arma, simulate_derivative_processes, McComparison, MomentEstimate,
    SimulationConfig,
};
pub use poly::{sylvester_resultant, InverseRootSet, Polynomial, RescaledPolynomial};
pub use redundancy::{
    certify, construct_cancelling_polynomials, detect_common_roots, null_certificate, reduce_model,
    NullCertificate, RedundancyReport, RootPair, Verdict,
};
