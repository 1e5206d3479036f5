//! Deterministic approximation of Gaussian averages of products of quadratic
//! forms.
//!
//! The central quantity is
//!
//! ```text
//! p(1) = (2π)^{-n/2} ∫ (1 + q_1(x)) ⋯ (1 + q_m(x)) e^{-‖x‖²/2} dx,
//! ```
//!
//! where each `q_k(x) = ½⟨Q_k x, x⟩` is a quadratic form given by a real
//! symmetric matrix. Viewing `p` as a polynomial in a coupling parameter `z`
//! (every form scaled by `z`), the estimator
//!
//! 1. checks the norm/locality hypotheses that guarantee `p(z) ≠ 0` on a disk
//!    of radius `β = γ/γ′ > 1` ([`model`]),
//! 2. computes the leading Taylor coefficients of `p` at `0` by enumerating
//!    collections of disjoint closed walks in the forms' interaction graph
//!    ([`cluster`]),
//! 3. converts them to Taylor coefficients of `ln p` and evaluates the
//!    truncated series at `z = 1`, with a certified additive error bound on
//!    `ln p(1)` ([`interp`]).
//!
//! Desk-scale ground truth lives in [`oracle`] (exact mixed moments, finite
//! evaluation of `p(ω)`, seeded Monte Carlo, zero-free-disk scans). [`apps`]
//! builds partition functions of mollified logarithmic pair potentials and a
//! feasibility score for systems of quadratic equations. [`cli`] owns the
//! instance file format and JSON reports for the `qfint` binary.

pub mod apps;
pub mod cli;
pub mod cluster;
pub mod interp;
pub mod jsonfmt;
pub mod model;
pub mod oracle;
pub mod symmat;

pub use model::{
    build_instance, check_admissible, locality_params, AdmissibilityReport, Instance,
    LocalityParams, Mode, QuadraticForm, ToleranceConfig,
};
pub use symmat::SymMatrix;

/// Errors shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Shapes of the participating objects do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// An oracle size guard was exceeded; the exact engines are for desk
    /// scale only.
    #[error("oracle guard exceeded: {0}")]
    Guard(String),
    /// Cluster enumeration hit the configured collection cap.
    #[error("enumeration budget exceeded at level {level} (cap {max} collections)")]
    Budget { level: usize, max: u64 },
    /// A coefficient overflowed; reported instead of propagating infinities.
    #[error("non-finite Taylor coefficient at level {level}")]
    NonFinite { level: usize },
    /// The instance fails the zero-free-disk hypotheses.
    #[error("instance violates the admissibility bound ({} of {} forms fail)",
        .0.failing(), .0.margins.len())]
    Admissibility(Box<AdmissibilityReport>),
    /// Feasibility preconditions (positive semidefinite forms summing to the
    /// identity) are violated.
    #[error("normalization violated: {0}")]
    Normalization(String),
    /// A malformed instance file or edge list.
    #[error("parse error: {0}")]
    Parse(String),
    /// Any other violated precondition.
    #[error("invalid input: {0}")]
    Invalid(String),
}
