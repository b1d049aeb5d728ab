//! Error type shared by all engine modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building grids, models, or running the
/// forward/backward passes.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A grid constructor was handed inconsistent geometry (non-monotone
    /// nodes, endpoints out of order, zero cells, ...).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// The time/maturity partitions violate one of the nesting conditions
    /// (every maturity node below t_max must be a time node, t_max and tau_a
    /// must be maturity nodes).
    #[error("grid nesting violation: {0}")]
    NestingViolation(String),

    /// A model was constructed with parameters outside its admissible range.
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    /// Adaptive quadrature failed to reach the requested tolerance within its
    /// subdivision budget.
    #[error("adaptive quadrature did not converge: {0}")]
    QuadratureNonconvergence(String),

    /// A quadrature rule failed validation (nodes outside [0,1] or weights
    /// not summing to one).
    #[error("invalid quadrature rule: {0}")]
    InvalidQuadratureRule(String),

    /// The forward recursion produced a NaN or infinity, which signals a
    /// blow-up of the discrete state.
    #[error("non-finite state in forward recursion at step {step}: {detail}")]
    NonFiniteState { step: usize, detail: String },

    /// Wiener increments do not match the grid / model they are used with.
    #[error("increment mismatch: {0}")]
    IncrementMismatch(String),

    /// The requested operation is only defined for the nodal (EFD) scheme.
    #[error("scheme unsupported: {0}")]
    SchemeUnsupported(String),

    /// The requested oracle does not exist for this model/payoff combination.
    #[error("unsupported payoff for this oracle: {0}")]
    UnsupportedPayoff(String),

    /// The requested oracle does not exist for this model.
    #[error("unsupported model for this oracle: {0}")]
    UnsupportedModel(String),

    /// Adaptive sampling hit its budget before reaching the target
    /// statistical tolerance.
    #[error(
        "statistical tolerance unreachable: needed {target:.3e}, achieved {achieved:.3e} at M = {m}"
    )]
    TolUnreachable { target: f64, achieved: f64, m: u64 },

    /// Configuration input (file or CLI) failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
