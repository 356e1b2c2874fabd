//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]. The variants are grouped by how a
//! caller should react: `Input`/`Domain` mean the request itself was malformed,
//! `Inconclusive`/`Solver`/`Consistency` mean the numerics could not certify an
//! answer, and `Invariant` means a constructed value violated a structural
//! guarantee (these indicate a bug or an impossible parameter combination, not
//! a tolerance issue).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input (bad JSON, negative weight, empty grid).
    #[error("invalid input: {0}")]
    Input(String),

    /// Mathematically well-formed input outside an operation's domain
    /// (e.g. a Stieltjes evaluation point on the support).
    #[error("domain error: {0}")]
    Domain(String),

    /// Quadrature neither converged nor produced a divergence certificate.
    #[error("quadrature inconclusive: {0}")]
    Inconclusive(String),

    /// Root finding or ODE integration failed to meet its tolerance.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Two independent evaluation routes disagreed beyond tolerance.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    /// A structural invariant would be violated (interlacing, positivity,
    /// residual threshold at construction time).
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// The requested quantity only exists for ergodic mechanisms.
    #[error("mechanism is not ergodic: {0}")]
    NonErgodic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
