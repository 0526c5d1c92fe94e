use thiserror::Error;

/// Failure modes shared by every module of the crate.
///
/// The variants are coarse on purpose: the experiment harness maps them onto
/// process exit codes (configuration vs resource vs numerical failures).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Query outside the region where an object is certified.
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid parameters or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// A size limit (degree, grid resolution, ...) would be exceeded.
    #[error("resource limit: {0}")]
    Resource(String),
    /// An iterative method failed, or two independent numerical routes disagree.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Degenerate input, e.g. coincident points or a constant sample.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A Monte Carlo regime that cannot be sampled with the given budget.
    #[error("infeasible regime: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
