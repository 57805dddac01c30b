use thiserror::Error;

/// Error type shared by the whole crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// Evaluation requested at (or too close to) a kernel singularity.
    #[error("singular evaluation point in {what}")]
    Singularity { what: &'static str },

    /// Adaptive quadrature stopped before reaching the requested tolerance.
    /// Carries the best estimate and its error bound.
    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound} > tol {tol}")]
    Quadrature {
        estimate: f64,
        error_bound: f64,
        tol: f64,
    },

    /// Inconsistent problem setup (missing traces, point inside body, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Picard iteration expanded instead of contracting.
    #[error("fixed-point iteration is not contracting (nu = {nu}, observed ratio {ratio})")]
    NonContraction { nu: f64, ratio: f64 },

    /// Iteration budget exhausted before the requested tolerance.
    #[error("no convergence after {iterations} iterations (last sup-difference {last_diff})")]
    MaxIterations { iterations: usize, last_diff: f64 },

    /// Least-squares fit could not be carried out.
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
