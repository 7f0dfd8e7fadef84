use thiserror::Error;

/// Errors raised by evaluation, quadrature and the moment tables.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature did not reach its tolerance.
    #[error("quadrature did not converge: {what} (estimated error {estimate:e}, {subdivisions} subdivisions)")]
    Quadrature {
        what: String,
        estimate: f64,
        subdivisions: usize,
    },

    /// A series hit `k_max` before its tail criterion was met.
    #[error("series truncation failed at k = {k_max}: {what}")]
    Truncation { what: String, k_max: usize },

    /// A request went past the end of an implemented table.
    #[error("index {requested} is outside the {table} table (supported: {supported})")]
    Range {
        table: &'static str,
        requested: usize,
        supported: String,
    },

    /// Writing a report failed.
    #[error("serialization failed: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
