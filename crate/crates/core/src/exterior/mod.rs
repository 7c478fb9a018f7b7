//! Sparse exterior algebra on `ℝⁿ` (n ≤ 16): forms, vectors, wedge and
//! interior products, and Hodge star for an arbitrary constant metric.

mod form;
mod index;
mod metric;

pub use form::{KForm, Vector};
pub use index::{MultiIndex, MAX_DIM};
pub use metric::{hodge_star, Metric};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExteriorError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("invalid multi-index {0:?} in dimension {1}")]
    InvalidIndex(Vec<usize>, usize),
    #[error("dimension {0} is not supported")]
    UnsupportedDimension(usize),
    #[error("interior product of a 0-form")]
    ZeroDegree,
    #[error("metric is not symmetric")]
    NotSymmetric,
    #[error("metric is not positive definite")]
    NotPositiveDefinite,
    #[error("metric is not invertible")]
    SingularMetric,
    #[error("{0} is not representable in this coefficient ring")]
    Unrepresentable(&'static str),
}
