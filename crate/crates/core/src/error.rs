use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(
        "metric is degenerate or not positive definite at {point:?} (smallest pivot {pivot:e})"
    )]
    DegenerateMetric { point: Vec<f64>, pivot: f64 },

    #[error("vectors span a degenerate plane (area² = {area2:e})")]
    DegeneratePlane { area2: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{function} is undefined at argument {argument} (point {point:?})")]
    Domain {
        function: &'static str,
        argument: f64,
        point: Vec<f64>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("warp function is not basic: max |ξ f| = {defect:e}")]
    NonBasic { defect: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("{what} requires jets of order {needed}, have {available}")]
    InsufficientOrder {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("non-finite residual at parameters {params:?} (iteration {iteration})")]
    NonFinite { params: Vec<f64>, iteration: usize },
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
