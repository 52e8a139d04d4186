//! Coordinate charts, jet-valued fields and the curvature stack.

pub mod calculus;
pub mod chart;
pub mod field;
pub mod geometry;
pub mod jet;
pub mod ops;
pub mod tensor;

pub use chart::{Chart, Point, Sampler};
pub use field::{Field, FieldKind};
pub use geometry::Geometry;
pub use jet::Jet;
pub use ops::{
    christoffel, covariant_derivative, curvature, divergence, exterior_derivative,
    hessian_laplacian, lie_derivative, rough_laplacian_vector, sectional, Christoffel,
    CurvatureData, Divergence,
};
pub use tensor::{Slot, Tensor};
