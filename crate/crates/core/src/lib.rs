//! Verification and experimentation engine for almost S-structures on
//! coordinate charts.

pub mod catalog;
pub mod chart_core;
pub mod error;
pub mod expr;
pub mod identities;
pub mod report;
pub mod soliton;
pub mod structure;
pub mod warp;

pub use error::{GeometryError, Result};
