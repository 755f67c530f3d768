//! Numerical verification of almost contact complex Riemannian geometry.
//!
//! Models provide frame metrics, commutators and directional derivatives at
//! points; everything else (connection, curvature, structure tensors, Sasaki-like
//! and conformal checks) is computed pointwise in the model's frame and reported
//! as residuals.

pub mod conformal;
pub mod connection;
pub mod corpus;
pub mod error;
pub mod frame_algebra;
pub mod models;
pub mod report;
pub mod sampling;
pub mod sasaki;
pub mod structure;
pub mod verify;

pub use error::{GeometryError, Result};
