//! Paired-comparison ranking of perceived triangle-mesh quality.
//!
//! The crate covers the whole offline pipeline: preparing mesh stimuli at
//! fixed triangle budgets ([`mesh`], [`decimate`]), running forced-choice
//! sessions ([`protocol`]), simulating observers ([`observer`]) and
//! analysing the results ([`analysis`]).
//!
//! Geometry is generic over [`Real`] (`f32` or `f64`); preference scores are
//! exact [`Rational`]s. The aliases below fix the common choices.

pub mod analysis;
pub mod decimate;
pub mod geometry;
pub mod mesh;
pub mod observer;
pub mod protocol;
pub mod scalar;
pub mod shapes;

pub use scalar::{Rational, Real};

/// Double-precision mesh, the default stimulus representation.
pub type Mesh = mesh::TriMesh<f64>;
/// Single-precision mesh.
pub type Mesh32 = mesh::TriMesh<f32>;
