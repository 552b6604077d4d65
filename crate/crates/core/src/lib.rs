//! Numerical laboratory for degenerate fully nonlinear parabolic equations
//! `u_t = |Du|^(p-2) F(D^2 u)`.
//!
//! The crate provides closed-form solutions and barriers, an explicit stencil
//! solver, discrete contact-set constructions, a Vitali-type cylinder covering,
//! and harnesses that measure Harnack-type constants on intrinsic cylinders.

pub mod contact;
pub mod covering;
pub mod error;
pub mod field_io;
pub mod grid;
pub mod harnack;
pub mod operators;
pub mod params;
pub mod region;
pub mod scaling;
pub mod solutions;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Grid, ScalarField, Slice, SpatialGrid};
pub use operators::{OperatorKind, OperatorSpec, SymMatrix};
pub use params::EllipticityParams;
pub use region::{Cylinder, Orientation, ParaboloidSet, Region};
pub use solutions::{AnalyticSolution, Jet, Regularity};
