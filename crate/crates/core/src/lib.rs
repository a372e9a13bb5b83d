//! Imaginary Stark ladder: a tight-binding chain with linearly increasing
//! loss. Builds the model matrices, solves the non-Hermitian eigenproblem,
//! classifies the spectrum, evaluates the analytic Bessel solutions and
//! evolves single-particle correlations under the damping matrix.

pub mod error;
pub mod matrix;
pub mod lattice;
pub mod eigen;
pub mod fit;
pub mod spectral;
pub mod analytic;
pub mod dynamics;

pub use error::{Error, Result};
pub use lattice::{LatticeConfig, PotentialKind};
pub use matrix::ComplexMatrix;
