//! Nonconforming finite elements for the Stokes equations on a curved
//! two-dimensional domain.
//!
//! The velocity space is the quadratic Fortin-Soulie element mapped by a
//! contravariant Piola transform onto isoparametrically curved triangles:
//! continuous vector P2 shape functions enriched elementwise by the
//! Gauss-Legendre bubble. The pressure space is discontinuous mapped P1.
//! On top of the plain Galerkin scheme the library implements a
//! divergence-free velocity reconstruction into a parametric
//! Raviart-Thomas space which makes the discretization pressure robust:
//! gradient forcings are annihilated exactly and velocity errors become
//! independent of the viscosity.
//!
//! The mesh generator triangulates the unit disk with concentric rings and
//! bends only the outermost edge layer, so all interior elements stay
//! affine. The `harness` module carries the manufactured problems, error
//! norms and convergence drivers behind the `curved-stokes` binary.

pub mod assembly;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod operators;
pub mod refelem;
pub mod spaces;

pub use error::{Error, Result};
