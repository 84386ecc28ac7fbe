//! Coupled 3D-1D solute transport between a vessel and the surrounding tissue.
//!
//! The tissue concentration uses continuous P1 elements on a Kuhn
//! tetrahedral mesh, the vessel concentration uses interior penalty DG along
//! the centerline, and both are advanced with backward Euler. The two
//! unknowns exchange solute through the lateral average of the tissue field
//! over the vessel wall.

pub mod coupling;
pub mod dg1d;
pub mod error;
pub mod fem3d;
pub mod field;
pub mod geometry;
pub mod linalg;
pub mod mesh3d;
pub mod par;
pub mod quadrature;
pub mod stepper;
pub mod verify;
pub mod vtk;

pub use error::{Error, Result};
pub use geometry::Vec3;
pub use par::Parallelism;
