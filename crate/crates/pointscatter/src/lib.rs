//! Numerical laboratory for the point-source inverse backscattering problem:
//! forward simulation of the scattered wave field of a compactly supported
//! potential, acquisition of backscatter data on the unit sphere, numerical
//! verification of the structural identities behind the uniqueness argument,
//! and layer-stripping reconstruction of radial potentials.
//!
//! See the crate's `examples/` directory for one runnable example per major
//! capability, and the `pointscatter` binary for config-driven runs.

pub mod error;
pub mod quad;
pub mod sphere_geometry;
pub mod harmonics;
pub mod potential;
pub mod spherical_means;
pub mod forward_solver;
pub mod identity_lab;
pub mod inversion;
pub mod cli;

pub use error::{PsError, Result};
pub use potential::Potential;
pub use sphere_geometry::{Point, SourcePoint, SphereGrid};
