//! Fractional Sobolev seminorms on bounded domains and their behaviour as
//! the fractional order `s` tends to zero.
//!
//! The crate provides regions and fields on ℝ^d (`d = 1, 2, 3`), numerical
//! localized seminorms with tail splitting, the mass-at-infinity functional
//! that controls the small-`s` limit, closed forms for that limit, and a
//! Gaussian-weighted variant built on the Ornstein–Uhlenbeck semigroup.

pub mod acceptance;
pub mod asymptotics;
pub mod error;
pub mod fields;
pub mod gausskernel;
pub mod geometry;
pub mod limits;
pub mod mass;
pub mod quad;
pub mod seminorm;
pub mod sphere;

pub use error::{Error, Result};
pub use fields::{AngularFunction, RadialProfile, ScalarField, TailModel};
pub use geometry::{sphere_measure, AngularSet, Region, ShellPattern, SphereConstant};
pub use quad::{ErrorKind, EstimateWithError, QuadratureSpec};
