//! Geometric-optics simulation of transmissive mirror device (TMD) displays.
//!
//! A TMD is a plate of micro dihedral corner reflectors that forms a real
//! image of a light source at its mirror position across the plate. This
//! crate traces rays through TMD, half-mirror and curved-mirror layouts,
//! computes their viewing angles in closed form, and renders what a camera
//! placed at the eye would see.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod elements;
pub mod error;
pub mod math;
pub mod render;
pub mod scene;
pub mod tracer;

pub use error::{Error, Result};
pub use math::{Mat3, Pose, Ray, RayMode, Vec3};
