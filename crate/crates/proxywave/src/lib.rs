//! Fast evaluation of 2D Helmholtz transmission wavefields from boundary
//! data, accelerated by proxy-surface interpolative decomposition.
//!
//! Given the trace `u` and scaled flux `q` of a transmission solution on a
//! discretized scatterer boundary, this crate evaluates the field on dense
//! point grids near the scatterer four ways:
//!
//! - `conv` - direct summation of the discretized layer potentials,
//! - `fast_u` - skeletonized evaluation points inside each unit cell,
//! - `fast_uv` - skeletons on both sides, multi-level boundary compression,
//! - `fast_uv_vtailored` - both sides, single-level compression with proxy
//!   test points tailored to off-boundary targets.
//!
//! An analytic series solution for a circular dielectric scatterer supplies
//! boundary data and ground truth. The `proxywave` binary drives the whole
//! benchmark; see the crate examples for library usage.

pub mod bessel;
pub mod error;
pub mod evaluator;
pub mod experiment;
pub mod geometry;
pub mod id;
pub mod kernel;
pub mod oracle;
pub mod skeleton;

pub use error::{Error, Result};
