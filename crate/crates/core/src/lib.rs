//! Numerical laboratory for quasilocal mass functionals on initial data sets.
//!
//! The crate provides, on top of a shared spherical-grid toolbox:
//!
//! * catalog and sampled initial data sets `(M, g, k)` with constraint
//!   densities, dominant-energy checks and ADM energy-momentum
//!   ([`initial_data`]),
//! * closed 2-surfaces with their induced and extrinsic geometry
//!   ([`surface`]),
//! * isometric embedding of convex 2-metrics into Euclidean 3-space
//!   ([`embedding`]),
//! * Brown-York, Kijowski-Liu-Yau, Wang-Yau style and vector-field-modified
//!   quasilocal masses ([`masses`]),
//! * rotationally symmetric quasi-spherical extension flows ([`flow`]),
//! * shield thresholds and fill-in obstruction quantities ([`shields`]).
//!
//! Conventions used throughout: a round sphere of radius `r` in flat space
//! has mean curvature `H = 2/r` with respect to the outward normal, and every
//! mass report carries both the raw surface integral and the value normalized
//! by `8π` (three spatial dimensions). All quadrature on closed surfaces is
//! Gauss-Legendre in `cos θ` times a uniform trapezoid rule in `φ`, and all
//! reductions run in a fixed order so that repeated runs are bit-identical.

pub mod algebra;
pub mod embedding;
pub mod error;
pub mod fd;
pub mod flow;
pub mod harmonics;
pub mod initial_data;
pub mod masses;
pub mod quad;
pub mod shields;
pub mod sphere;
pub mod surface;

pub use error::Error;

/// Crate version string recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Normalization constant dividing raw mass integrals in three dimensions:
/// `2 (n-1) ω_{n-1} = 8π` for `n = 3`.
pub const MASS_NORMALIZATION: f64 = 8.0 * std::f64::consts::PI;
