//! Numerical laboratory for area-preserving twist maps of the annulus.
//!
//! - [`maps`]: lifted twist maps with exact derivatives.
//! - [`torsion`]: the angle cocycle of the derivative, torsion, conjugate points.
//! - [`curves`]: the curves `Psi_1`, `Psi_-1`, flux, rotation numbers and the periodic-orbit curves.
//! - [`stats`]: grid and Monte-Carlo scans of torsion, first-return sums.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod curves;
pub mod maps;
pub mod stats;
pub mod torsion;

pub use maps::{LiftedMap, Mat2, Point};
