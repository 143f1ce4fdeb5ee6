//! Pilot-wave dynamics, GRW collapse and Afshar-type interferometry on
//! uniform spectral grids.
//!
//! The crate is organised bottom-up: [`grid`] and [`spectral`] hold the
//! discretisation, [`propagator`] advances wave fields, [`bohmian`] moves
//! particles along the guidance field, and the remaining modules build
//! scenarios and bookkeeping on top.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod afshar;
pub mod bohmian;
pub mod classical;
pub mod duality;
pub mod error;
pub mod grid;
pub mod grw;
pub mod io;
pub mod packet;
pub mod propagator;
pub mod seeds;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{make_grid, Axis, Grid, PolarDecomposition, WaveField};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
