//! Computations with chirped-Gaussian Gabor systems.

pub mod cli;
pub mod error;
pub mod frame_bounds;
pub mod frft;
pub mod lattice_factor;
pub mod selftest;
pub mod window_algebra;
pub mod zak;

pub use error::{Error, Result};
pub use num_complex::Complex64;
