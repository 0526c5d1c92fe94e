//! Gaussian entire functions, their zero sets, and random spherical waves.

pub mod constants;
pub mod error;
pub mod gef;
pub mod kpoint;
pub mod nodal;
pub mod percolation;
pub mod randomness;
pub mod special;
pub mod sphere_waves;
pub mod spectral_stats;
pub mod stats;
pub mod transport;
pub mod unionfind;
pub mod zeros;

pub use error::{Error, Result};
pub use gef::{PerturbedLattice, Square, TruncatedGef};
pub use num_complex::Complex64;
pub use randomness::GaussianStream;
