//! Layer-multiple-scattering optics of finite photonic crystal films.
//!
//! Computes reflectance, transmittance, absorbance and (through Kirchhoff's
//! law) emissivity of stacks built from 2D-periodic planes of spheres and
//! homogeneous plates, plus a 1D transfer-matrix engine and complex band
//! structures of the infinitely repeated unit slice.
//!
//! Frequencies are `ω a / c` (speed of light and the length unit `a` set to
//! one) unless a scene selects the ordinary-frequency convention.

// links the system BLAS/LAPACK
extern crate lapack_src;

pub mod band;
pub mod emissivity;
pub mod error;
pub mod lattice;
pub mod layer;
pub mod mie;
pub mod numeric;
pub mod onedim;
pub mod output;
pub mod scene;
pub mod specfun;
pub mod stack;
pub mod structure;
pub mod validate;
pub mod vswf;

pub use error::{Error, Result};
