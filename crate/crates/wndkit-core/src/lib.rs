//! Analysis toolkit for weakly nonlinear dissipative (WND) systems
//!
//! `∂_t W + A W + Q̄(W, W) = D̄ W`
//!
//! on the periodic torus: spectral splitting of the advection symbol, resonant
//! averaging of diffusion and quadratic terms, dissipativity diagnostics and a
//! pseudo-spectral integrator. The [`navier_stokes`] module builds the
//! compressible Navier-Stokes instance.
//!
//! The crate is `no_std` with `alloc` when the default `std` feature is off.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod averaging;
pub mod directions;
pub mod dissipativity;
pub mod error;
pub mod lattice;
pub mod linalg;
mod math;
pub mod navier_stokes;
mod par;
pub mod solver;
pub mod spectral;
pub mod state;
pub mod system;

pub use error::{Error, Result};
pub use lattice::FrequencyLattice;
pub use num_complex::Complex64;
pub use spectral::{frequency_spectrum, ModeDecomposition, Spectrum};
pub use state::SpectralState;
pub use system::{SpecData, SystemSpec};
