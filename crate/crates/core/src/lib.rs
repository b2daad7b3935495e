//! Numerical core for the elastic FENE dumbbell micro-macro system without
//! velocity dissipation, linearised around the equilibrium `(0, ψ∞)`.
//!
//! The configuration variable `R` lives on the unit disk and is discretised
//! with a weighted Zernike-type Galerkin basis ([`ball`]); the macroscopic
//! variable `x` lives on a large periodic box and is handled pseudo-spectrally
//! ([`torus`]). [`micromacro`] couples the two, [`integrator`] advances the
//! coupled state with IMEX schemes and [`diagnostics`] measures norms, energy
//! functionals, Lyapunov pairs, Fourier-splitting masses and decay exponents.
//!
//! The crate is `no_std` and only needs `alloc`; everything touching files,
//! configuration or the command line lives in the `fene` crate.
#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod ball;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod initial;
pub mod integrator;
pub mod micromacro;
pub mod torus;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Configuration dimension of the dumbbell connector vector.
pub const CONFIG_DIM: usize = 2;
/// Dimension of the macroscopic domain.
pub const SPACE_DIM: usize = 2;
