//! Numerical core for second-kind Fredholm integral equations
//! `λσ(s) = Kσ(s) + ω(s)` driven by a parameterized noise `ω`, and for
//! stochastic diagonal systems on `l_p`.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of immutable inputs; IO, configuration and reporting live in the
//! companion CLI crate.
//!
//! Layout:
//! - [`function_space`]: quadrature grids, grid functions, coefficient
//!   sequences and orthonormal Legendre bases.
//! - [`lp_operators`]: truncated infinite matrices, Hölder norm bounds,
//!   diagonal operators and the explicit stochastic diagonal solver.
//! - [`kernel_operators`]: Hilbert–Schmidt kernels, integral operators,
//!   pointwise multiplication operators and cut-off kernels.
//! - [`solvers`]: closed-form, Neumann and coefficient-space solvers.
//! - [`amz_verification`]: hypothesis checks, a-posteriori bounds and a
//!   sampled planar covering-rate estimator.
#![no_std]

extern crate alloc;

pub mod amz_verification;
mod error;
pub mod function_space;
pub mod kernel_operators;
pub mod linalg;
pub mod lp_operators;
pub mod solvers;

pub use error::{Error, Result};
