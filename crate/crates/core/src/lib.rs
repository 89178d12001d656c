//! Numerical laboratory for the dynamic Schrödinger operator in a twisted
//! quantum waveguide.
//!
//! The crate assembles the twisted Hamiltonian and the matching
//! Laplace–Beltrami operator on an embedded-boundary grid, evolves the
//! Schrödinger system with Crank–Nicolson, builds the singular-in-time
//! Carleman weights and checks the associated inequalities numerically, and
//! reconstructs the second derivative of the twisting function from interior
//! or boundary measurements.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod carleman;
pub mod config;
mod error;
pub mod experiment;
pub mod forward;
pub mod geometry;
pub mod inverse;
pub mod linalg;
pub mod metric;
pub mod operator;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};

/// Complex scalar used for every wave field.
pub type C64 = num_complex::Complex64;
