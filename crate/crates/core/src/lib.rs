//! Bound states in the continuum formed by two atomic ensembles at the ends of
//! a one-dimensional coupled-cavity array.
//!
//! - [`model`]: parameters and fixed-excitation-number bases
//! - [`operators`]: sparse Hamiltonian, ladder and normal-mode operators
//! - [`bic`]: the analytic trapped states and their checks
//! - [`dynamics`]: master-equation evolution and the collective-spin picture
//! - [`linear`]: linearized quality-factor analysis of the triple-cavity case

pub mod bic;
pub mod dynamics;
pub mod linear;
pub mod model;
pub mod operators;
pub mod sparse;

pub use num_complex::Complex64 as C64;
