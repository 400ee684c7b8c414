//! Numerical laboratory for exponentially small non-adiabatic transitions.
//!
//! The crate is organised bottom-up: [`linalg`] and [`jet`] provide 2×2 linear
//! algebra and Taylor arithmetic, [`hamiltonians`] the analytic model families,
//! [`propagator`] the unitary integrators, [`superadiabatic`] the iterated
//! projector hierarchy, [`asymptotics`] the closed-form and contour predictions
//! and [`bo_scattering`] the one-dimensional Born–Oppenheimer scattering model.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive x.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bo_scattering;
pub mod contour;
pub mod error;
pub mod hamiltonians;
pub mod jet;
pub mod linalg;
pub mod propagator;
pub mod quadrature;
pub mod superadiabatic;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
