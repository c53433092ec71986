//! # deformscope
//!
//! Desk-scale simulation of an optical readout for the three-dimensional
//! deformation of a small sphere. The scattered probe field is expanded in
//! Hermite-Gaussian modes, routed through two Mach-Zehnder postselection
//! stages and read out by balanced homodyne detection.
//!
//! Modules, bottom-up:
//!
//! - [`hgbasis`]: mode functions, Gauss-Hermite overlaps, scaling/shear
//!   generators and their exponentials.
//! - [`mie`]: Riccati-Bessel functions, Mie coefficients and amplitude
//!   functions.
//! - [`deform`]: mode content induced by waist-size and waist-position
//!   changes, first order and exact.
//! - [`weakmeas`]: weak values, postselection probabilities and port states.
//! - [`detect`]: homodyne signals, SNRs and minimum measurable deformations.
//! - [`fisher`]: quantum/classical Fisher information and Monte Carlo
//!   Cramer-Rao checks.
//! - [`pipeline`]: configuration, scenarios and file output used by the CLI.

#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod deform;
pub mod detect;
mod error;
pub mod fisher;
pub mod hgbasis;
pub mod mie;
pub mod pipeline;
pub mod weakmeas;

pub use error::{Error, Result};
pub use num_complex::Complex64;
