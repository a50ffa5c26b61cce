//! Entanglement between the field modes of two evanescently coupled optical
//! cavities, one of which is pumped quadratically by a classical source.
//!
//! The crate offers several independent routes to the same physics:
//!
//! - [`binomial`]: closed forms for the pump-free evolution of `|N,0>`.
//! - [`heisenberg`]: the 4x4 Heisenberg-picture propagator for the pumped
//!   system, exponentiated through Cayley-Hamilton, and the transport of
//!   second moments through it.
//! - [`fock`]: a brute-force truncated Fock-space simulator used as the
//!   oracle for everything above.
//! - [`fluctuation`]: Monte-Carlo ensembles with a piecewise-constant,
//!   Gaussian-fluctuating pump.
//!
//! [`figures`] and [`audit`] build the tables and cross-check reports that
//! the command-line front end serializes.

pub mod audit;
pub mod binomial;
pub mod error;
pub mod figures;
pub mod fluctuation;
pub mod fock;
pub mod heisenberg;
pub mod params;

pub use error::{Error, Result};
pub use params::{ModelParams, ScaledTime};

pub use num_complex::Complex64 as C64;
