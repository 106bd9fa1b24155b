//! Numerical and combinatorial toolkit for self-repellent Brownian bridges
//! and the cycle statistics of an interacting Bose gas.
//!
//! * [`paths`]: discretized bridges, pair potentials, the Hamiltonian.
//! * [`gamma`]: Monte Carlo bridge weights, connective constant, critical
//!   density, scaling fits.
//! * [`laces`]: breakpoints, irreducible graphs, laces, compatible edges.
//! * [`pi`]: irreducible-graph sums and the renewal identity.
//! * [`thermo`]: rate functions, tilt parameter, free energy.
//! * [`permsample`]: exact cycle-weighted partition sampling.
//! * [`greenlab`]: Green functions, grid convolution algebra, deconvolution.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gamma;
pub mod greenlab;
pub mod laces;
pub mod paths;
pub mod permsample;
pub mod pi;
pub mod rng;
pub mod stats;
pub mod thermo;

pub use error::{Error, Result};
pub use rng::RngSpec;

/// Version string written into output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
