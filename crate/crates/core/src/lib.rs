//! Driven-dissipative Bose-Hubbard chain of Kerr cavities with a linear
//! frequency tilt.
//!
//! The crate covers the Wannier-Stark basis of the tilted lattice, mean-field
//! and second-order cumulant dynamics, observables that distinguish
//! stationary, oscillatory and chaotic regimes, and parallel parameter sweeps.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod linalg;
pub mod model;
pub mod wannier_stark;
pub mod dynamics;
pub mod observables;
pub mod config;
pub mod sweep;
pub mod cli;

pub use error::{Error, Result};
pub use model::{LatticeParams, PumpProfile};
