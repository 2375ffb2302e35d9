//! Exact phase structure of the Ising model with competing nearest-neighbour
//! and prolonged next-nearest-neighbour interactions on the Cayley tree of
//! order two.
//!
//! The partition function of an `n`-generation tree follows from a
//! four-dimensional recurrence `u -> F(u)`. Its fixed points and periodic
//! orbits determine the phases: paramagnetic fixed points on the symmetric
//! slice M1 ([`m1`]), ferromagnetic fixed points on the surface M2 ([`m2`]),
//! and commensurate or incommensurate behaviour from trajectories
//! ([`dynamics`]). [`partition`] evaluates partition functions and checks
//! the recurrence against exhaustive enumeration; [`scan`] drives
//! parameter-plane scans.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod m1;
pub mod m2;
pub mod model;
pub mod partition;
mod poly;
pub mod scan;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    apply_f_map, derive_params, m1_residual, m2_residual, phi, scalar_f, scalar_f_prime, scalar_g,
    BoltzmannParams, Couplings, StateVector,
};
