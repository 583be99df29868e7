//! Simulation core for heralded generation and fusion of atomic cluster states.
//!
//! Each atom sits in a one-sided two-mode cavity. Conditioned on the cavity
//! leaking a photon, the atom ends up entangled with the photon polarization;
//! a linear-optics network of wave plates and polarizing beam splitters plus
//! polarization-resolving detectors then post-selects an atomic cluster state.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised as:
//!
//! - [`hilbert`]: sparse state vectors over atom levels and photonic Fock modes.
//! - [`dynamics`]: non-Hermitian emission dynamics, loss channel totals,
//!   quantum-jump sampling and temporal wavepacket overlaps.
//! - [`optics`]: optical elements, networks, detection and feed-forward
//!   correction tables.
//! - [`protocol`]: four-atom generation rounds, restart, chain fusion and
//!   chain growth statistics.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too; index loops
// mirror the matrix algebra they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::large_enum_variant)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod math;
pub mod optics;
pub mod protocol;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
