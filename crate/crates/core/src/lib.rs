//! Numerical core for studying incremental-quantity (IQ) distance protection
//! next to grid-forming inverters.
//!
//! Everything here is pure computation on per-unit quantities:
//!
//! - [`netmodel`]: closed-form steady-state solution of the per-phase IQ
//!   network, with an independent nodal solver used to certify it.
//! - [`emtsim`]: trapezoidal-rule EMT simulation of the two-source test
//!   system with scheduled or behavioural source dynamics.
//! - [`relay_iq`]: sample-based IQ distance element (memory, six loops,
//!   running sums, threshold and consecutive-time trip logic).
//! - [`relay_quad`]: full-cycle DFT quadrilateral distance element used as
//!   the baseline.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod linalg;

pub mod emtsim;
pub mod netmodel;
pub mod phasor;
pub mod relay_iq;
pub mod relay_quad;
pub mod system;
pub mod waveform;

pub use error::{Error, Result};
pub use phasor::{ComplexProduct, Impedance, Phasor};
pub use system::{LineParams, PreFaultLoad, PuBase, SourceSpec, SystemConfig};
pub use waveform::WaveformRecord;
