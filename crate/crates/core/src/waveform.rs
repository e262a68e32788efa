//! Sampled three-phase record at the relay location.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

/// Uniformly sampled relay-bus voltages and line currents (pu, peak-based).
#[derive(Clone, Debug, PartialEq)]
pub struct WaveformRecord {
    /// Sampling rate, Hz.
    pub fs: f64,
    /// Time of the first sample, s.
    pub t0: f64,
    /// Phase voltages a, b, c.
    pub v: [Vec<f64>; 3],
    /// Phase currents a, b, c, relay bus into the line.
    pub i: [Vec<f64>; 3],
}

impl WaveformRecord {
    pub fn len(&self) -> usize {
        self.v[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ts(&self) -> f64 {
        1.0 / self.fs
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.fs
    }

    /// First sample index at or after `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let k = ((t - self.t0) * self.fs - 1e-9).ceil();
        if k <= 0.0 {
            0
        } else {
            k as usize
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(invalid("fs", "sampling rate must be > 0"));
        }
        if !self.t0.is_finite() {
            return Err(invalid("t0", "must be finite"));
        }
        let n = self.len();
        if self.v.iter().chain(self.i.iter()).any(|c| c.len() != n) {
            return Err(invalid("channels", "all channels must have the same length"));
        }
        if self
            .v
            .iter()
            .chain(self.i.iter())
            .any(|c| c.iter().any(|x| !x.is_finite()))
        {
            return Err(invalid("channels", "samples must be finite"));
        }
        Ok(())
    }
}
