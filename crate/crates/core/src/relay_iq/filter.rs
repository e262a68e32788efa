//! Third-order Butterworth low-pass filter (bilinear transform with
//! frequency prewarping).

// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};

/// Cascade of a first-order section and a biquad, each in transposed
/// direct form II.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Butterworth3 {
    b1: [f64; 2],
    a1: f64,
    b2: [f64; 3],
    a2: [f64; 2],
    s1: f64,
    s2: [f64; 2],
}

impl Butterworth3 {
    pub fn new(cutoff_hz: f64, fs: f64) -> Result<Self> {
        if !(cutoff_hz > 0.0 && cutoff_hz < 0.5 * fs) {
            return Err(invalid("lp_cutoff", "cutoff must lie in (0, fs/2)"));
        }
        let k = (PI * cutoff_hz / fs).tan();
        let g1 = k / (1.0 + k);
        let d = 1.0 + k + k * k;
        let k2 = k * k / d;
        Ok(Butterworth3 {
            b1: [g1, g1],
            a1: (k - 1.0) / (k + 1.0),
            b2: [k2, 2.0 * k2, k2],
            a2: [(2.0 * k * k - 2.0) / d, (1.0 - k + k * k) / d],
            s1: 0.0,
            s2: [0.0; 2],
        })
    }

    pub fn reset(&mut self) {
        self.s1 = 0.0;
        self.s2 = [0.0; 2];
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let y1 = self.b1[0] * x + self.s1;
        self.s1 = self.b1[1] * x - self.a1 * y1;
        let y = self.b2[0] * y1 + self.s2[0];
        self.s2[0] = self.b2[1] * y1 - self.a2[0] * y + self.s2[1];
        self.s2[1] = self.b2[2] * y1 - self.a2[1] * y;
        y
    }

    /// Filters a whole channel from rest.
    pub fn apply(mut self, x: &[f64]) -> Vec<f64> {
        self.reset();
        x.iter().map(|&v| self.step(v)).collect()
    }
}
