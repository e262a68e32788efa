//! Full-cycle DFT phasor estimation with an optional mimic pre-filter.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::phasor::Phasor;

/// Sliding full-cycle DFT referenced to absolute time, so a steady sinusoid
/// `Re(X e^{jωt})` yields the constant phasor `X`.
///
/// Entry `n` covers samples `n+1−N ..= n`; entries before the window is full
/// are `None`.
pub fn full_cycle_dft(x: &[f64], fs: f64, f0: f64, t0: f64) -> Result<Vec<Option<Phasor>>> {
    let n_win = window_len(fs, f0)?;
    if x.len() < n_win {
        return Err(Error::InsufficientHistory {
            needed: n_win,
            available: x.len(),
        });
    }
    let ts = 1.0 / fs;
    let w = 2.0 * PI * f0;
    // Kernel e^{-jωt_k}; the absolute phase of sample k repeats every cycle.
    let base: Vec<Complex64> = (0..n_win)
        .map(|k| Complex64::from_polar(1.0, -w * (t0 + k as f64 * ts)))
        .collect();
    let scale = 2.0 / n_win as f64;
    let mut out = Vec::with_capacity(x.len());
    for n in 0..x.len() {
        if n + 1 < n_win {
            out.push(None);
            continue;
        }
        let start = n + 1 - n_win;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &v) in x[start..=n].iter().enumerate() {
            acc += base[(start + k) % n_win] * v;
        }
        out.push(Some(Phasor(acc * scale)));
    }
    Ok(out)
}

pub(crate) fn window_len(fs: f64, f0: f64) -> Result<usize> {
    let r = fs / f0;
    if !(r >= 4.0) || (r - r.round()).abs() > 1e-9 * r {
        return Err(crate::error::invalid(
            "fs",
            "must be an integer multiple (>= 4) of the nominal frequency",
        ));
    }
    Ok(r.round() as usize)
}

/// Digital mimic filter `y[k] = (1 + a) x[k] − a x[k−1]`, `a = τ/ts`.
/// It cancels an exponential with time constant `τ` up to O(ts/τ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mimic {
    a: f64,
}

impl Mimic {
    pub fn new(tau: f64, fs: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite() && fs > 0.0) {
            return Err(crate::error::invalid("mimic_tau", "must be > 0"));
        }
        Ok(Mimic { a: tau * fs })
    }

    /// Complex gain at `f` Hz.
    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * f / fs);
        (1.0 + self.a) - z1 * self.a
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut prev = x.first().copied().unwrap_or(0.0);
        x.iter()
            .map(|&v| {
                let y = (1.0 + self.a) * v - self.a * prev;
                prev = v;
                y
            })
            .collect()
    }
}

/// DFT of the mimic-filtered signal, corrected by the mimic gain at `f0`.
pub fn compensated_dft(x: &[f64], fs: f64, f0: f64, t0: f64, mimic: &Mimic) -> Result<Vec<Option<Phasor>>> {
    let h = mimic.response(f0, fs);
    let y = mimic.apply(x);
    Ok(full_cycle_dft(&y, fs, f0, t0)?
        .into_iter()
        .map(|p| p.map(|p| Phasor(p.0 / h)))
        .collect())
}
