//! Phasor-based quadrilateral distance element.
//!
//! Voltages and currents are turned into full-cycle DFT phasors (currents
//! optionally through a mimic filter), loop impedances are formed for the six
//! fault loops, and each is tested against a zone polygon. The element picks
//! up when a loop impedance stays inside the zone for the final settle window
//! of the record.

mod dft;
mod zone;

use alloc::vec::Vec;

use num_complex::Complex64;
// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::phasor::{Impedance, Phasor};
use crate::relay_iq::LoopId;
use crate::system::{LineParams, PuBase};
use crate::waveform::WaveformRecord;

pub use dft::{compensated_dft, full_cycle_dft, Mimic};
pub use zone::ZonePolygon;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadSettings {
    pub zone: ZonePolygon,
    /// Loop currents below this magnitude give no impedance, pu.
    pub min_current: f64,
    /// Time a loop must stay inside before pickup, s.
    pub settle_time: f64,
    /// Mimic time constant for the currents, s; `None` disables it.
    pub mimic_tau: Option<f64>,
    pub fs: f64,
    pub line: LineParams,
    pub base: PuBase,
}

impl QuadSettings {
    /// Zone 1 at 0.8 with a 20 Ω resistive reach, 20 ms settle, plain DFT.
    /// [`QuadSettings::line_mimic_tau`] gives a matched mimic constant.
    pub fn new(line: LineParams, base: PuBase) -> Self {
        let z1 = line.z1_pu(&base);
        QuadSettings {
            zone: ZonePolygon::new(1, 0.8, z1, base.ohm_to_pu(20.0)),
            min_current: 0.05,
            settle_time: 0.02,
            mimic_tau: None,
            fs: 5000.0,
            line,
            base,
        }
    }

    /// Positive-sequence line time constant `L1/R1`, s.
    pub fn line_mimic_tau(&self) -> Option<f64> {
        (self.line.r1 > 0.0).then(|| self.line.l1 / self.line.r1)
    }

    pub fn validate(&self) -> Result<()> {
        self.zone.validate()?;
        if !(self.min_current > 0.0 && self.min_current.is_finite()) {
            return Err(invalid("min_current", "must be > 0"));
        }
        if !(self.settle_time >= 0.0 && self.settle_time.is_finite()) {
            return Err(invalid("settle_time", "must be >= 0"));
        }
        if let Some(tau) = self.mimic_tau {
            Mimic::new(tau, self.fs)?;
        }
        dft::window_len(self.fs, self.base.f_hz)?;
        self.line.validate()?;
        self.base.validate()
    }

    /// Residual compensation factor `k0 = (Z0 − Z1) / (3 Z1)`.
    pub fn k0(&self) -> Complex64 {
        let z1 = self.line.z1_pu(&self.base).to_complex();
        let z0 = self.line.z0_pu(&self.base).to_complex();
        (z0 - z1) / (3.0 * z1)
    }

    fn settle_samples(&self) -> usize {
        (self.settle_time * self.fs - 1e-6).ceil().max(1.0) as usize
    }
}

/// Per-sample phasors of the three voltages and currents.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasorStream {
    pub v: [Vec<Option<Phasor>>; 3],
    pub i: [Vec<Option<Phasor>>; 3],
}

pub fn phasor_estimate(rec: &WaveformRecord, s: &QuadSettings) -> Result<PhasorStream> {
    rec.validate()?;
    if (rec.fs - s.fs).abs() > 1e-9 * s.fs {
        return Err(invalid("fs", "record rate differs from the relay setting"));
    }
    let f0 = s.base.f_hz;
    let mimic = s.mimic_tau.map(|tau| Mimic::new(tau, s.fs)).transpose()?;
    let v = [0, 1, 2].map(|p| full_cycle_dft(&rec.v[p], rec.fs, f0, rec.t0));
    let i = [0, 1, 2].map(|p| match &mimic {
        Some(m) => compensated_dft(&rec.i[p], rec.fs, f0, rec.t0, m),
        None => full_cycle_dft(&rec.i[p], rec.fs, f0, rec.t0),
    });
    let [v0, v1, v2] = v;
    let [i0, i1, i2] = i;
    Ok(PhasorStream {
        v: [v0?, v1?, v2?],
        i: [i0?, i1?, i2?],
    })
}

/// Apparent impedance of one loop from one set of phase phasors.
pub fn loop_impedance(loop_id: LoopId, v: [Phasor; 3], i: [Phasor; 3], k0: Complex64, min_current: f64) -> Option<Impedance> {
    let (x, y) = loop_id.phases();
    let (num, den) = match y {
        None => {
            let i0 = (i[0].0 + i[1].0 + i[2].0) / 3.0;
            (v[x].0, i[x].0 + k0 * 3.0 * i0)
        }
        Some(y) => (v[x].0 - v[y].0, i[x].0 - i[y].0),
    };
    let i_loop = match y {
        None => i[x].0.norm(),
        Some(_) => den.norm(),
    };
    if !(i_loop >= min_current) || den.norm() == 0.0 {
        return None;
    }
    let z = Impedance::from_complex(num / den);
    z.is_finite().then_some(z)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopTrajectory {
    pub loop_id: LoopId,
    pub z: Vec<Option<Impedance>>,
    pub inside: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadDecision {
    /// Some loop settled inside the zone.
    pub tripped: bool,
    /// Time at which the settled loop had been inside for the settle window.
    pub trip_time: Option<f64>,
    pub tripping_loop: Option<LoopId>,
    /// A loop entered the zone at some point but none settled there.
    pub transient_overreach: bool,
    /// First sample time with any loop inside the zone.
    pub first_inside: Option<f64>,
    pub final_impedance: [Option<Impedance>; 6],
    pub trajectories: Vec<LoopTrajectory>,
    pub t0: f64,
    pub ts: f64,
}

pub fn evaluate(rec: &WaveformRecord, s: &QuadSettings) -> Result<QuadDecision> {
    s.validate()?;
    let ph = phasor_estimate(rec, s)?;
    let n = rec.len();
    let k0 = s.k0();
    let settle = s.settle_samples();

    let mut trajectories = Vec::with_capacity(6);
    let mut best: Option<(usize, LoopId)> = None;
    let mut first_inside: Option<usize> = None;
    for loop_id in LoopId::ALL {
        let z: Vec<Option<Impedance>> = (0..n)
            .map(|k| {
                let v = [ph.v[0][k]?, ph.v[1][k]?, ph.v[2][k]?];
                let i = [ph.i[0][k]?, ph.i[1][k]?, ph.i[2][k]?];
                loop_impedance(loop_id, v, i, k0, s.min_current)
            })
            .collect();
        let inside: Vec<bool> = z.iter().map(|z| z.is_some_and(|z| s.zone.contains(z))).collect();
        if let Some(k) = inside.iter().position(|&b| b) {
            first_inside = Some(first_inside.map_or(k, |f| f.min(k)));
        }
        let run = inside.iter().rev().take_while(|&&b| b).count();
        if run >= settle && n > 0 {
            let k = n - run + settle - 1;
            if best.is_none_or(|(b, _)| k < b) {
                best = Some((k, loop_id));
            }
        }
        trajectories.push(LoopTrajectory { loop_id, z, inside });
    }
    let final_impedance = core::array::from_fn(|l| trajectories[l].z.last().copied().flatten());
    Ok(QuadDecision {
        tripped: best.is_some(),
        trip_time: best.map(|(k, _)| rec.time(k)),
        tripping_loop: best.map(|(_, l)| l),
        transient_overreach: best.is_none() && first_inside.is_some(),
        first_inside: first_inside.map(|k| rec.time(k)),
        final_impedance,
        trajectories,
        t0: rec.t0,
        ts: rec.ts(),
    })
}
