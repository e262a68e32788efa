//! Sample-based incremental-quantity distance element.
//!
//! Processing chain for one record:
//!
//! 1. memory IQs `x[n] − x[ref(n)]` with `ref(n) = n − pN` until a
//!    disturbance is detected, after which the reference is frozen to the
//!    last pre-disturbance window of `pN` samples;
//! 2. third-order Butterworth low-pass filtering of the IQs and of the raw
//!    channels that feed the restraint;
//! 3. operating and restraining quantities for the loops AG, BG, CG, AB, BC
//!    and CA;
//! 4. running sums armed by the detector, and the trip rule.

mod filter;
mod trip;

use alloc::vec::Vec;

// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::system::{LineParams, PuBase};
use crate::waveform::WaveformRecord;

pub use filter::Butterworth3;
pub use trip::{first_trip, running_sum, LoopState, RunningSum, TripMode, TripRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LoopId {
    AG,
    BG,
    CG,
    AB,
    BC,
    CA,
}

impl LoopId {
    pub const ALL: [LoopId; 6] = [LoopId::AG, LoopId::BG, LoopId::CG, LoopId::AB, LoopId::BC, LoopId::CA];

    pub fn name(self) -> &'static str {
        match self {
            LoopId::AG => "AG",
            LoopId::BG => "BG",
            LoopId::CG => "CG",
            LoopId::AB => "AB",
            LoopId::BC => "BC",
            LoopId::CA => "CA",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        LoopId::ALL.into_iter().find(|l| l.name().eq_ignore_ascii_case(s))
    }

    /// Phase indices: `(x, None)` for LG loops, `(x, Some(y))` for LL loops.
    pub fn phases(self) -> (usize, Option<usize>) {
        match self {
            LoopId::AG => (0, None),
            LoopId::BG => (1, None),
            LoopId::CG => (2, None),
            LoopId::AB => (0, Some(1)),
            LoopId::BC => (1, Some(2)),
            LoopId::CA => (2, Some(0)),
        }
    }
}

/// Disturbance detector that arms the running sums and freezes the memory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorSettings {
    /// Current IQ pickup, pu.
    pub di_pickup: f64,
    /// Voltage IQ pickup, pu.
    pub dv_pickup: f64,
    /// Time the pickup must persist, s.
    pub confirm_time: f64,
    /// How far before the first picked-up sample the memory is frozen, s.
    pub freeze_guard: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        DetectorSettings {
            di_pickup: 0.05,
            dv_pickup: 0.02,
            confirm_time: 1e-3,
            freeze_guard: 2e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaySettings {
    /// Reach as a fraction of the line length.
    pub m: f64,
    /// Memory depth in fundamental cycles.
    pub p: usize,
    /// Restraint bias.
    pub k_rst: f64,
    /// Expected sampling rate, Hz.
    pub fs: f64,
    /// Low-pass cutoff, Hz; `None` disables the filter.
    pub lp_cutoff: Option<f64>,
    pub trip_mode: TripMode,
    /// Threshold-mode trip level, pu·s.
    pub threshold_level: f64,
    /// Consecutive-time hold, s.
    pub hold_time: f64,
    pub line: LineParams,
    pub base: PuBase,
    pub detector: DetectorSettings,
}

impl RelaySettings {
    /// Reach 0.8, p = 2, K = 1, 5 kHz, 450 Hz filter, 12 ms consecutive-time hold.
    pub fn new(line: LineParams, base: PuBase) -> Self {
        RelaySettings {
            m: 0.8,
            p: 2,
            k_rst: 1.0,
            fs: 5000.0,
            lp_cutoff: Some(450.0),
            trip_mode: TripMode::ConsecutiveTime,
            threshold_level: 0.02,
            hold_time: 0.012,
            line,
            base,
            detector: DetectorSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(invalid("m", "reach must lie in (0, 1)"));
        }
        if self.p < 1 {
            return Err(invalid("p", "memory depth must be at least one cycle"));
        }
        if !(self.k_rst >= 1.0 && self.k_rst.is_finite()) {
            return Err(invalid("k_rst", "restraint bias must be >= 1"));
        }
        self.samples_per_cycle()?;
        if let Some(fc) = self.lp_cutoff {
            Butterworth3::new(fc, self.fs)?;
        }
        if !(self.hold_time >= 0.010 - 1e-12 && self.hold_time.is_finite()) {
            return Err(invalid("hold_time", "must be at least 10 ms"));
        }
        if !(self.threshold_level > 0.0 && self.threshold_level.is_finite()) {
            return Err(invalid("threshold_level", "must be > 0"));
        }
        let d = &self.detector;
        if !(d.di_pickup > 0.0 && d.dv_pickup > 0.0 && d.confirm_time >= 0.0 && d.freeze_guard >= 0.0) {
            return Err(invalid("detector", "pickups must be > 0 and times >= 0"));
        }
        self.line.validate()?;
        self.base.validate()
    }

    /// Samples per fundamental cycle; `fs` must be an integer multiple of
    /// the nominal frequency.
    pub fn samples_per_cycle(&self) -> Result<usize> {
        let r = self.fs / self.base.f_hz;
        if !(r >= 4.0) || (r - r.round()).abs() > 1e-9 * r {
            return Err(invalid("fs", "must be an integer multiple (>= 4) of the nominal frequency"));
        }
        Ok(r.round() as usize)
    }

    pub fn hold_samples(&self) -> usize {
        (self.hold_time * self.fs - 1e-6).ceil() as usize
    }

    /// Per-unit line data `(R1, L1, R0, L0)` with L in pu·s.
    fn line_pu(&self) -> [f64; 4] {
        let zb = self.base.z_base();
        [self.line.r1 / zb, self.line.l1 / zb, self.line.r0 / zb, self.line.l0 / zb]
    }
}

/// Disturbance detection result, as sample indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Detection {
    /// First sample of the picked-up run.
    pub start: usize,
    /// Sample at which the pickup was confirmed; running sums arm here.
    pub confirm: usize,
    /// First sample excluded from the frozen memory window.
    pub freeze: usize,
}

/// Incremental quantities and filtered raw channels of one record.
#[derive(Clone, Debug, PartialEq)]
pub struct IqFrontEnd {
    /// Filtered voltage IQs, phases a, b, c.
    pub dv: [Vec<f64>; 3],
    /// Filtered current IQs, phases a, b, c.
    pub di: [Vec<f64>; 3],
    /// Filtered phase voltages.
    pub v: [Vec<f64>; 3],
    /// Filtered phase currents.
    pub i: [Vec<f64>; 3],
    /// Memory reference index per sample; `None` while history is short.
    pub reference: Vec<Option<usize>>,
    pub detection: Option<Detection>,
    pub ts: f64,
    pub t0: f64,
}

fn frozen_reference(n: usize, freeze: usize, span: usize) -> usize {
    let k = (n - freeze) / span + 1;
    n - k * span
}

/// Computes memory IQs, runs the detector and applies the low-pass filter.
pub fn incremental(rec: &WaveformRecord, s: &RelaySettings) -> Result<IqFrontEnd> {
    rec.validate()?;
    s.validate()?;
    if (rec.fs - s.fs).abs() > 1e-9 * s.fs {
        return Err(invalid("fs", "record sampling rate differs from the relay setting"));
    }
    let span = s.p * s.samples_per_cycle()?;
    let len = rec.len();
    if len <= span {
        return Err(Error::InsufficientHistory {
            needed: span + 1,
            available: len,
        });
    }
    let make_filter = || s.lp_cutoff.map(|fc| Butterworth3::new(fc, s.fs)).transpose();
    let ts = rec.ts();
    let confirm_len = ((s.detector.confirm_time * s.fs) - 1e-6).ceil().max(1.0) as usize;
    let guard = (s.detector.freeze_guard * s.fs).round() as usize;

    let mut filters: Vec<Option<Butterworth3>> = (0..6).map(|_| make_filter()).collect::<Result<_>>()?;
    let mut dv: [Vec<f64>; 3] = core::array::from_fn(|_| Vec::with_capacity(len));
    let mut di: [Vec<f64>; 3] = core::array::from_fn(|_| Vec::with_capacity(len));
    let mut reference = Vec::with_capacity(len);
    let mut detection: Option<Detection> = None;
    let mut run_start: Option<usize> = None;

    for n in 0..len {
        let r = match detection {
            Some(d) if n >= d.freeze => Some(frozen_reference(n, d.freeze, span)),
            _ if n >= span => Some(n - span),
            _ => None,
        };
        reference.push(r);
        let mut picked = false;
        for ph in 0..3 {
            let (x_v, x_i) = match r {
                Some(r) => (rec.v[ph][n] - rec.v[ph][r], rec.i[ph][n] - rec.i[ph][r]),
                None => (0.0, 0.0),
            };
            let yv = filters[ph].as_mut().map_or(x_v, |f| f.step(x_v));
            let yi = filters[3 + ph].as_mut().map_or(x_i, |f| f.step(x_i));
            dv[ph].push(yv);
            di[ph].push(yi);
            picked |= yv.abs() > s.detector.dv_pickup || yi.abs() > s.detector.di_pickup;
        }
        if detection.is_none() && r.is_some() {
            if picked {
                let start = *run_start.get_or_insert(n);
                if n + 1 - start >= confirm_len {
                    let freeze = start.saturating_sub(guard);
                    if freeze < span {
                        return Err(Error::InsufficientHistory {
                            needed: span + guard,
                            available: start,
                        });
                    }
                    detection = Some(Detection {
                        start,
                        confirm: n,
                        freeze,
                    });
                }
            } else {
                run_start = None;
            }
        }
    }

    let filt = |x: &Vec<f64>| -> Result<Vec<f64>> {
        Ok(match make_filter()? {
            Some(f) => f.apply(x),
            None => x.clone(),
        })
    };
    let v = [filt(&rec.v[0])?, filt(&rec.v[1])?, filt(&rec.v[2])?];
    let i = [filt(&rec.i[0])?, filt(&rec.i[1])?, filt(&rec.i[2])?];
    Ok(IqFrontEnd {
        dv,
        di,
        v,
        i,
        reference,
        detection,
        ts,
        t0: rec.t0,
    })
}

/// Central-difference derivative with one-sided ends.
pub fn derivative(x: &[f64], ts: f64) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| match (k, n) {
            (_, 0 | 1) => 0.0,
            (0, _) => (x[1] - x[0]) / ts,
            (k, n) if k == n - 1 => (x[k] - x[k - 1]) / ts,
            (k, _) => (x[k + 1] - x[k - 1]) / (2.0 * ts),
        })
        .collect()
}

/// Loop voltage minus the line drop up to the reach point:
/// `v_loop − m(R i_loop + L di_loop/dt)` with zero-sequence compensation
/// for LG loops. Applies equally to IQs and to total quantities.
fn reach_point_voltage(v: &[Vec<f64>; 3], i: &[Vec<f64>; 3], s: &RelaySettings, ts: f64) -> [Vec<f64>; 6] {
    let [r1, l1, r0, l0] = s.line_pu();
    let m = s.m;
    let n = v[0].len();
    let i0: Vec<f64> = (0..n).map(|k| (i[0][k] + i[1][k] + i[2][k]) / 3.0).collect();
    let di0 = derivative(&i0, ts);
    let dix: [Vec<f64>; 3] = core::array::from_fn(|p| derivative(&i[p], ts));
    LoopId::ALL.map(|l| match l.phases() {
        (x, None) => (0..n)
            .map(|k| {
                let drop = r1 * i[x][k] + (r0 - r1) * i0[k] + l1 * dix[x][k] + (l0 - l1) * di0[k];
                v[x][k] - m * drop
            })
            .collect(),
        (x, Some(y)) => (0..n)
            .map(|k| {
                let drop = r1 * (i[x][k] - i[y][k]) + l1 * (dix[x][k] - dix[y][k]);
                v[x][k] - v[y][k] - m * drop
            })
            .collect(),
    })
}

/// Operating quantities `|Δv − Δv_m|` for the six loops.
pub fn operating_quantities(fe: &IqFrontEnd, s: &RelaySettings) -> [Vec<f64>; 6] {
    reach_point_voltage(&fe.dv, &fe.di, s, fe.ts).map(|u| u.into_iter().map(f64::abs).collect())
}

/// Restraining quantities `K |v(ref) − v_m(ref)|` for the six loops; zero
/// while the memory is not yet filled.
pub fn restraining_quantities(fe: &IqFrontEnd, s: &RelaySettings) -> [Vec<f64>; 6] {
    let u = reach_point_voltage(&fe.v, &fe.i, s, fe.ts);
    u.map(|u| {
        fe.reference
            .iter()
            .map(|r| r.map_or(0.0, |r| s.k_rst * u[r].abs()))
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopTrace {
    pub loop_id: LoopId,
    pub psi_op: Vec<f64>,
    pub psi_rst: Vec<f64>,
    pub e_sum: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelayDecision {
    pub tripped: bool,
    pub trip_time: Option<f64>,
    pub tripping_loop: Option<LoopId>,
    /// Time at which the detector confirmed a disturbance.
    pub detection_time: Option<f64>,
    /// Running-sum state of every loop at the end of the record.
    pub final_states: [LoopState; 6],
    /// Sample-aligned traces; sample k is at `t0 + k ts`.
    pub traces: Vec<LoopTrace>,
    pub t0: f64,
    pub ts: f64,
}

/// Runs the complete element over one record.
pub fn evaluate(rec: &WaveformRecord, s: &RelaySettings) -> Result<RelayDecision> {
    let fe = incremental(rec, s)?;
    let op = operating_quantities(&fe, s);
    let rst = restraining_quantities(&fe, s);
    let n = rec.len();
    let ts = fe.ts;
    let cycle = s.samples_per_cycle()?;
    let rule = TripRule {
        mode: s.trip_mode,
        threshold_level: s.threshold_level,
        hold_samples: s.hold_samples(),
        ts,
    };
    let arm = fe.detection.map(|d| d.confirm);

    let mut sums: Vec<RunningSum> = LoopId::ALL.iter().map(|&l| RunningSum::new(l, ts, cycle)).collect();
    let mut e: [Vec<f64>; 6] = core::array::from_fn(|_| alloc::vec![0.0; n]);
    let mut trip: Option<(usize, LoopId)> = None;
    if let Some(arm) = arm {
        for k in arm..n {
            let t = rec.time(k);
            for (l, acc) in sums.iter_mut().enumerate() {
                let st = acc.push(op[l][k] - rst[l][k], t);
                e[l][k] = st.e_sum;
                if trip.is_none() && rule.trips(&st, t) {
                    trip = Some((k, st.loop_id));
                }
            }
        }
    }

    let final_states = core::array::from_fn(|l| sums[l].state());
    let traces = LoopId::ALL
        .iter()
        .enumerate()
        .zip(op.into_iter().zip(rst).zip(e))
        .map(|((_, &loop_id), ((psi_op, psi_rst), e_sum))| LoopTrace {
            loop_id,
            psi_op,
            psi_rst,
            e_sum,
        })
        .collect();
    Ok(RelayDecision {
        tripped: trip.is_some(),
        trip_time: trip.map(|(k, _)| rec.time(k)),
        tripping_loop: trip.map(|(_, l)| l),
        detection_time: arm.map(|k| rec.time(k)),
        final_states,
        traces,
        t0: rec.t0,
        ts,
    })
}
