//! Running sums and trip criteria.

// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use super::LoopId;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TripMode {
    /// Trip when a running sum reaches `threshold_level` (V·s, pu).
    Threshold,
    /// Trip when a running sum has stayed strictly positive for `hold_time`.
    ConsecutiveTime,
}

/// Per-loop running-sum state after one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopState {
    pub loop_id: LoopId,
    /// Running sum, pu·s. Never negative.
    pub e_sum: f64,
    /// Set the first time the sum rises above zero; cleared after one
    /// fundamental cycle spent at zero.
    pub active: bool,
    /// Time at which the sum last rose above zero, while it stays above.
    pub above_zero_since: Option<f64>,
}

/// Streaming trapezoidal running sum clamped at zero.
#[derive(Clone, Debug)]
pub struct RunningSum {
    state: LoopState,
    ts: f64,
    prev_d: Option<f64>,
    /// Largest sum since it last left zero.
    peak: f64,
    zero_run: usize,
    reset_after: usize,
}

impl RunningSum {
    /// `reset_after` is the number of consecutive samples at zero that
    /// deactivate the loop.
    pub fn new(loop_id: LoopId, ts: f64, reset_after: usize) -> Self {
        RunningSum {
            state: LoopState {
                loop_id,
                e_sum: 0.0,
                active: false,
                above_zero_since: None,
            },
            ts,
            prev_d: None,
            peak: 0.0,
            zero_run: 0,
            reset_after,
        }
    }

    pub fn state(&self) -> LoopState {
        self.state
    }

    /// Adds the sample `psi_op − psi_rst` taken at time `t`. The first sample
    /// only seeds the trapezoid.
    pub fn push(&mut self, d: f64, t: f64) -> LoopState {
        if let Some(p) = self.prev_d {
            let e = self.state.e_sum + 0.5 * self.ts * (d + p);
            // A sum that integrates back to its start lands within round-off
            // of zero; count that as touching zero.
            self.state.e_sum = if e <= 1e-12 * self.peak { 0.0 } else { e };
            self.peak = if self.state.e_sum > 0.0 { self.peak.max(e) } else { 0.0 };
        }
        self.prev_d = Some(d);
        let s = &mut self.state;
        if s.e_sum > 0.0 {
            if s.above_zero_since.is_none() {
                s.above_zero_since = Some(t);
            }
            s.active = true;
            self.zero_run = 0;
        } else {
            s.above_zero_since = None;
            self.zero_run += 1;
            if self.zero_run >= self.reset_after {
                s.active = false;
            }
        }
        *s
    }
}

/// Running sum of `psi_op − psi_rst` from sample `arm` onward; earlier
/// samples stay at zero.
pub fn running_sum(psi_op: &[f64], psi_rst: &[f64], ts: f64, arm: usize) -> Vec<f64> {
    let n = psi_op.len().min(psi_rst.len());
    let mut acc = RunningSum::new(LoopId::AG, ts, usize::MAX);
    (0..n)
        .map(|k| {
            if k < arm {
                0.0
            } else {
                acc.push(psi_op[k] - psi_rst[k], k as f64 * ts).e_sum
            }
        })
        .collect()
}

/// Trip decision of a single loop, evaluated sample by sample.
#[derive(Clone, Copy, Debug)]
pub struct TripRule {
    pub mode: TripMode,
    pub threshold_level: f64,
    /// Hold time in samples (consecutive-time mode).
    pub hold_samples: usize,
    pub ts: f64,
}

impl TripRule {
    pub fn trips(&self, s: &LoopState, t: f64) -> bool {
        match self.mode {
            TripMode::Threshold => s.e_sum >= self.threshold_level,
            TripMode::ConsecutiveTime => match s.above_zero_since {
                Some(t0) => ((t - t0) / self.ts).round() as usize >= self.hold_samples,
                None => false,
            },
        }
    }
}

/// First trip over a set of running-sum traces sharing the time base
/// `t0 + k ts`. Returns the sample index and loop index.
pub fn first_trip(e_sums: &[&[f64]], rule: &TripRule, t0: f64) -> Option<(usize, usize)> {
    let n = e_sums.iter().map(|e| e.len()).min()?;
    let mut since: Vec<Option<usize>> = alloc::vec![None; e_sums.len()];
    for k in 0..n {
        for (l, e) in e_sums.iter().enumerate() {
            if e[k] > 0.0 {
                since[l].get_or_insert(k);
            } else {
                since[l] = None;
            }
            let state = LoopState {
                loop_id: LoopId::ALL[l % 6],
                e_sum: e[k],
                active: since[l].is_some(),
                above_zero_since: since[l].map(|s| t0 + s as f64 * rule.ts),
            };
            if rule.trips(&state, t0 + k as f64 * rule.ts) {
                return Some((k, l));
            }
        }
    }
    None
}
