//! Piecewise-constant and ramped parameter tracks.

// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::netmodel::FaultResistance;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    /// Jump to `value` at `at`.
    Step { at: f64, value: f64 },
    /// Move linearly from the previous value to `value` over `[start, end]`.
    Ramp { start: f64, end: f64, value: f64 },
}

impl Segment {
    fn start(&self) -> f64 {
        match *self {
            Segment::Step { at, .. } => at,
            Segment::Ramp { start, .. } => start,
        }
    }

    fn end(&self) -> f64 {
        match *self {
            Segment::Step { at, .. } => at,
            Segment::Ramp { end, .. } => end,
        }
    }
}

/// A scalar that evolves over time. Times are relative to fault inception.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub initial: f64,
    pub segments: Vec<Segment>,
}

impl Track {
    pub fn constant(value: f64) -> Self {
        Track {
            initial: value,
            segments: Vec::new(),
        }
    }

    pub fn step(initial: f64, at: f64, value: f64) -> Self {
        Track {
            initial,
            segments: alloc::vec![Segment::Step { at, value }],
        }
    }

    pub fn then_step(mut self, at: f64, value: f64) -> Self {
        self.segments.push(Segment::Step { at, value });
        self
    }

    pub fn then_ramp(mut self, start: f64, end: f64, value: f64) -> Self {
        self.segments.push(Segment::Ramp { start, end, value });
        self
    }

    pub fn is_constant(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let mut v = self.initial;
        for seg in &self.segments {
            match *seg {
                Segment::Step { at, value } => {
                    if t >= at {
                        v = value;
                    } else {
                        break;
                    }
                }
                Segment::Ramp { start, end, value } => {
                    if t >= end {
                        v = value;
                    } else {
                        if t > start {
                            v += (value - v) * (t - start) / (end - start);
                        }
                        break;
                    }
                }
            }
        }
        v
    }

    /// Instants where the track jumps.
    pub fn step_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().filter_map(|s| match *s {
            Segment::Step { at, .. } => Some(at),
            Segment::Ramp { .. } => None,
        })
    }

    pub fn validate(&self, field: &'static str) -> Result<()> {
        if !self.initial.is_finite() {
            return Err(invalid(field, "initial value must be finite"));
        }
        let mut last = 0.0;
        for seg in &self.segments {
            let (s, e) = (seg.start(), seg.end());
            if !(s.is_finite() && e.is_finite()) || s < last || e < s {
                return Err(invalid(
                    field,
                    "segments must be ordered, non-overlapping and start at t >= 0",
                ));
            }
            if let Segment::Ramp { start, end, .. } = *seg {
                if end <= start {
                    return Err(invalid(field, "ramp must have positive duration"));
                }
            }
            let v = match *seg {
                Segment::Step { value, .. } | Segment::Ramp { value, .. } => value,
            };
            if !v.is_finite() {
                return Err(invalid(field, "values must be finite"));
            }
            last = e;
        }
        Ok(())
    }

    pub(crate) fn min_value(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match *s {
                Segment::Step { value, .. } | Segment::Ramp { value, .. } => value,
            })
            .fold(self.initial, f64::min)
    }
}

/// Fault resistance over time, in ohms. Times are relative to inception.
#[derive(Clone, Debug, PartialEq)]
pub struct FaultSchedule {
    pub initial: FaultResistance,
    pub steps: Vec<(f64, FaultResistance)>,
}

impl FaultSchedule {
    pub fn constant(r_f: FaultResistance) -> Self {
        FaultSchedule {
            initial: r_f,
            steps: Vec::new(),
        }
    }

    pub fn then_step(mut self, at: f64, r_f: FaultResistance) -> Self {
        self.steps.push((at, r_f));
        self
    }

    pub fn value_at(&self, t: f64) -> FaultResistance {
        let mut v = self.initial;
        for &(at, r) in &self.steps {
            if t >= at {
                v = r;
            } else {
                break;
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: FaultResistance| match r {
            FaultResistance::Finite(r) => r.is_finite() && r >= 0.0,
            FaultResistance::Open => true,
        };
        if !ok(self.initial) || self.steps.iter().any(|&(_, r)| !ok(r)) {
            return Err(invalid("r_f", "fault resistance must be finite and >= 0"));
        }
        let mut last = 0.0;
        for &(at, _) in &self.steps {
            if !(at.is_finite() && at >= last) {
                return Err(invalid("r_f", "steps must be ordered and at t >= 0"));
            }
            last = at;
        }
        Ok(())
    }
}
