//! Behavioural current limiters for grid-forming sources.
//!
//! Both limiters are represented as a series impedance `ρ∠φ` inserted in the
//! source branch whose magnitude integrates the current error:
//!
//! `dρ/dt = (|E_s| / τ) · (1/i_lim − 1/|i_αβ|)`, clamped at `ρ ≥ 0`.
//!
//! Far from the limit `|E_s|/|i|` tracks the total loop impedance, so `ρ`
//! closes the gap with time constant `τ`. The virtual-impedance limiter uses
//! `φ` = its configured angle; the saturation limiter is taken as its
//! adaptive-resistance equivalent (`φ = 0`).

// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

use crate::phasor::Impedance;

use super::{SourceDynamics, SourceMode};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LimiterState {
    /// Magnitude of the inserted impedance, pu.
    pub rho: f64,
}

impl LimiterState {
    pub fn impedance(&self, dyn_: &SourceDynamics) -> Impedance {
        Impedance::from_polar(self.rho, limiter_angle(dyn_))
    }
}

pub(crate) fn limiter_angle(dyn_: &SourceDynamics) -> f64 {
    match dyn_.mode {
        SourceMode::GfmVirtualImpedance => dyn_.vi_angle,
        _ => 0.0,
    }
}

/// Advances the limiter by `dt` given the measured current-vector magnitude
/// and the IVS magnitude. Returns the inserted impedance. Linear and
/// scheduled sources have no limiter and always return zero.
pub fn gfm_limiter_step(
    state: &mut LimiterState,
    i_mag: f64,
    e_mag: f64,
    dyn_: &SourceDynamics,
    dt: f64,
) -> Impedance {
    match dyn_.mode {
        SourceMode::GfmSaturation | SourceMode::GfmVirtualImpedance => {}
        SourceMode::Linear | SourceMode::Scheduled => return Impedance::ZERO,
    }
    let i = i_mag.max(1e-9);
    let rate = e_mag / dyn_.limiter_time_constant * (1.0 / dyn_.i_limit - 1.0 / i);
    state.rho = (state.rho + rate * dt).max(0.0);
    state.impedance(dyn_)
}
