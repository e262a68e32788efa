//! Test-system description: per-unit base, line, sources and pre-fault load.

use core::f64::consts::PI;


use crate::error::{invalid, Result};
use crate::phasor::Impedance;
// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

/// Three-phase per-unit base.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PuBase {
    /// Line-to-line base voltage, kV.
    pub kv_ll: f64,
    /// Three-phase base power, MVA.
    pub mva: f64,
    /// Nominal frequency, Hz.
    pub f_hz: f64,
}

impl PuBase {
    pub const fn new(kv_ll: f64, mva: f64, f_hz: f64) -> Self {
        PuBase { kv_ll, mva, f_hz }
    }

    pub fn z_base(&self) -> f64 {
        self.kv_ll * self.kv_ll / self.mva
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.f_hz
    }

    pub fn period(&self) -> f64 {
        1.0 / self.f_hz
    }

    pub fn ohm_to_pu(&self, ohm: f64) -> f64 {
        ohm / self.z_base()
    }

    pub fn pu_to_ohm(&self, pu: f64) -> f64 {
        pu * self.z_base()
    }

    /// Peak phase-to-ground voltage that corresponds to 1 pu, kV.
    pub fn v_peak_kv(&self) -> f64 {
        self.kv_ll * (2.0f64 / 3.0).sqrt()
    }

    /// Peak phase current that corresponds to 1 pu, kA.
    pub fn i_peak_ka(&self) -> f64 {
        self.mva / self.kv_ll * (2.0f64 / 3.0).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kv_ll > 0.0 && self.mva > 0.0 && self.f_hz > 0.0) {
            return Err(invalid("base", "kV, MVA and frequency must be positive"));
        }
        Ok(())
    }
}

/// Transposed line parameters over the whole length (SI units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineParams {
    /// Positive-sequence resistance, Ω.
    pub r1: f64,
    /// Positive-sequence inductance, H.
    pub l1: f64,
    /// Zero-sequence resistance, Ω.
    pub r0: f64,
    /// Zero-sequence inductance, H.
    pub l0: f64,
    pub length_km: f64,
}

impl LineParams {
    /// Builds full-length parameters from per-km resistance and reactance at `f_hz`.
    pub fn from_per_km(
        r1_km: f64,
        x1_km: f64,
        r0_km: f64,
        x0_km: f64,
        length_km: f64,
        f_hz: f64,
    ) -> Self {
        let w = 2.0 * PI * f_hz;
        LineParams {
            r1: r1_km * length_km,
            l1: x1_km * length_km / w,
            r0: r0_km * length_km,
            l0: x0_km * length_km / w,
            length_km,
        }
    }

    pub fn z1_pu(&self, base: &PuBase) -> Impedance {
        Impedance::new(self.r1, base.omega() * self.l1).scale(1.0 / base.z_base())
    }

    pub fn z0_pu(&self, base: &PuBase) -> Impedance {
        Impedance::new(self.r0, base.omega() * self.l0).scale(1.0 / base.z_base())
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.r1, self.l1, self.r0, self.l0, self.length_km];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("line", "parameters must be finite and non-negative"));
        }
        if self.l1 <= 0.0 {
            return Err(invalid("line.l1", "positive-sequence inductance must be > 0"));
        }
        Ok(())
    }
}

/// Thevenin source behind an impedance sized by its source-to-line ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceSpec {
    /// |Z_source| / |Z_line| with the full line length as basis.
    pub sir: f64,
    /// Impedance angle, rad.
    pub angle: f64,
    /// IVS magnitude, pu.
    pub ivs_mag: f64,
    /// IVS angle, rad. Only used for the grid source and for
    /// [`PreFaultLoad::IvsAngle`]-free configurations.
    pub ivs_angle: f64,
}

impl SourceSpec {
    pub fn validate(&self, field: &'static str) -> Result<()> {
        if !(self.sir >= 0.0 && self.sir.is_finite()) {
            return Err(invalid(field, "SIR must be finite and >= 0"));
        }
        if !(self.ivs_mag > 0.0 && self.ivs_mag.is_finite()) {
            return Err(invalid(field, "IVS magnitude must be > 0"));
        }
        if !self.angle.is_finite() || !self.ivs_angle.is_finite() {
            return Err(invalid(field, "angles must be finite"));
        }
        Ok(())
    }
}

/// How the sending-end IVS angle is fixed before the disturbance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PreFaultLoad {
    /// Solve the angle so that the relay bus exports this active power (pu).
    ActivePower(f64),
    /// Use this sending-end IVS angle directly (rad), relative to the grid IVS.
    IvsAngle(f64),
}

/// Two-source single-line test system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemConfig {
    pub base: PuBase,
    pub line: LineParams,
    pub source: SourceSpec,
    pub grid: SourceSpec,
    pub load: PreFaultLoad,
}

impl SystemConfig {
    /// 220 kV / 300 MW / 50 Hz system with a 100 km line, SIR 0.3 at both
    /// ends and 1 pu pre-fault export.
    pub fn reference() -> Self {
        let f = 50.0;
        let deg = PI / 180.0;
        // 0.5 Ω/km at 80°; zero sequence 1.5 Ω/km at 75°.
        let z1 = 0.5;
        let z0 = 1.5;
        let line = LineParams::from_per_km(
            z1 * (80.0 * deg).cos(),
            z1 * (80.0 * deg).sin(),
            z0 * (75.0 * deg).cos(),
            z0 * (75.0 * deg).sin(),
            100.0,
            f,
        );
        SystemConfig {
            base: PuBase::new(220.0, 300.0, f),
            line,
            source: SourceSpec {
                sir: 0.3,
                angle: 88.0 * deg,
                ivs_mag: 1.0,
                ivs_angle: 0.0,
            },
            grid: SourceSpec {
                sir: 0.3,
                angle: 88.0 * deg,
                ivs_mag: 1.0,
                ivs_angle: 0.0,
            },
            load: PreFaultLoad::ActivePower(1.0),
        }
    }

    pub fn z_line(&self) -> Impedance {
        self.line.z1_pu(&self.base)
    }

    pub fn z_line0(&self) -> Impedance {
        self.line.z0_pu(&self.base)
    }

    pub fn z_source(&self) -> Impedance {
        Impedance::from_polar(self.source.sir * self.z_line().mag(), self.source.angle)
    }

    pub fn z_grid(&self) -> Impedance {
        Impedance::from_polar(self.grid.sir * self.z_line().mag(), self.grid.angle)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.line.validate()?;
        self.source.validate("source")?;
        self.grid.validate("grid")?;
        match self.load {
            PreFaultLoad::ActivePower(p) if !p.is_finite() => {
                Err(invalid("load", "active power must be finite"))
            }
            PreFaultLoad::IvsAngle(a) if !a.is_finite() => {
                Err(invalid("load", "IVS angle must be finite"))
            }
            _ => Ok(()),
        }
    }
}
