//! Scenario files (TOML). Every physical quantity carries its unit in the
//! key; unknown keys are rejected.

use std::path::{Path, PathBuf};

use iqdist_core::emtsim::{FaultEvent, Segment, SimOptions, SourceDynamics, SourceMode, SourceSchedule, Track};
use iqdist_core::emtsim::FaultSchedule;
use iqdist_core::netmodel::FaultResistance;
use iqdist_core::relay_iq::{DetectorSettings, RelaySettings, TripMode};
use iqdist_core::relay_quad::{QuadSettings, ZonePolygon};
use iqdist_core::{LineParams, PreFaultLoad, PuBase, SourceSpec, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::sweep::{Classifier, SweepSpec};

fn deg(x: f64) -> f64 {
    x.to_radians()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Seed for randomized checks; recorded in the manifest.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory, relative to the scenario file.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub system: SystemDto,
    #[serde(default)]
    pub source: SourceDto,
    #[serde(default)]
    pub fault: FaultDto,
    #[serde(default)]
    pub sim: SimDto,
    #[serde(default)]
    pub relay_iq: RelayIqDto,
    #[serde(default)]
    pub relay_quad: RelayQuadDto,
    #[serde(default)]
    pub analyze: AnalyzeDto,
    #[serde(default)]
    pub sweep: Option<SweepDto>,
    #[serde(default)]
    pub matrix: Option<MatrixDto>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemDto {
    pub kv_ll: f64,
    pub mva: f64,
    pub f_hz: f64,
    pub line_length_km: f64,
    pub r1_ohm_per_km: f64,
    pub x1_ohm_per_km: f64,
    pub r0_ohm_per_km: f64,
    pub x0_ohm_per_km: f64,
    pub source_sir: f64,
    pub source_angle_deg: f64,
    pub source_ivs_pu: f64,
    pub grid_sir: f64,
    pub grid_angle_deg: f64,
    pub grid_ivs_pu: f64,
    /// Pre-fault export at the relay bus. Ignored when `source_ivs_angle_deg` is set.
    pub p_pre_pu: f64,
    pub source_ivs_angle_deg: Option<f64>,
}

impl Default for SystemDto {
    fn default() -> Self {
        let r = SystemConfig::reference();
        let w = r.base.omega();
        let km = r.line.length_km;
        SystemDto {
            kv_ll: r.base.kv_ll,
            mva: r.base.mva,
            f_hz: r.base.f_hz,
            line_length_km: km,
            r1_ohm_per_km: r.line.r1 / km,
            x1_ohm_per_km: w * r.line.l1 / km,
            r0_ohm_per_km: r.line.r0 / km,
            x0_ohm_per_km: w * r.line.l0 / km,
            source_sir: r.source.sir,
            source_angle_deg: r.source.angle.to_degrees(),
            source_ivs_pu: r.source.ivs_mag,
            grid_sir: r.grid.sir,
            grid_angle_deg: r.grid.angle.to_degrees(),
            grid_ivs_pu: r.grid.ivs_mag,
            p_pre_pu: 1.0,
            source_ivs_angle_deg: None,
        }
    }
}

impl SystemDto {
    pub fn to_config(&self) -> Result<SystemConfig> {
        let base = PuBase::new(self.kv_ll, self.mva, self.f_hz);
        let line = LineParams::from_per_km(
            self.r1_ohm_per_km,
            self.x1_ohm_per_km,
            self.r0_ohm_per_km,
            self.x0_ohm_per_km,
            self.line_length_km,
            self.f_hz,
        );
        let cfg = SystemConfig {
            base,
            line,
            source: SourceSpec {
                sir: self.source_sir,
                angle: deg(self.source_angle_deg),
                ivs_mag: self.source_ivs_pu,
                ivs_angle: 0.0,
            },
            grid: SourceSpec {
                sir: self.grid_sir,
                angle: deg(self.grid_angle_deg),
                ivs_mag: self.grid_ivs_pu,
                ivs_angle: 0.0,
            },
            load: match self.source_ivs_angle_deg {
                Some(a) => PreFaultLoad::IvsAngle(deg(a)),
                None => PreFaultLoad::ActivePower(self.p_pre_pu),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeDto {
    Linear,
    Scheduled,
    GfmSaturation,
    GfmVirtualImpedance,
}

impl ModeDto {
    pub fn name(self) -> &'static str {
        match self {
            ModeDto::Linear => "linear",
            ModeDto::Scheduled => "scheduled",
            ModeDto::GfmSaturation => "gfm_saturation",
            ModeDto::GfmVirtualImpedance => "gfm_virtual_impedance",
        }
    }
}

/// One schedule segment: either a step (`at_s`) or a ramp (`start_s`, `end_s`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDto {
    #[serde(default)]
    pub at_s: Option<f64>,
    #[serde(default)]
    pub start_s: Option<f64>,
    #[serde(default)]
    pub end_s: Option<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleDto {
    /// Added resistance, pu.
    pub dr_pu: Vec<SegmentDto>,
    /// Added reactance, pu.
    pub dx_pu: Vec<SegmentDto>,
    /// IVS magnitude multiplier.
    pub ivs_gain: Vec<SegmentDto>,
    pub ivs_shift_deg: Vec<SegmentDto>,
}

fn track(field: &'static str, initial: f64, segs: &[SegmentDto], scale: f64) -> Result<Track> {
    let mut t = Track::constant(initial);
    for s in segs {
        let seg = match (s.at_s, s.start_s, s.end_s) {
            (Some(at), None, None) => Segment::Step { at, value: s.value * scale },
            (None, Some(start), Some(end)) => Segment::Ramp {
                start,
                end,
                value: s.value * scale,
            },
            _ => {
                return Err(CliError::Input(format!(
                    "source.schedule.{field}: each segment needs either `at_s` or both `start_s` and `end_s`"
                )))
            }
        };
        t.segments.push(seg);
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceDto {
    pub mode: ModeDto,
    pub i_limit_pu: f64,
    /// Defaults to the positive-sequence line angle.
    pub vi_angle_deg: Option<f64>,
    /// Defaults to 15 ms (virtual impedance) or 0.5 ms (saturation).
    pub limiter_time_constant_s: Option<f64>,
    pub schedule: ScheduleDto,
}

impl Default for SourceDto {
    fn default() -> Self {
        SourceDto {
            mode: ModeDto::Linear,
            i_limit_pu: 1.2,
            vi_angle_deg: None,
            limiter_time_constant_s: None,
            schedule: ScheduleDto::default(),
        }
    }
}

impl SourceDto {
    pub fn to_dynamics(&self, cfg: &SystemConfig) -> Result<SourceDynamics> {
        let vi = self.vi_angle_deg.map(deg).unwrap_or_else(|| cfg.z_line().angle());
        let mut d = match self.mode {
            ModeDto::Linear => SourceDynamics::linear(),
            ModeDto::GfmSaturation => SourceDynamics::gfm_saturation(),
            ModeDto::GfmVirtualImpedance => SourceDynamics::gfm_virtual_impedance(vi),
            ModeDto::Scheduled => {
                let s = &self.schedule;
                SourceDynamics::scheduled(SourceSchedule {
                    dr: track("dr_pu", 0.0, &s.dr_pu, 1.0)?,
                    dx: track("dx_pu", 0.0, &s.dx_pu, 1.0)?,
                    ivs_gain: track("ivs_gain", 1.0, &s.ivs_gain, 1.0)?,
                    ivs_shift: track("ivs_shift_deg", 0.0, &s.ivs_shift_deg, 1f64.to_radians())?,
                })
            }
        };
        let has_schedule = self.schedule != ScheduleDto::default();
        if has_schedule && self.mode != ModeDto::Scheduled {
            return Err(CliError::Input("source.schedule is only used with mode = \"scheduled\"".into()));
        }
        d.i_limit = self.i_limit_pu;
        d.vi_angle = vi;
        if let Some(tau) = self.limiter_time_constant_s {
            d.limiter_time_constant = tau;
        }
        d.validate()?;
        Ok(d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfStepDto {
    pub at_s: f64,
    pub r_f_ohm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultDto {
    pub m_f: f64,
    pub r_f_ohm: f64,
    /// Earliest inception; the fault lands on the next voltage zero.
    pub t_on_s: f64,
    /// Fault-resistance changes, timed from inception.
    pub r_f_steps: Vec<RfStepDto>,
}

impl Default for FaultDto {
    fn default() -> Self {
        FaultDto {
            m_f: 0.5,
            r_f_ohm: 0.0,
            t_on_s: 0.1,
            r_f_steps: Vec::new(),
        }
    }
}

impl FaultDto {
    pub fn to_event(&self) -> FaultEvent {
        let mut r_f = FaultSchedule::constant(FaultResistance::Finite(self.r_f_ohm));
        for s in &self.r_f_steps {
            r_f = r_f.then_step(s.at_s, FaultResistance::Finite(s.r_f_ohm));
        }
        FaultEvent {
            t_on: self.t_on_s,
            m_f: self.m_f,
            r_f,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimDto {
    pub duration_s: f64,
    pub dt_s: f64,
    pub fs_hz: f64,
}

impl Default for SimDto {
    fn default() -> Self {
        let o = SimOptions::default();
        SimDto {
            duration_s: o.duration,
            dt_s: o.dt,
            fs_hz: o.fs,
        }
    }
}

impl SimDto {
    pub fn to_options(&self) -> SimOptions {
        SimOptions {
            duration: self.duration_s,
            dt: self.dt_s,
            fs: self.fs_hz,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripModeDto {
    ConsecutiveTime,
    Threshold,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelayIqDto {
    pub reach: f64,
    pub p_cycles: usize,
    pub k_rst: f64,
    /// Low-pass cutoff; 0 disables the filter.
    pub lp_cutoff_hz: f64,
    pub trip_mode: TripModeDto,
    pub threshold_level_pu_s: f64,
    pub hold_time_s: f64,
    pub di_pickup_pu: f64,
    pub dv_pickup_pu: f64,
    pub confirm_time_s: f64,
    pub freeze_guard_s: f64,
}

impl Default for RelayIqDto {
    fn default() -> Self {
        let r = SystemConfig::reference();
        let s = RelaySettings::new(r.line, r.base);
        RelayIqDto {
            reach: s.m,
            p_cycles: s.p,
            k_rst: s.k_rst,
            lp_cutoff_hz: s.lp_cutoff.unwrap_or(0.0),
            trip_mode: TripModeDto::ConsecutiveTime,
            threshold_level_pu_s: s.threshold_level,
            hold_time_s: s.hold_time,
            di_pickup_pu: s.detector.di_pickup,
            dv_pickup_pu: s.detector.dv_pickup,
            confirm_time_s: s.detector.confirm_time,
            freeze_guard_s: s.detector.freeze_guard,
        }
    }
}

impl RelayIqDto {
    pub fn to_settings(&self, cfg: &SystemConfig, fs: f64) -> Result<RelaySettings> {
        let s = RelaySettings {
            m: self.reach,
            p: self.p_cycles,
            k_rst: self.k_rst,
            fs,
            lp_cutoff: (self.lp_cutoff_hz > 0.0).then_some(self.lp_cutoff_hz),
            trip_mode: match self.trip_mode {
                TripModeDto::ConsecutiveTime => TripMode::ConsecutiveTime,
                TripModeDto::Threshold => TripMode::Threshold,
            },
            threshold_level: self.threshold_level_pu_s,
            hold_time: self.hold_time_s,
            line: cfg.line,
            base: cfg.base,
            detector: DetectorSettings {
                di_pickup: self.di_pickup_pu,
                dv_pickup: self.dv_pickup_pu,
                confirm_time: self.confirm_time_s,
                freeze_guard: self.freeze_guard_s,
            },
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelayQuadDto {
    pub zone: u8,
    pub reach: f64,
    pub r_reach_ohm: f64,
    pub dir_low_deg: f64,
    /// Left directional ray, measured from the line angle.
    pub dir_high_offset_deg: f64,
    pub tilt_deg: f64,
    pub min_current_pu: f64,
    pub settle_time_s: f64,
    /// Mimic time constant; 0 disables it.
    pub mimic_tau_s: f64,
}

impl Default for RelayQuadDto {
    fn default() -> Self {
        let r = SystemConfig::reference();
        let s = QuadSettings::new(r.line, r.base);
        let la = r.z_line().angle();
        RelayQuadDto {
            zone: s.zone.zone,
            reach: s.zone.reach,
            r_reach_ohm: r.base.pu_to_ohm(s.zone.r_reach),
            dir_low_deg: s.zone.dir_low.to_degrees(),
            dir_high_offset_deg: (s.zone.dir_high - la).to_degrees(),
            tilt_deg: s.zone.tilt.to_degrees(),
            min_current_pu: s.min_current,
            settle_time_s: s.settle_time,
            mimic_tau_s: s.mimic_tau.unwrap_or(0.0),
        }
    }
}

impl RelayQuadDto {
    pub fn to_settings(&self, cfg: &SystemConfig, fs: f64) -> Result<QuadSettings> {
        let z1 = cfg.z_line();
        let mut zone = ZonePolygon::new(self.zone, self.reach, z1, cfg.base.ohm_to_pu(self.r_reach_ohm));
        zone.dir_low = deg(self.dir_low_deg);
        zone.dir_high = z1.angle() + deg(self.dir_high_offset_deg);
        zone.tilt = deg(self.tilt_deg);
        let s = QuadSettings {
            zone,
            min_current: self.min_current_pu,
            settle_time: self.settle_time_s,
            mimic_tau: (self.mimic_tau_s > 0.0).then_some(self.mimic_tau_s),
            fs,
            line: cfg.line,
            base: cfg.base,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Source change applied in `analyze`, on top of the fault in `[fault]`.
/// The internal voltage becomes `ivs_gain ∠ ivs_shift_deg` times its
/// pre-fault value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeDto {
    pub dr_pu: f64,
    pub dx_pu: f64,
    pub ivs_gain: f64,
    pub ivs_shift_deg: f64,
}

impl Default for AnalyzeDto {
    fn default() -> Self {
        AnalyzeDto {
            dr_pu: 0.0,
            dx_pu: 0.0,
            ivs_gain: 1.0,
            ivs_shift_deg: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDto {
    pub m_f: f64,
    pub r_f_ohm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDto {
    #[serde(default = "default_range")]
    pub dr_pu: [f64; 2],
    #[serde(default = "default_range")]
    pub dx_pu: [f64; 2],
    #[serde(default = "default_steps")]
    pub steps: usize,
    pub classifier: Classifier,
    pub cells: Vec<CellDto>,
}

fn default_range() -> [f64; 2] {
    [0.0, 3.0]
}

fn default_steps() -> usize {
    81
}

impl SweepDto {
    pub fn to_spec(&self, s: &Scenario, cfg: &SystemConfig) -> Result<SweepSpec> {
        let fs = s.sim.fs_hz;
        let spec = SweepSpec {
            dr_range: (self.dr_pu[0], self.dr_pu[1], self.steps),
            dx_range: (self.dx_pu[0], self.dx_pu[1], self.steps),
            cells: self.cells.iter().map(|c| (c.m_f, c.r_f_ohm)).collect(),
            base: *cfg,
            classifier: self.classifier,
            i_limit: s.source.i_limit_pu,
            reach: s.relay_iq.reach,
            k_rst: s.relay_iq.k_rst,
            zone: s.relay_quad.to_settings(cfg, fs)?.zone,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDto {
    pub m_f: Vec<f64>,
    pub r_f_ohm: Vec<f64>,
    pub sources: Vec<ModeDto>,
}

/// Everything the pipelines need, resolved and validated.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub cfg: SystemConfig,
    pub dynamics: SourceDynamics,
    pub fault: FaultEvent,
    pub sim: SimOptions,
    pub iq: RelaySettings,
    pub quad: QuadSettings,
}

impl Scenario {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        Self::from_toml(&text, path)
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let cfg = self.system.to_config()?;
        let dynamics = self.source.to_dynamics(&cfg)?;
        let fault = self.fault.to_event();
        fault.validate(cfg.base.period())?;
        let sim = self.sim.to_options();
        let fs = sim.fs;
        Ok(Resolved {
            iq: self.relay_iq.to_settings(&cfg, fs)?,
            quad: self.relay_quad.to_settings(&cfg, fs)?,
            cfg,
            dynamics,
            fault,
            sim,
        })
    }

    /// Canonical serialized form, used for hashing.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }
}

pub fn mode_of(d: &SourceDynamics) -> ModeDto {
    match d.mode {
        SourceMode::Linear => ModeDto::Linear,
        SourceMode::Scheduled => ModeDto::Scheduled,
        SourceMode::GfmSaturation => ModeDto::GfmSaturation,
        SourceMode::GfmVirtualImpedance => ModeDto::GfmVirtualImpedance,
    }
}
