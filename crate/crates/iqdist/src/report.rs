//! Decision JSON, relay traces, trajectories and the analysis report.

use std::io::Write;

use iqdist_core::netmodel::{apparent_impedance, nodal_oracle, solve, IqNetworkCase};
use iqdist_core::relay_iq::{RelayDecision, RelaySettings, TripMode};
use iqdist_core::relay_quad::{QuadDecision, QuadSettings};
use iqdist_core::{PuBase, SystemConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash over everything that can change a relay decision.
pub fn settings_hash(iq: &RelaySettings, quad: &QuadSettings) -> String {
    // Debug output of plain-data structs is stable for a given build and
    // prints floats in round-trip form.
    sha256_hex(format!("{iq:?}|{quad:?}").as_bytes())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IqDecisionJson {
    pub tripped: bool,
    pub trip_time_s: Option<f64>,
    pub tripping_loop: Option<&'static str>,
    pub detection_time_s: Option<f64>,
    pub trip_mode: &'static str,
    pub final_e_sum: Vec<(&'static str, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadDecisionJson {
    pub zone: u8,
    pub pickup: bool,
    pub pickup_time_s: Option<f64>,
    pub pickup_loop: Option<&'static str>,
    pub transient_overreach: bool,
    pub first_inside_s: Option<f64>,
    /// Final loop impedances as `[loop, r_pu, x_pu, r_ohm, x_ohm]`.
    pub final_impedance: Vec<(&'static str, f64, f64, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecisionJson {
    pub settings_hash: String,
    pub samples: usize,
    pub fs_hz: f64,
    pub iq: IqDecisionJson,
    pub quad: QuadDecisionJson,
}

impl DecisionJson {
    pub fn new(
        iq: &RelayDecision,
        iq_s: &RelaySettings,
        quad: &QuadDecision,
        quad_s: &QuadSettings,
        samples: usize,
        fs: f64,
    ) -> Self {
        let zb = quad_s.base.z_base();
        DecisionJson {
            settings_hash: settings_hash(iq_s, quad_s),
            samples,
            fs_hz: fs,
            iq: IqDecisionJson {
                tripped: iq.tripped,
                trip_time_s: iq.trip_time,
                tripping_loop: iq.tripping_loop.map(|l| l.name()),
                detection_time_s: iq.detection_time,
                trip_mode: match iq_s.trip_mode {
                    TripMode::ConsecutiveTime => "consecutive_time",
                    TripMode::Threshold => "threshold",
                },
                final_e_sum: iq.final_states.iter().map(|s| (s.loop_id.name(), s.e_sum)).collect(),
            },
            quad: QuadDecisionJson {
                zone: quad_s.zone.zone,
                pickup: quad.tripped,
                pickup_time_s: quad.trip_time,
                pickup_loop: quad.tripping_loop.map(|l| l.name()),
                transient_overreach: quad.transient_overreach,
                first_inside_s: quad.first_inside,
                final_impedance: quad
                    .trajectories
                    .iter()
                    .zip(quad.final_impedance.iter())
                    .filter_map(|(t, z)| z.map(|z| (t.loop_id.name(), z.r, z.x, z.r * zb, z.x * zb)))
                    .collect(),
            },
        }
    }

    pub fn to_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("decision serializes")
    }
}

/// `t,psi_op,psi_rst,e_sum` for one loop.
pub fn write_iq_trace<W: Write>(w: W, dec: &RelayDecision, loop_idx: usize) -> Result<()> {
    let tr = &dec.traces[loop_idx];
    let mut out = csv::Writer::from_writer(w);
    let map = |e: csv::Error| CliError::Runtime(format!("writing trace: {e}"));
    out.write_record(["t", "psi_op", "psi_rst", "e_sum"]).map_err(map)?;
    for k in 0..tr.psi_op.len() {
        let t = dec.t0 + k as f64 * dec.ts;
        out.write_record([t, tr.psi_op[k], tr.psi_rst[k], tr.e_sum[k]].map(|x| x.to_string()))
            .map_err(map)?;
    }
    out.flush().map_err(|e| CliError::io("writing trace", e))
}

/// `t,loop,r,x,inside_z1`, one row per loop every `every` samples; samples
/// without an impedance are skipped.
pub fn write_trajectory<W: Write>(w: W, dec: &QuadDecision, every: usize) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let map = |e: csv::Error| CliError::Runtime(format!("writing trajectory: {e}"));
    out.write_record(["t", "loop", "r", "x", "inside_z1"]).map_err(map)?;
    let n = dec.trajectories.first().map_or(0, |t| t.z.len());
    for k in (0..n).step_by(every.max(1)) {
        let t = dec.t0 + k as f64 * dec.ts;
        for tr in &dec.trajectories {
            if let Some(z) = tr.z[k] {
                out.write_record([
                    t.to_string(),
                    tr.loop_id.name().to_string(),
                    z.r.to_string(),
                    z.x.to_string(),
                    (tr.inside[k] as u8).to_string(),
                ])
                .map_err(map)?;
            }
        }
    }
    out.flush().map_err(|e| CliError::io("writing trajectory", e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhasorJson {
    pub re_pu: f64,
    pub im_pu: f64,
    pub mag_pu: f64,
    pub angle_deg: f64,
    /// Peak magnitude in kV or kA.
    pub mag_si: f64,
}

impl PhasorJson {
    fn new(p: iqdist_core::Phasor, si_per_pu: f64) -> Self {
        PhasorJson {
            re_pu: p.re(),
            im_pu: p.im(),
            mag_pu: p.mag(),
            angle_deg: p.angle().to_degrees(),
            mag_si: p.mag() * si_per_pu,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisJson {
    pub m_f: f64,
    pub r_f_ohm: f64,
    pub reach: f64,
    pub dz_s_pu: [f64; 2],
    pub di_s: PhasorJson,
    pub dv_s: PhasorJson,
    pub i_s_total: PhasorJson,
    pub psi_op_pu: f64,
    pub psi_rst_pu: f64,
    pub psi_op_kv: f64,
    pub psi_rst_kv: f64,
    pub op_gt_rst: bool,
    pub apparent_impedance_pu: Option<[f64; 2]>,
    pub apparent_impedance_ohm: Option<[f64; 2]>,
    /// Largest relative gap between the closed forms and the nodal solver.
    pub oracle_rel_dev: f64,
    pub oracle_ok: bool,
}

pub fn analyze(case: &IqNetworkCase, r_f_ohm: f64, base: &PuBase) -> Result<AnalysisJson> {
    let sol = solve(case)?;
    let (di_o, dv_o) = nodal_oracle(case)?;
    let rel = |a: iqdist_core::Phasor, b: iqdist_core::Phasor| (a - b).mag() / b.mag().max(1e-300);
    let dev = rel(sol.di_s, di_o).max(rel(sol.dv_s, dv_o));
    let z = apparent_impedance(case, &sol);
    let zb = base.z_base();
    Ok(AnalysisJson {
        m_f: case.m_f,
        r_f_ohm,
        reach: case.m,
        dz_s_pu: [case.dz_s.r, case.dz_s.x],
        di_s: PhasorJson::new(sol.di_s, base.i_peak_ka()),
        dv_s: PhasorJson::new(sol.dv_s, base.v_peak_kv()),
        i_s_total: PhasorJson::new(sol.i_s_total, base.i_peak_ka()),
        psi_op_pu: sol.psi_op,
        psi_rst_pu: sol.psi_rst,
        psi_op_kv: sol.psi_op * base.v_peak_kv(),
        psi_rst_kv: sol.psi_rst * base.v_peak_kv(),
        op_gt_rst: sol.op_exceeds_rst(),
        apparent_impedance_pu: z.map(|z| [z.r, z.x]),
        apparent_impedance_ohm: z.map(|z| [z.r * zb, z.x * zb]),
        oracle_rel_dev: dev,
        oracle_ok: dev <= 1e-9,
    })
}

/// Base of a system, for callers that only hold the config.
pub fn base_of(cfg: &SystemConfig) -> PuBase {
    cfg.base
}
