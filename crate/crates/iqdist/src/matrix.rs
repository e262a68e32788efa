//! Fault matrix: every `(source, m_f, R_f)` combination simulated and run
//! through both relays.

use std::io::Write;

use iqdist_core::emtsim::simulate;
use iqdist_core::{relay_iq, relay_quad};
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::scenario::{ModeDto, MatrixDto, Scenario, ScheduleDto};

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRow {
    pub source: ModeDto,
    pub m_f: f64,
    pub r_f_ohm: f64,
    pub iq_trip: bool,
    pub iq_time: Option<f64>,
    pub quad_pickup: bool,
    pub quad_transient_overreach: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixFailure {
    pub source: ModeDto,
    pub m_f: f64,
    pub r_f_ohm: f64,
    pub reason: String,
}

/// Runs one cell with the scenario's settings and the given source mode.
pub fn run_cell(scn: &Scenario, source: ModeDto, m_f: f64, r_f_ohm: f64) -> Result<MatrixRow> {
    let mut s = scn.clone();
    s.source.mode = source;
    if source != ModeDto::Scheduled {
        s.source.schedule = ScheduleDto::default();
    }
    s.fault.m_f = m_f;
    s.fault.r_f_ohm = r_f_ohm;
    s.fault.r_f_steps.clear();
    let r = s.resolve()?;
    let out = simulate(&r.cfg, &r.dynamics, &r.fault, &r.sim)?;
    let iq = relay_iq::evaluate(&out.record, &r.iq)?;
    let quad = relay_quad::evaluate(&out.record, &r.quad)?;
    Ok(MatrixRow {
        source,
        m_f,
        r_f_ohm,
        iq_trip: iq.tripped,
        iq_time: iq.trip_time,
        quad_pickup: quad.tripped,
        quad_transient_overreach: quad.transient_overreach,
    })
}

/// Rows come back in `sources × m_f × r_f` order regardless of scheduling.
pub fn run_fault_matrix(
    scn: &Scenario,
    m: &MatrixDto,
    jobs: usize,
) -> Result<(Vec<MatrixRow>, Vec<MatrixFailure>)> {
    if m.sources.is_empty() || m.m_f.is_empty() || m.r_f_ohm.is_empty() {
        return Err(CliError::Input("matrix: sources, m_f and r_f_ohm must be non-empty".into()));
    }
    let cells: Vec<_> = m
        .sources
        .iter()
        .flat_map(|&src| m.m_f.iter().flat_map(move |&mf| m.r_f_ohm.iter().map(move |&rf| (src, mf, rf))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(src, mf, rf)| run_cell(scn, src, mf, rf).map_err(|e| (src, mf, rf, e)))
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err((source, m_f, r_f_ohm, e)) => failures.push(MatrixFailure {
                source,
                m_f,
                r_f_ohm,
                reason: e.to_string(),
            }),
        }
    }
    Ok((rows, failures))
}

pub fn write_matrix_csv<W: Write>(w: W, rows: &[MatrixRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let map = |e: csv::Error| CliError::Runtime(format!("writing matrix: {e}"));
    out.write_record(["source", "m_f", "r_f", "iq_trip", "iq_time", "quad_pickup", "quad_transient_overreach"])
        .map_err(map)?;
    for r in rows {
        out.write_record([
            r.source.name().to_string(),
            r.m_f.to_string(),
            r.r_f_ohm.to_string(),
            r.iq_trip.to_string(),
            r.iq_time.map(|t| t.to_string()).unwrap_or_default(),
            r.quad_pickup.to_string(),
            r.quad_transient_overreach.to_string(),
        ])
        .map_err(map)?;
    }
    out.flush().map_err(|e| CliError::io("writing matrix", e))
}

pub fn write_failures_csv<W: Write>(w: W, f: &[MatrixFailure]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let map = |e: csv::Error| CliError::Runtime(format!("writing matrix errors: {e}"));
    out.write_record(["source", "m_f", "r_f", "error"]).map_err(map)?;
    for r in f {
        out.write_record([r.source.name().to_string(), r.m_f.to_string(), r.r_f_ohm.to_string(), r.reason.clone()])
            .map_err(map)?;
    }
    out.flush().map_err(|e| CliError::io("writing matrix errors", e))
}
