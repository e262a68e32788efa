//! Waveform CSV with a `.meta` sidecar.
//!
//! The CSV holds `t,v_sa,v_sb,v_sc,i_sa,i_sb,i_sc` in seconds and per unit.
//! Floats are written in shortest round-trip form, so a record survives
//! export and import bit for bit. The sidecar carries the exact sampling
//! rate and start time along with the per-unit base.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use iqdist_core::{PuBase, WaveformRecord};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const HEADER: [&str; 7] = ["t", "v_sa", "v_sb", "v_sc", "i_sa", "i_sb", "i_sc"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformMeta {
    pub fs_hz: f64,
    pub t0_s: f64,
    pub samples: usize,
    pub kv_ll: f64,
    pub mva: f64,
    pub f_hz: f64,
    #[serde(default)]
    pub scenario_hash: String,
    /// Fault inception, when the record came from the simulator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inception_s: Option<f64>,
}

impl WaveformMeta {
    pub fn new(rec: &WaveformRecord, base: &PuBase, scenario_hash: &str) -> Self {
        WaveformMeta {
            fs_hz: rec.fs,
            t0_s: rec.t0,
            samples: rec.len(),
            kv_ll: base.kv_ll,
            mva: base.mva,
            f_hz: base.f_hz,
            scenario_hash: scenario_hash.to_owned(),
            inception_s: None,
        }
    }

    pub fn base(&self) -> PuBase {
        PuBase::new(self.kv_ll, self.mva, self.f_hz)
    }
}

pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta")
}

pub fn write_csv<W: Write>(w: W, rec: &WaveformRecord) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let map = |e: csv::Error| CliError::Runtime(format!("writing waveform: {e}"));
    out.write_record(HEADER).map_err(map)?;
    let mut row = [0.0f64; 7];
    for n in 0..rec.len() {
        row[0] = rec.time(n);
        for p in 0..3 {
            row[1 + p] = rec.v[p][n];
            row[4 + p] = rec.i[p][n];
        }
        out.write_record(row.iter().map(|x| x.to_string())).map_err(map)?;
    }
    out.flush().map_err(|e| CliError::io("writing waveform", e))
}

/// Parses the CSV body. With `meta` the rate and start time come from the
/// sidecar; without it they are inferred from the time column.
pub fn read_csv<R: Read>(r: R, meta: Option<&WaveformMeta>, path: &Path) -> Result<WaveformRecord> {
    let bad = |line: u64, reason: String| CliError::Malformed {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(bad(1, format!("expected header `{}`", HEADER.join(","))));
    }
    let mut t = Vec::new();
    let mut v: [Vec<f64>; 3] = Default::default();
    let mut i: [Vec<f64>; 3] = Default::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            bad(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 7 {
            return Err(bad(line, format!("expected 7 fields, found {}", rec.len())));
        }
        let mut vals = [0.0; 7];
        for (k, field) in rec.iter().enumerate() {
            vals[k] = field
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(line, format!("field `{}` is not a number: {field:?}", HEADER[k])))?;
            if !vals[k].is_finite() {
                return Err(bad(line, format!("field `{}` is not finite", HEADER[k])));
            }
        }
        t.push(vals[0]);
        for p in 0..3 {
            v[p].push(vals[1 + p]);
            i[p].push(vals[4 + p]);
        }
    }
    let (fs, t0) = match meta {
        Some(m) => {
            if m.samples != t.len() {
                return Err(bad(
                    t.len() as u64 + 1,
                    format!("record has {} samples, sidecar says {}", t.len(), m.samples),
                ));
            }
            (m.fs_hz, m.t0_s)
        }
        None => {
            if t.len() < 2 {
                return Err(bad(t.len() as u64 + 1, "need at least two samples to infer the rate".into()));
            }
            let span = t[t.len() - 1] - t[0];
            ((t.len() - 1) as f64 / span, t[0])
        }
    };
    let rec = WaveformRecord { fs, t0, v, i };
    // Timestamps must agree with the uniform grid to within a small fraction of a step.
    let tol = 1e-6 / fs;
    if let Some(k) = (0..t.len()).find(|&k| (t[k] - rec.time(k)).abs() > tol.max(1e-12 * t[k].abs())) {
        return Err(bad(k as u64 + 2, format!("timestamp {} is off the {fs} Hz grid", t[k])));
    }
    rec.validate()?;
    Ok(rec)
}

pub fn export_waveform(path: &Path, rec: &WaveformRecord, meta: &WaveformMeta) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
    write_csv(std::io::BufWriter::new(f), rec)?;
    let text = toml::to_string(meta).map_err(|e| CliError::Runtime(format!("encoding sidecar: {e}")))?;
    let mp = meta_path(path);
    fs::write(&mp, text).map_err(|e| CliError::io(format!("writing {}", mp.display()), e))
}

/// Reads a waveform and its sidecar, if one exists next to it.
pub fn import_waveform(path: &Path) -> Result<(WaveformRecord, Option<WaveformMeta>)> {
    let mp = meta_path(path);
    let meta = if mp.exists() {
        let text = fs::read_to_string(&mp).map_err(|e| CliError::io(format!("reading {}", mp.display()), e))?;
        let m: WaveformMeta = toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", mp.display())))?;
        Some(m)
    } else {
        None
    };
    let f = fs::File::open(path).map_err(|e| CliError::io(format!("opening {}", path.display()), e))?;
    let rec = read_csv(std::io::BufReader::new(f), meta.as_ref(), path)?;
    Ok((rec, meta))
}
