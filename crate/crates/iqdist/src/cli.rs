//! Command-line driver.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use iqdist_core::emtsim::simulate;
use iqdist_core::netmodel::{pre_fault_solve, FaultResistance, IqNetworkCase};
use iqdist_core::{relay_iq, relay_quad, Impedance, Phasor};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::matrix::{run_fault_matrix, write_failures_csv, write_matrix_csv};
use crate::report::{analyze, settings_hash, sha256_hex, write_iq_trace, write_trajectory, DecisionJson};
use crate::scenario::{Resolved, Scenario};
use crate::sweep::run_sweep;
use crate::waveform_io::{export_waveform, import_waveform, WaveformMeta};

#[derive(Debug, Parser)]
#[command(name = "iqdist", version, about = "Incremental-quantity distance protection studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Scenario file (TOML). Defaults apply when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory; overrides `out_dir` in the scenario.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 = all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Overrides `seed` in the scenario.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form steady-state solution of the fault scenario.
    Analyze(Common),
    /// EMT simulation followed by both relays.
    Simulate(Common),
    /// Region maps over the source-impedance plane.
    Sweep(Common),
    /// Runs both relays on a recorded waveform.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        waveform: PathBuf,
    },
    /// Simulates every cell of the `[matrix]` table.
    Matrix(Common),
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    scenario_hash: String,
    settings_hash: Option<String>,
    seed: Option<u64>,
    jobs: usize,
    outputs: Vec<String>,
    unix_time_s: u64,
}

struct Run {
    scenario: Scenario,
    out: PathBuf,
    scenario_hash: String,
    seed: Option<u64>,
    jobs: usize,
    outputs: Vec<String>,
}

impl Run {
    fn new(c: &Common) -> Result<Self> {
        let scenario = match &c.scenario {
            Some(p) => Scenario::load(p)?,
            None => Scenario::default(),
        };
        let out = match (&c.out, &scenario.out_dir, &c.scenario) {
            (Some(o), _, _) => o.clone(),
            (None, Some(d), Some(p)) => p.parent().unwrap_or(Path::new(".")).join(d),
            (None, Some(d), None) => d.clone(),
            (None, None, _) => PathBuf::from("out"),
        };
        std::fs::create_dir_all(&out).map_err(|e| CliError::io(format!("creating {}", out.display()), e))?;
        Ok(Run {
            scenario_hash: sha256_hex(scenario.canonical().as_bytes()),
            seed: c.seed.or(scenario.seed),
            jobs: c.jobs,
            scenario,
            out,
            outputs: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let p = self.out.join(name);
        let f = File::create(&p).map_err(|e| CliError::io(format!("creating {}", p.display()), e))?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        use std::io::Write;
        let mut w = self.create(name)?;
        w.write_all(text.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(format!("writing {name}"), e))
    }

    fn finish(mut self, command: &str, settings: Option<String>) -> Result<PathBuf> {
        self.outputs.push("manifest.json".into());
        let m = Manifest {
            tool: "iqdist",
            version: env!("CARGO_PKG_VERSION"),
            command,
            scenario_hash: self.scenario_hash.clone(),
            settings_hash: settings,
            seed: self.seed,
            jobs: self.jobs,
            outputs: self.outputs.clone(),
            unix_time_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        let p = self.out.join("manifest.json");
        std::fs::write(&p, text).map_err(|e| CliError::io(format!("writing {}", p.display()), e))?;
        Ok(self.out)
    }
}

/// Runs the relays on `rec` and writes decision, traces and trajectory.
fn write_relay_outputs(run: &mut Run, r: &Resolved, rec: &iqdist_core::WaveformRecord) -> Result<String> {
    let iq = relay_iq::evaluate(rec, &r.iq)?;
    let quad = relay_quad::evaluate(rec, &r.quad)?;
    let dec = DecisionJson::new(&iq, &r.iq, &quad, &r.quad, rec.len(), rec.fs);
    run.write_text("decision.json", &dec.to_pretty())?;
    for (k, tr) in iq.traces.iter().enumerate() {
        let w = run.create(&format!("iq_trace_{}.csv", tr.loop_id.name()))?;
        write_iq_trace(w, &iq, k)?;
    }
    let every = ((1e-3 * rec.fs).round() as usize).max(1);
    let w = run.create("quad_trajectory.csv")?;
    write_trajectory(w, &quad, every)?;
    Ok(dec.settings_hash)
}

pub fn cmd_analyze(c: &Common) -> Result<PathBuf> {
    let mut run = Run::new(c)?;
    let s = &run.scenario;
    let r = s.resolve()?;
    let pre = pre_fault_solve(&r.cfg)?;
    let a = &s.analyze;
    let case = IqNetworkCase::on_system(
        &r.cfg,
        &pre,
        s.fault.m_f,
        FaultResistance::Finite(r.cfg.base.ohm_to_pu(s.fault.r_f_ohm)),
        s.relay_iq.reach,
    )
    .with_dz_s(Impedance { r: a.dr_pu, x: a.dx_pu })
    .with_de_s(pre.e_s - Phasor(pre.e_s.0 * Phasor::from_polar(a.ivs_gain, a.ivs_shift_deg.to_radians()).0))
    .with_k_rst(s.relay_iq.k_rst);
    let rep = analyze(&case, s.fault.r_f_ohm, &r.cfg.base)?;
    run.write_text("analysis.json", &serde_json::to_string_pretty(&rep).expect("analysis serializes"))?;
    run.finish("analyze", None)
}

pub fn cmd_simulate(c: &Common) -> Result<PathBuf> {
    let mut run = Run::new(c)?;
    let r = run.scenario.resolve()?;
    let out = simulate(&r.cfg, &r.dynamics, &r.fault, &r.sim)?;
    let mut meta = WaveformMeta::new(&out.record, &r.cfg.base, &run.scenario_hash);
    meta.inception_s = Some(out.inception);
    let wpath = run.out.join("waveform.csv");
    export_waveform(&wpath, &out.record, &meta)?;
    run.outputs.push("waveform.csv".into());
    run.outputs.push("waveform.meta".into());
    let h = write_relay_outputs(&mut run, &r, &out.record)?;
    run.finish("simulate", Some(h))
}

pub fn cmd_replay(c: &Common, waveform: &Path) -> Result<PathBuf> {
    let mut run = Run::new(c)?;
    let (rec, meta) = import_waveform(waveform)?;
    if let Some(m) = &meta {
        let b = m.base();
        let sb = run.scenario.system.to_config()?.base;
        if b != sb {
            return Err(CliError::Input(format!(
                "{}: base {} kV / {} MVA / {} Hz does not match the scenario",
                waveform.display(),
                b.kv_ll,
                b.mva,
                b.f_hz
            )));
        }
    }
    let mut s = run.scenario.clone();
    s.sim.fs_hz = rec.fs;
    let r = s.resolve()?;
    let h = write_relay_outputs(&mut run, &r, &rec)?;
    run.finish("replay", Some(h))
}

pub fn cmd_sweep(c: &Common) -> Result<PathBuf> {
    let mut run = Run::new(c)?;
    let s = run.scenario.clone();
    let dto = s
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Input("sweep: scenario has no [sweep] table".into()))?;
    let cfg = s.system.to_config()?;
    let spec = dto.to_spec(&s, &cfg)?;
    let maps = run_sweep(&spec, run.jobs)?;
    for (k, m) in maps.iter().enumerate() {
        m.write_csv(run.create(&format!("region_{k}.csv"))?)?;
        m.write_boundary_csv(run.create(&format!("boundary_{k}.csv"))?)?;
    }
    run.finish("sweep", None)
}

pub fn cmd_matrix(c: &Common) -> Result<PathBuf> {
    let mut run = Run::new(c)?;
    let s = run.scenario.clone();
    let m = s
        .matrix
        .as_ref()
        .ok_or_else(|| CliError::Input("matrix: scenario has no [matrix] table".into()))?;
    let r = s.resolve()?;
    let (rows, failures) = run_fault_matrix(&s, m, run.jobs)?;
    write_matrix_csv(run.create("matrix.csv")?, &rows)?;
    if !failures.is_empty() {
        write_failures_csv(run.create("matrix_errors.csv")?, &failures)?;
    }
    let n_fail = failures.len();
    let out = run.finish("matrix", Some(settings_hash(&r.iq, &r.quad)))?;
    if n_fail > 0 {
        return Err(CliError::Runtime(format!(
            "{n_fail} matrix cell(s) failed; see {}",
            out.join("matrix_errors.csv").display()
        )));
    }
    Ok(out)
}

pub fn run(cli: &Cli) -> Result<PathBuf> {
    match &cli.command {
        Command::Analyze(c) => cmd_analyze(c),
        Command::Simulate(c) => cmd_simulate(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Replay { common, waveform } => cmd_replay(common, waveform),
        Command::Matrix(c) => cmd_matrix(c),
    }
}
