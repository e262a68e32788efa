//! Waveform files, scenario schema and simulate/replay determinism.

use std::fs;
use std::path::{Path, PathBuf};

use iqdist::cli::{cmd_analyze, cmd_replay, cmd_simulate, Common};
use iqdist::scenario::Scenario;
use iqdist::waveform_io::{export_waveform, import_waveform, read_csv, write_csv, WaveformMeta};
use iqdist::CliError;
use iqdist_core::emtsim::{simulate, FaultEvent, SimOptions, SourceDynamics, SourceSchedule, Track};
use iqdist_core::{SystemConfig, WaveformRecord};
use proptest::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

fn bits(rec: &WaveformRecord) -> Vec<u64> {
    rec.v.iter().chain(&rec.i).flatten().map(|x| x.to_bits()).collect()
}

fn records() -> Vec<WaveformRecord> {
    let cfg = SystemConfig::reference();
    let opts = SimOptions::default();
    let no_fault = {
        let mut f = FaultEvent::new(0.1, 0.5, 0.0);
        f.t_on = 10.0;
        f
    };
    let stepped = SourceDynamics::scheduled(SourceSchedule {
        dr: Track::step(0.0, 0.0, 0.05),
        dx: Track::step(0.0, 0.02, 0.6),
        ivs_gain: Track::step(1.0, 0.04, 0.5),
        ivs_shift: Track::constant(0.0),
    });
    [
        (SourceDynamics::linear(), no_fault),
        (SourceDynamics::gfm_saturation(), FaultEvent::new(0.1, 0.3, 4.0)),
        (stepped, FaultEvent::new(0.1, 0.6, 10.0)),
    ]
    .iter()
    .map(|(d, f)| simulate(&cfg, d, f, &opts).unwrap().record)
    .collect()
}

#[test]
fn waveform_csv_round_trips_bit_for_bit() {
    let dir = TempDir::new().unwrap();
    let base = SystemConfig::reference().base;
    for (k, rec) in records().iter().enumerate() {
        let p = dir.path().join(format!("w{k}.csv"));
        export_waveform(&p, rec, &WaveformMeta::new(rec, &base, "h")).unwrap();
        let (back, meta) = import_waveform(&p).unwrap();
        assert_eq!(meta.unwrap().samples, rec.len());
        assert_eq!(back.fs.to_bits(), rec.fs.to_bits());
        assert_eq!(back.t0.to_bits(), rec.t0.to_bits());
        assert_eq!(bits(&back), bits(rec), "record {k}");

        // Without the sidecar the rate is inferred from the time column.
        fs::remove_file(p.with_extension("meta")).unwrap();
        let (inferred, _) = import_waveform(&p).unwrap();
        assert!((inferred.fs - rec.fs).abs() < 1e-6 * rec.fs);
        assert_eq!(bits(&inferred), bits(rec));
    }
}

#[test]
fn truncated_file_is_reported_with_its_line() {
    let rec = &records()[1];
    let mut buf = Vec::new();
    write_csv(&mut buf, rec).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let keep: Vec<&str> = text.lines().take(101).collect();
    let mut cut = keep.join("\n");
    // Last row loses its final fields.
    let last = cut.rfind(',').unwrap();
    cut.truncate(last);
    cut.truncate(cut.rfind(',').unwrap());
    let err = read_csv(cut.as_bytes(), None, Path::new("cut.csv")).unwrap_err();
    match &err {
        CliError::Malformed { line, .. } => assert_eq!(*line, 101),
        e => panic!("unexpected {e:?}"),
    }
    assert_eq!(err.exit_code(), 2);

    let base = SystemConfig::reference().base;
    let meta = WaveformMeta::new(rec, &base, "");
    let short: String = text.lines().take(50).collect::<Vec<_>>().join("\n");
    let err = read_csv(short.as_bytes(), Some(&meta), Path::new("short.csv")).unwrap_err();
    assert!(matches!(err, CliError::Malformed { .. }), "{err:?}");
    assert!(err.to_string().contains("short.csv:"));
}

#[test]
fn off_grid_timestamp_is_rejected() {
    let text = "t,v_sa,v_sb,v_sc,i_sa,i_sb,i_sc\n0,0,0,0,0,0,0\n0.0002,0,0,0,0,0,0\n0.0005,0,0,0,0,0,0\n";
    let err = read_csv(text.as_bytes(), None, Path::new("x.csv")).unwrap_err();
    assert!(matches!(err, CliError::Malformed { line: 2.., .. }), "{err:?}");
}

#[test]
fn scenario_schema_rejects_unknown_keys() {
    let origin = Path::new("s.toml");
    for text in [
        "bogus = 1\n",
        "[fault]\nm_f = 0.5\nrf_ohm = 3.0\n",
        "[source]\nmode = \"linear\"\nlimit = 2\n",
        "[relay_iq]\nreach_km = 80.0\n",
    ] {
        let err = Scenario::from_toml(text, origin).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}");
    }
    let err = Scenario::from_toml("[source]\nmode = \"magic\"\n", origin).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    Scenario::from_toml("[fault]\nm_f = 0.3\nr_f_ohm = 2.5\n", origin).unwrap();
}

#[test]
fn shipped_scenarios_load_and_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for e in fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            Scenario::load(&p).unwrap().resolve().unwrap();
            n += 1;
        }
    }
    assert!(n >= 5);
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.toml");
    fs::write(&p, text).unwrap();
    p
}

fn common(scenario: &Path, out: &Path) -> Common {
    Common {
        scenario: Some(scenario.to_path_buf()),
        out: Some(out.to_path_buf()),
        jobs: 1,
        seed: Some(7),
    }
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const GFM2_INTERNAL: &str = "[source]\nmode = \"gfm_virtual_impedance\"\n[fault]\nm_f = 0.7\nr_f_ohm = 5.0\n";

#[test]
fn replay_of_simulated_waveform_gives_identical_decision() {
    let dir = TempDir::new().unwrap();
    let scn = write_scenario(dir.path(), GFM2_INTERNAL);
    let sim_out = cmd_simulate(&common(&scn, &dir.path().join("sim"))).unwrap();
    let rep_out = cmd_replay(&common(&scn, &dir.path().join("rep")), &sim_out.join("waveform.csv")).unwrap();
    let a = fs::read(sim_out.join("decision.json")).unwrap();
    let b = fs::read(rep_out.join("decision.json")).unwrap();
    assert_eq!(a, b);
    for name in ["iq_trace_AG.csv", "iq_trace_BC.csv", "quad_trajectory.csv"] {
        assert_eq!(fs::read(sim_out.join(name)).unwrap(), fs::read(rep_out.join(name)).unwrap(), "{name}");
    }
    assert_eq!(json(&sim_out.join("decision.json"))["iq"]["tripped"], Value::Bool(true));

    // Same scenario twice: byte-identical outputs apart from the manifest clock.
    let again = cmd_simulate(&common(&scn, &dir.path().join("sim2"))).unwrap();
    for name in ["waveform.csv", "waveform.meta", "decision.json", "quad_trajectory.csv"] {
        assert_eq!(fs::read(sim_out.join(name)).unwrap(), fs::read(again.join(name)).unwrap(), "{name}");
    }
    let (mut m1, mut m2) = (json(&sim_out.join("manifest.json")), json(&again.join("manifest.json")));
    m1["unix_time_s"] = Value::Null;
    m2["unix_time_s"] = Value::Null;
    assert_eq!(m1, m2);
    assert_eq!(m1["seed"], Value::from(7));
}

#[test]
fn replay_rejects_a_waveform_on_another_base() {
    let dir = TempDir::new().unwrap();
    let scn = write_scenario(dir.path(), GFM2_INTERNAL);
    let sim_out = cmd_simulate(&common(&scn, &dir.path().join("sim"))).unwrap();
    let other = write_scenario(dir.path(), "[system]\nkv_ll = 132.0\n");
    let err = cmd_replay(&common(&other, &dir.path().join("rep")), &sim_out.join("waveform.csv")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

/// Both rates sample the same 10 µs integration grid, so every second
/// sample of the 10 kHz record is the 5 kHz record.
#[test]
fn ten_kilohertz_records_agree_on_trip_decisions() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("gfm_virtual_impedance", 0.7, 5.0),
        ("gfm_virtual_impedance", 0.9, 0.0),
        ("gfm_saturation", 0.5, 10.0),
        ("linear", 0.5, 0.0),
        ("linear", 0.95, 0.0),
    ];
    for (k, (mode, m_f, r_f)) in cases.iter().enumerate() {
        let body = format!("[source]\nmode = \"{mode}\"\n[fault]\nm_f = {m_f}\nr_f_ohm = {r_f}\n[sim]\ndt_s = 1e-5\n");
        let lo = write_scenario(dir.path(), &body);
        let lo_out = cmd_simulate(&common(&lo, &dir.path().join(format!("lo{k}")))).unwrap();
        let hi = write_scenario(dir.path(), &format!("{body}fs_hz = 10000.0\n"));
        let hi_out = cmd_simulate(&common(&hi, &dir.path().join(format!("hi{k}")))).unwrap();

        let (a, _) = import_waveform(&lo_out.join("waveform.csv")).unwrap();
        let (b, _) = import_waveform(&hi_out.join("waveform.csv")).unwrap();
        assert_eq!(b.fs, 10000.0);
        for ph in 0..3 {
            let dec: Vec<u64> = b.v[ph].iter().step_by(2).map(|x| x.to_bits()).collect();
            let v: Vec<u64> = a.v[ph].iter().map(|x| x.to_bits()).collect();
            assert_eq!(&dec[..v.len()], &v[..]);
        }

        let (da, db) = (json(&lo_out.join("decision.json")), json(&hi_out.join("decision.json")));
        assert_eq!(da["iq"]["tripped"], db["iq"]["tripped"], "{mode} ({m_f}, {r_f} Ω)");
        assert_eq!(da["quad"]["pickup"], db["quad"]["pickup"], "{mode} ({m_f}, {r_f} Ω)");
        if let (Some(ta), Some(tb)) = (da["iq"]["trip_time_s"].as_f64(), db["iq"]["trip_time_s"].as_f64()) {
            assert!((ta - tb).abs() < 2e-3, "{ta} vs {tb}");
        }
    }
}

#[test]
fn simulated_operating_quantity_matches_analysis() {
    let scn = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/scheduled_step.toml");
    let dir = TempDir::new().unwrap();
    let an = cmd_analyze(&common(&scn, &dir.path().join("an"))).unwrap();
    let a = json(&an.join("analysis.json"));
    assert_eq!(a["oracle_ok"], Value::Bool(true));
    let want = a["psi_op_pu"].as_f64().unwrap();

    let sim = cmd_simulate(&common(&scn, &dir.path().join("sim"))).unwrap();
    let mut rdr = csv::Reader::from_path(sim.join("iq_trace_AG.csv")).unwrap();
    let rows: Vec<(f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    let t_end = rows.last().unwrap().0;
    let peak = rows
        .iter()
        .filter(|(t, _)| *t > t_end - 0.04)
        .fold(0.0f64, |m, (_, op)| m.max(op.abs()));
    assert!((peak - want).abs() < 0.02 * want, "simulated {peak} vs analysis {want}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_finite_samples_round_trip(
        fs in prop_oneof![Just(1000.0f64), Just(4800.0), Just(5000.0), Just(10000.0)],
        t0 in -1.0f64..1.0,
        data in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 6 * 3..6 * 40),
    ) {
        let n = data.len() / 6;
        let col = |c: usize| data[c * n..(c + 1) * n].to_vec();
        let rec = WaveformRecord { fs, t0, v: [col(0), col(1), col(2)], i: [col(3), col(4), col(5)] };
        let mut buf = Vec::new();
        write_csv(&mut buf, &rec).unwrap();
        let meta = WaveformMeta::new(&rec, &SystemConfig::reference().base, "");
        let back = read_csv(&buf[..], Some(&meta), Path::new("p.csv")).unwrap();
        prop_assert_eq!(bits(&back), bits(&rec));
    }
}
