//! Quadrilateral element: phasor estimation, loop impedances and the
//! settle-based pickup.

use std::f64::consts::PI;

use iqdist_core::emtsim::{simulate, FaultEvent, SimOptions, SourceDynamics};
use iqdist_core::netmodel::pre_fault_solve;
use iqdist_core::relay_iq::{self, LoopId, RelaySettings};
use iqdist_core::relay_quad::{self, compensated_dft, full_cycle_dft, Mimic, QuadSettings};
use iqdist_core::{Impedance, SystemConfig, WaveformRecord};
use num_complex::Complex64;
use proptest::prelude::*;

const FS: f64 = 5000.0;
const F0: f64 = 50.0;
const W: f64 = 2.0 * PI * F0;

fn quad(cfg: &SystemConfig) -> QuadSettings {
    QuadSettings::new(cfg.line, cfg.base)
}

fn sampled(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..n).map(|k| f(k as f64 / FS)).collect()
}

#[test]
fn pure_sine_gives_its_phasor() {
    let x = sampled(400, |t| (W * t).cos());
    let ph = full_cycle_dft(&x, FS, F0, 0.0).unwrap();
    for p in ph.iter().skip(100).flatten() {
        assert!((p.0 - Complex64::new(1.0, 0.0)).norm() < 1e-6, "{:?}", p);
    }
    assert!(ph[..99].iter().all(Option::is_none));
}

#[test]
fn second_harmonic_is_rejected() {
    let x = sampled(400, |t| 0.8 * (W * t - 0.3).cos() + 0.5 * (2.0 * W * t + 1.0).cos());
    let ph = full_cycle_dft(&x, FS, F0, 0.0).unwrap();
    for p in ph.iter().skip(100).flatten() {
        assert!((p.0 - Complex64::from_polar(0.8, -0.3)).norm() < 1e-9);
    }
}

#[test]
fn mimic_removes_decaying_offset() {
    let tau = 0.02;
    let x = sampled(600, |t| (W * t).cos() + 0.9 * (-t / tau).exp());
    let plain = full_cycle_dft(&x, FS, F0, 0.0).unwrap();
    let comp = compensated_dft(&x, FS, F0, 0.0, &Mimic::new(tau, FS).unwrap()).unwrap();
    let worst = |ph: &[Option<iqdist_core::Phasor>]| {
        ph.iter().skip(101).flatten().map(|p| (p.mag() - 1.0).abs()).fold(0.0f64, f64::max)
    };
    assert!(worst(&comp) < 0.01, "compensated error {}", worst(&comp));
    assert!(worst(&plain) > worst(&comp));
}

fn linear_fault(m_f: f64, r_f: f64) -> (SystemConfig, relay_quad::QuadDecision) {
    let cfg = SystemConfig::reference();
    let out = simulate(&cfg, &SourceDynamics::linear(), &FaultEvent::new(0.1, m_f, r_f), &SimOptions::default()).unwrap();
    let dec = relay_quad::evaluate(&out.record, &quad(&cfg)).unwrap();
    (cfg, dec)
}

#[test]
fn solid_faults_measure_the_line_impedance_to_the_fault() {
    for m_f in [0.05, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9, 0.99] {
        let (cfg, dec) = linear_fault(m_f, 0.0);
        let want = cfg.z_line().scale(m_f).to_complex();
        for (l, z) in dec.final_impedance.iter().enumerate() {
            let z = z.expect("loop current above pickup").to_complex();
            assert!((z - want).norm() < 0.01 * want.norm(), "m_f {m_f}, loop {l}: {z} vs {want}");
        }
    }
}

#[test]
fn resistive_fault_shows_remote_infeed() {
    // Steady two-source solution written out here: the fault-point voltage
    // follows from nodal analysis of the post-fault network.
    for (m_f, r_f_ohm) in [(0.3, 5.0), (0.6, 10.0)] {
        let (cfg, dec) = linear_fault(m_f, r_f_ohm);
        let pre = pre_fault_solve(&cfg).unwrap();
        let zl = cfg.z_line().to_complex();
        let a = cfg.z_source().to_complex() + zl * m_f;
        let b = cfg.z_grid().to_complex() + zl * (1.0 - m_f);
        let r = cfg.base.ohm_to_pu(r_f_ohm);
        let v_f = (pre.e_s.0 / a + pre.e_g.0 / b) / (a.inv() + b.inv() + 1.0 / r);
        let i_s = (pre.e_s.0 - v_f) / a;
        let i_g = (pre.e_g.0 - v_f) / b;
        let want = zl * m_f + r * (1.0 + i_g / i_s);
        let z = dec.final_impedance[0].unwrap().to_complex();
        assert!((z - want).norm() < 0.01 * want.norm(), "({m_f}, {r_f_ohm} Ω): {z} vs {want}");
    }
}

#[test]
fn zone_corners() {
    let cfg = SystemConfig::reference();
    let zone = quad(&cfg).zone;
    assert!(zone.contains(Impedance::new(1e-6, 1e-6)));
    assert!(zone.contains(cfg.z_line().scale(0.5)));
    assert!(!zone.contains(Impedance::new(0.0, 1.5 * zone.x_reach())));
    assert!(!zone.contains(cfg.z_line().scale(-0.2)));
}

#[test]
fn gfm_external_faults() {
    let cfg = SystemConfig::reference();
    let q = quad(&cfg);
    let iq = RelaySettings::new(cfg.line, cfg.base);
    let run = |d: &SourceDynamics, m_f, r_f| {
        let out = simulate(&cfg, d, &FaultEvent::new(0.1, m_f, r_f), &SimOptions::default()).unwrap();
        (
            relay_quad::evaluate(&out.record, &q).unwrap(),
            relay_iq::evaluate(&out.record, &iq).unwrap().tripped,
        )
    };
    let vi = SourceDynamics::gfm_virtual_impedance(cfg.z_line().angle());
    let (d, iq_trip) = run(&vi, 0.9, 0.0);
    assert!(!d.tripped && d.transient_overreach && !iq_trip);

    let (d, iq_trip) = run(&SourceDynamics::gfm_saturation(), 0.9, 8.0);
    assert!(d.tripped, "resistive limiter should overreach");
    assert!(!iq_trip);

    let (d, _) = run(&SourceDynamics::linear(), 0.9, 8.0);
    assert!(!d.tripped);
}

/// Balanced currents of 1 pu; the voltage follows `z(t)` through `V = Z I`.
fn impedance_record(n: usize, z: impl Fn(f64) -> Impedance) -> WaveformRecord {
    let mut v: [Vec<f64>; 3] = Default::default();
    let mut i: [Vec<f64>; 3] = Default::default();
    for k in 0..n {
        let t = k as f64 / FS;
        let zc = z(t).to_complex();
        for ph in 0..3 {
            let ip = Complex64::from_polar(1.0, -2.0 * PI / 3.0 * ph as f64);
            let rot = Complex64::from_polar(1.0, W * t);
            i[ph].push((ip * rot).re);
            v[ph].push((zc * ip * rot).re);
        }
    }
    WaveformRecord { fs: FS, t0: 0.0, v, i }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_scaling_leaves_decisions_unchanged(k in 0.2f64..5.0, m_f in 0.3f64..0.95, r_f in 0.0f64..20.0) {
        let cfg = SystemConfig::reference();
        let zl = cfg.z_line();
        let z_f = Impedance::new(zl.r * m_f + cfg.base.ohm_to_pu(r_f), zl.x * m_f);
        let rec = impedance_record(1500, |t| if t < 0.1 { zl.scale(3.0) } else { z_f });
        let mut scaled = rec.clone();
        for ph in 0..3 {
            scaled.v[ph].iter_mut().for_each(|x| *x *= k);
            scaled.i[ph].iter_mut().for_each(|x| *x *= k);
        }
        let q = quad(&cfg);
        let a = relay_quad::evaluate(&rec, &q).unwrap();
        let b = relay_quad::evaluate(&scaled, &q).unwrap();
        prop_assert_eq!(a.tripped, b.tripped);
        prop_assert_eq!(a.transient_overreach, b.transient_overreach);
        for (ta, tb) in a.trajectories.iter().zip(&b.trajectories) {
            prop_assert_eq!(&ta.inside, &tb.inside);
        }
    }

    /// The impedance dips into the zone for `dwell` and leaves again. A
    /// pickup needs a trailing inside run of at least the settle window.
    #[test]
    fn pickup_requires_a_full_settle_window(dwell in 0.0f64..0.06, tail in 0.0f64..0.06) {
        let cfg = SystemConfig::reference();
        let zl = cfg.z_line();
        let t_in = 0.06;
        let t_out = t_in + dwell;
        let n = ((t_out + tail) * FS) as usize + 1;
        let rec = impedance_record(n.max(200), |t| {
            if (t_in..t_out).contains(&t) { zl.scale(0.4) } else { zl.scale(3.0) }
        });
        let q = quad(&cfg);
        let d = relay_quad::evaluate(&rec, &q).unwrap();
        let settle = (q.settle_time * FS).round() as usize;
        let runs: Vec<usize> = d
            .trajectories
            .iter()
            .map(|tr| {
                let inside: Vec<bool> = tr.z.iter().map(|z| z.is_some_and(|z| q.zone.contains(z))).collect();
                prop_assert_eq!(&inside, &tr.inside);
                Ok(inside.iter().rev().take_while(|&&b| b).count())
            })
            .collect::<Result<_, _>>()?;
        prop_assert_eq!(d.tripped, runs.iter().any(|&r| r >= settle));
        if d.tripped {
            let l = LoopId::ALL.iter().position(|&l| Some(l) == d.tripping_loop).unwrap();
            prop_assert!(runs[l] >= settle);
        }
    }
}
