//! Lumped RL time-domain simulation of the two-source test line.
//!
//! The network (source branch, line split at the fault point, fault branch,
//! remote line segment, grid branch) is symmetric and the fault is ABCG, so
//! it is solved in amplitude-invariant Clarke coordinates. The α and β
//! circuits use positive-sequence data; the 0 circuit carries no excitation
//! and is identically zero. Inductors use Dommel companion models with the
//! trapezoidal rule; each parameter discontinuity is crossed with two
//! backward-Euler half steps to suppress numerical ringing.
//!
//! The simulation starts in the exact periodic steady state of the
//! discretised network, so memory-based incremental quantities vanish until
//! the first event.

mod limiter;
mod schedule;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::linalg::solve_real;
use crate::netmodel::{pre_fault_solve, FaultResistance, PreFault};
use crate::phasor::{Impedance, Phasor};
use crate::system::SystemConfig;
use crate::waveform::WaveformRecord;

pub use limiter::{gfm_limiter_step, LimiterState};
pub use schedule::{FaultSchedule, Segment, Track};

/// Smallest fault resistance used in the time domain, pu. A bolted fault is
/// a closed switch with this on-resistance.
pub const R_ON: f64 = 1e-6;

const KCL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceMode {
    /// Fixed impedance and IVS.
    Linear,
    /// Impedance and IVS follow [`SourceSchedule`].
    Scheduled,
    /// Saturation current limiter (adaptive series resistance).
    GfmSaturation,
    /// Adaptive virtual impedance at `vi_angle`.
    GfmVirtualImpedance,
}

/// Sending-source parameter changes for [`SourceMode::Scheduled`].
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSchedule {
    /// Added series resistance, pu.
    pub dr: Track,
    /// Added series reactance at nominal frequency, pu.
    pub dx: Track,
    /// IVS magnitude as a multiple of its pre-fault value.
    pub ivs_gain: Track,
    /// IVS phase shift, rad.
    pub ivs_shift: Track,
}

impl Default for SourceSchedule {
    fn default() -> Self {
        SourceSchedule {
            dr: Track::constant(0.0),
            dx: Track::constant(0.0),
            ivs_gain: Track::constant(1.0),
            ivs_shift: Track::constant(0.0),
        }
    }
}

impl SourceSchedule {
    fn is_identity(&self) -> bool {
        *self == SourceSchedule::default()
    }

    fn tracks(&self) -> [&Track; 4] {
        [&self.dr, &self.dx, &self.ivs_gain, &self.ivs_shift]
    }

    /// Complex IVS multiplier at `t` (relative to inception).
    pub fn ivs_factor(&self, t: f64) -> Complex64 {
        Complex64::from_polar(self.ivs_gain.value_at(t), self.ivs_shift.value_at(t))
    }

    pub fn dz_at(&self, t: f64) -> Impedance {
        Impedance::new(self.dr.value_at(t), self.dx.value_at(t))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceDynamics {
    pub mode: SourceMode,
    pub schedule: SourceSchedule,
    /// Current cap of the limiter, pu.
    pub i_limit: f64,
    /// Virtual-impedance angle, rad.
    pub vi_angle: f64,
    /// Limiter adaptation time constant, s.
    pub limiter_time_constant: f64,
}

impl SourceDynamics {
    pub fn linear() -> Self {
        SourceDynamics {
            mode: SourceMode::Linear,
            schedule: SourceSchedule::default(),
            i_limit: 1.2,
            vi_angle: 80f64.to_radians(),
            limiter_time_constant: 5e-3,
        }
    }

    pub fn scheduled(schedule: SourceSchedule) -> Self {
        SourceDynamics {
            mode: SourceMode::Scheduled,
            schedule,
            ..Self::linear()
        }
    }

    pub fn gfm_saturation() -> Self {
        SourceDynamics {
            mode: SourceMode::GfmSaturation,
            limiter_time_constant: 0.5e-3,
            ..Self::linear()
        }
    }

    pub fn gfm_virtual_impedance(vi_angle: f64) -> Self {
        SourceDynamics {
            mode: SourceMode::GfmVirtualImpedance,
            vi_angle,
            limiter_time_constant: 15e-3,
            ..Self::linear()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i_limit > 0.0 && self.i_limit.is_finite()) {
            return Err(invalid("i_limit", "must be > 0"));
        }
        if !(self.vi_angle >= 0.0 && self.vi_angle <= 0.5 * PI + 1e-12) {
            return Err(invalid("vi_angle", "must lie in [0, 90] degrees"));
        }
        if !(self.limiter_time_constant > 0.0 && self.limiter_time_constant.is_finite()) {
            return Err(invalid("limiter_time_constant", "must be > 0"));
        }
        let names = ["schedule.dr", "schedule.dx", "schedule.ivs_gain", "schedule.ivs_shift"];
        for (tr, name) in self.schedule.tracks().into_iter().zip(names) {
            tr.validate(name)?;
        }
        if self.schedule.dr.min_value() < 0.0 {
            return Err(invalid("schedule.dr", "added resistance must be >= 0"));
        }
        if self.schedule.ivs_gain.min_value() < 0.0 {
            return Err(invalid("schedule.ivs_gain", "must be >= 0"));
        }
        let s = &self.schedule;
        if s.dr.initial != 0.0 || s.dx.initial != 0.0 || s.ivs_gain.initial != 1.0 || s.ivs_shift.initial != 0.0
        {
            return Err(invalid("schedule", "tracks must start from the pre-fault source"));
        }
        if self.mode != SourceMode::Scheduled && !self.schedule.is_identity() {
            return Err(invalid("schedule", "only used by the scheduled source mode"));
        }
        Ok(())
    }
}

/// Balanced ABCG fault.
#[derive(Clone, Debug, PartialEq)]
pub struct FaultEvent {
    /// Earliest inception time, s. The fault is applied at the next rising
    /// zero crossing of the phase-a pre-fault voltage at the fault point.
    pub t_on: f64,
    /// Fault position as a fraction of the line length, in (0, 1).
    pub m_f: f64,
    /// Fault resistance in ohms; `Open` for no fault.
    pub r_f: FaultSchedule,
}

impl FaultEvent {
    pub fn new(t_on: f64, m_f: f64, r_f_ohm: f64) -> Self {
        FaultEvent {
            t_on,
            m_f,
            r_f: FaultSchedule::constant(FaultResistance::Finite(r_f_ohm)),
        }
    }

    /// An unfaulted run; `t_on` still anchors the source schedule.
    pub fn none(t_on: f64) -> Self {
        FaultEvent {
            t_on,
            m_f: 0.5,
            r_f: FaultSchedule::constant(FaultResistance::Open),
        }
    }

    pub fn validate(&self, period: f64) -> Result<()> {
        if !(self.t_on >= 2.0 * period && self.t_on.is_finite()) {
            return Err(invalid("t_on", "needs at least two pre-fault cycles"));
        }
        if !(self.m_f > 0.0 && self.m_f < 1.0) {
            return Err(invalid("m_f", "fault position must lie in (0, 1)"));
        }
        self.r_f.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    /// Total simulated time from t = 0, s.
    pub duration: f64,
    /// Integration step, s.
    pub dt: f64,
    /// Output sampling rate, Hz. `1/fs` must be a multiple of `dt`.
    pub fs: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            duration: 0.3,
            dt: 20e-6,
            fs: 5000.0,
        }
    }
}

impl SimOptions {
    fn decimation(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.fs > 0.0 && self.duration > 0.0) {
            return Err(invalid("options", "dt, fs and duration must be > 0"));
        }
        if self.dt > 1.0 / (10.0 * self.fs) * (1.0 + 1e-12) {
            return Err(invalid("dt", "must not exceed 1/(10 fs)"));
        }
        let ratio = 1.0 / (self.fs * self.dt);
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio {
            return Err(invalid("dt", "1/fs must be an integer multiple of dt"));
        }
        Ok(k as usize)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutput {
    pub record: WaveformRecord,
    /// Actual fault inception time after zero-crossing alignment, s.
    pub inception: f64,
    /// Largest nodal current residual over all accepted steps, pu.
    pub max_kcl_residual: f64,
    /// Sending-source impedance change at each output sample.
    pub dz_trace: Vec<Impedance>,
    pub pre_fault: PreFault,
}

impl SimOutput {
    pub fn final_dz(&self) -> Impedance {
        self.dz_trace.last().copied().unwrap_or(Impedance::ZERO)
    }
}

/// Series R-L branch with a Dommel companion model.
#[derive(Clone, Copy, Debug)]
struct RlBranch {
    r: f64,
    l: f64,
    /// Current at the last accepted step, flowing from → to.
    i: f64,
    /// Inductor voltage at the last accepted step.
    u: f64,
    l_prev: f64,
}

/// Companion conductance and history current: `i = g (v_from − v_to + e) + h`.
#[derive(Clone, Copy, Debug)]
struct Companion {
    g: f64,
    h: f64,
}

impl RlBranch {
    fn trapezoidal(&self, dt: f64) -> Companion {
        let k = 2.0 * self.l / dt;
        let g = 1.0 / (self.r + k);
        Companion {
            g,
            h: g * (k * self.i + self.l / self.l_prev * self.u),
        }
    }

    fn backward_euler(&self, h_step: f64) -> Companion {
        let k = self.l / h_step;
        let g = 1.0 / (self.r + k);
        Companion { g, h: g * k * self.i }
    }

    fn accept(&mut self, c: Companion, drop: f64) {
        self.i = c.g * drop + c.h;
        self.u = drop - self.r * self.i;
        self.l_prev = self.l;
    }
}

/// Both Clarke-mode circuits. Nodes per mode: 0 = relay bus, 1 = fault
/// point, 2 = remote bus; the α unknowns come first.
///
/// The source branch carries, besides its physical R-L, a quasi-static
/// limiter impedance `r_v + j x_v` acting on the current space vector
/// (`v = r_v i + x_v J i` with `J` the 90° rotation), which couples α and β.
#[derive(Clone, Copy, Debug)]
struct Network {
    source: [RlBranch; 2],
    seg1: [RlBranch; 2],
    seg2: [RlBranch; 2],
    grid: [RlBranch; 2],
    r_v: f64,
    x_v: f64,
    v: [[f64; 3]; 2],
}

struct StepInputs {
    e_s: [f64; 2],
    e_g: [f64; 2],
    /// Fault conductance, 0 when open.
    g_f: f64,
}

impl Network {
    /// Advances one step and returns the relative KCL residual, or `None`
    /// when the nodal matrix is singular.
    fn step(&mut self, inp: &StepInputs, dt: f64, half: bool) -> Option<f64> {
        let comp = |b: &RlBranch| {
            if half {
                b.backward_euler(dt)
            } else {
                b.trapezoidal(dt)
            }
        };
        let mut y = [[0.0; 6]; 6];
        let mut j = [0.0; 6];

        // Source 2-port: ((r + r_v + k) I + x_v J) i = drop + hist.
        let src = &self.source;
        let k = if half { src[0].l / dt } else { 2.0 * src[0].l / dt };
        let a = src[0].r + self.r_v + k;
        let b = self.x_v;
        let det = a * a + b * b;
        let ys = [[a / det, b / det], [-b / det, a / det]];
        let hist = [0, 1].map(|m| {
            if half {
                k * src[m].i
            } else {
                k * src[m].i + src[m].l / src[m].l_prev * src[m].u
            }
        });
        let ys_hist = [0, 1].map(|m| ys[m][0] * hist[0] + ys[m][1] * hist[1]);
        for m in 0..2 {
            for q in 0..2 {
                y[3 * m][3 * q] += ys[m][q];
                j[3 * m] += ys[m][q] * inp.e_s[q];
            }
            j[3 * m] += ys_hist[m];
        }

        let mut c1 = [Companion { g: 0.0, h: 0.0 }; 2];
        let mut c2 = c1;
        let mut cg = c1;
        for m in 0..2 {
            let o = 3 * m;
            c1[m] = comp(&self.seg1[m]);
            c2[m] = comp(&self.seg2[m]);
            cg[m] = comp(&self.grid[m]);
            // Grid: ground → node 2 with EMF e_g.
            y[o + 2][o + 2] += cg[m].g;
            j[o + 2] += cg[m].g * inp.e_g[m] + cg[m].h;
            for (c, p, q) in [(c1[m], o, o + 1), (c2[m], o + 1, o + 2)] {
                y[p][p] += c.g;
                y[q][q] += c.g;
                y[p][q] -= c.g;
                y[q][p] -= c.g;
                j[p] -= c.h;
                j[q] += c.h;
            }
            y[o + 1][o + 1] += inp.g_f;
        }

        let x = solve_real(y, j)?;
        let v = [[x[0], x[1], x[2]], [x[3], x[4], x[5]]];
        let drop = [0, 1].map(|m| inp.e_s[m] - v[m][0]);
        let i_src = [0, 1].map(|m| ys[m][0] * drop[0] + ys[m][1] * drop[1] + ys_hist[m]);
        for m in 0..2 {
            let ji = if m == 0 { -i_src[1] } else { i_src[0] };
            let s = &mut self.source[m];
            s.i = i_src[m];
            s.u = drop[m] - (s.r + self.r_v) * s.i - self.x_v * ji;
            s.l_prev = s.l;
            self.seg1[m].accept(c1[m], v[m][0] - v[m][1]);
            self.seg2[m].accept(c2[m], v[m][1] - v[m][2]);
            self.grid[m].accept(cg[m], inp.e_g[m] - v[m][2]);
        }
        self.v = v;

        let mut res: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for m in 0..2 {
            let r0 = self.source[m].i - self.seg1[m].i;
            let r1 = self.seg1[m].i - self.seg2[m].i - inp.g_f * v[m][1];
            let r2 = self.seg2[m].i + self.grid[m].i;
            res = res.max(r0.abs()).max(r1.abs()).max(r2.abs());
            scale = scale.max(self.source[m].i.abs()).max(self.seg2[m].i.abs());
        }
        Some(res / scale)
    }
}

/// Current magnitude seen by the virtual-impedance limiter. In the frame
/// rotating at the nominal frequency the fundamental is constant while a
/// decaying DC offset turns at −ω, so averaging with the sample half a cycle
/// back cancels the offset and leaves the fundamental magnitude.
struct HalfCycleMeter {
    buf: Vec<Complex64>,
    pos: usize,
}

impl HalfCycleMeter {
    fn new(n_half: usize, init: Complex64) -> Self {
        HalfCycleMeter {
            buf: vec![init; n_half.max(1)],
            pos: 0,
        }
    }

    fn push(&mut self, x: Complex64) -> f64 {
        let old = core::mem::replace(&mut self.buf[self.pos], x);
        self.pos = (self.pos + 1) % self.buf.len();
        (0.5 * (x + old)).norm()
    }
}

/// Trapezoidal-rule reactance of an inductance `l` at `omega`.
fn discrete_reactance(l: f64, omega: f64, dt: f64) -> f64 {
    2.0 * l / dt * (0.5 * omega * dt).tan()
}

struct Plant {
    omega: f64,
    r_s: f64,
    l_s: f64,
    r_g: f64,
    l_g: f64,
    r1: f64,
    l1: f64,
    z_base: f64,
}

impl Plant {
    fn new(cfg: &SystemConfig) -> Self {
        let omega = cfg.base.omega();
        let zs = cfg.z_source();
        let zg = cfg.z_grid();
        let zl = cfg.z_line();
        Plant {
            omega,
            r_s: zs.r,
            l_s: zs.x / omega,
            r_g: zg.r,
            l_g: zg.x / omega,
            r1: zl.r,
            l1: zl.x / omega,
            z_base: cfg.base.z_base(),
        }
    }
}

fn round_step(t: f64, dt: f64) -> usize {
    (t / dt).round().max(0.0) as usize
}

/// Runs one simulation and returns relay-bus waveforms sampled at `opts.fs`.
pub fn simulate(
    cfg: &SystemConfig,
    dyn_: &SourceDynamics,
    fault: &FaultEvent,
    opts: &SimOptions,
) -> Result<SimOutput> {
    cfg.validate()?;
    dyn_.validate()?;
    fault.validate(cfg.base.period())?;
    let decim = opts.decimation()?;
    let dt = opts.dt;
    let plant = Plant::new(cfg);
    let w = plant.omega;
    if !(plant.l_s > 0.0 && plant.l_g > 0.0) {
        return Err(invalid("source", "source and grid impedances need an inductive part"));
    }
    let m_f = fault.m_f;

    let pre = pre_fault_solve(cfg)?;
    // Discrete steady state: same IVSs, trapezoidal reactances.
    let xd = |l: f64| discrete_reactance(l, w, dt);
    let z_s = Complex64::new(plant.r_s, xd(plant.l_s));
    let z_1 = Complex64::new(m_f * plant.r1, xd(m_f * plant.l1));
    let z_2 = Complex64::new((1.0 - m_f) * plant.r1, xd((1.0 - m_f) * plant.l1));
    let z_g = Complex64::new(plant.r_g, xd(plant.l_g));
    let i_pre = (pre.e_s.0 - pre.e_g.0) / (z_s + z_1 + z_2 + z_g);
    let v_bus = pre.e_s.0 - z_s * i_pre;
    let v_f = v_bus - z_1 * i_pre;
    let v_rem = v_f - z_2 * i_pre;

    // Inception at the next rising zero of Re(V_f e^{jωt}) at or after t_on.
    let theta = v_f.arg();
    let t_period = 2.0 * PI / w;
    let t_zero = (-0.5 * PI - theta) / w;
    let t_inc = t_zero + ((fault.t_on - t_zero) / t_period).ceil() * t_period;
    let n_inc = round_step(t_inc, dt);
    let t_inc = n_inc as f64 * dt;

    let n_total = round_step(opts.duration, dt);
    let mut events: Vec<usize> = Vec::new();
    events.push(n_inc);
    for tr in dyn_.schedule.tracks() {
        events.extend(tr.step_times().map(|t| n_inc + round_step(t, dt)));
    }
    events.extend(fault.r_f.steps.iter().map(|&(t, _)| n_inc + round_step(t, dt)));
    events.sort_unstable();
    events.dedup();

    // Mode initial states: β phasors are −j times α phasors.
    let rots = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)];
    let branch = |r: f64, l: f64, i: Complex64, z: Complex64| {
        rots.map(|rot| RlBranch {
            r,
            l,
            i: (i * rot).re,
            u: (i * Complex64::new(0.0, z.im) * rot).re,
            l_prev: l,
        })
    };
    let mut net = Network {
        source: branch(plant.r_s, plant.l_s, i_pre, z_s),
        seg1: branch(m_f * plant.r1, m_f * plant.l1, i_pre, z_1),
        seg2: branch((1.0 - m_f) * plant.r1, (1.0 - m_f) * plant.l1, i_pre, z_2),
        grid: branch(plant.r_g, plant.l_g, -i_pre, z_g),
        r_v: 0.0,
        x_v: 0.0,
        v: rots.map(|rot| [(v_bus * rot).re, (v_f * rot).re, (v_rem * rot).re]),
    };

    let n_out = n_total / decim + 1;
    let mut rec = WaveformRecord {
        fs: opts.fs,
        t0: 0.0,
        v: [Vec::with_capacity(n_out), Vec::with_capacity(n_out), Vec::with_capacity(n_out)],
        i: [Vec::with_capacity(n_out), Vec::with_capacity(n_out), Vec::with_capacity(n_out)],
    };
    let mut dz_trace = Vec::with_capacity(n_out);
    let push = |rec: &mut WaveformRecord, net: &Network| {
        let (va, vb) = (net.v[0][0], net.v[1][0]);
        let (ia, ib) = (net.seg1[0].i, net.seg1[1].i);
        let s3 = 0.5 * 3f64.sqrt();
        rec.v[0].push(va);
        rec.v[1].push(-0.5 * va + s3 * vb);
        rec.v[2].push(-0.5 * va - s3 * vb);
        rec.i[0].push(ia);
        rec.i[1].push(-0.5 * ia + s3 * ib);
        rec.i[2].push(-0.5 * ia - s3 * ib);
    };
    push(&mut rec, &net);
    dz_trace.push(Impedance::ZERO);

    let mut limiter = LimiterState::default();
    let mut meter = HalfCycleMeter::new(round_step(0.5 * t_period, dt), i_pre);
    let e_s_mag = pre.e_s.mag();
    let mut max_res: f64 = 0.0;
    let mut next_event = 0usize;
    let mut last_params = (Impedance::ZERO, Complex64::new(1.0, 0.0), 0.0);
    let limited = matches!(dyn_.mode, SourceMode::GfmSaturation | SourceMode::GfmVirtualImpedance);

    for n in 1..=n_total {
        let t = n as f64 * dt;
        let t_rel = t - t_inc;
        let (dz, e_factor) = match dyn_.mode {
            SourceMode::Scheduled => (dyn_.schedule.dz_at(t_rel), dyn_.schedule.ivs_factor(t_rel)),
            _ => (Impedance::ZERO, Complex64::new(1.0, 0.0)),
        };
        let l_src = plant.l_s + dz.x / w;
        if !(l_src > 0.0) {
            return Err(invalid("schedule.dx", "source inductance must stay positive"));
        }
        let g_f = if n >= n_inc {
            match fault.r_f.value_at(t_rel) {
                FaultResistance::Finite(r) => 1.0 / (r / plant.z_base).max(R_ON),
                FaultResistance::Open => 0.0,
            }
        } else {
            0.0
        };
        let params = (dz, e_factor, g_f);
        let is_event = next_event < events.len() && events[next_event] == n && params != last_params;
        last_params = params;
        while next_event < events.len() && events[next_event] <= n {
            next_event += 1;
        }

        for s in net.source.iter_mut() {
            s.r = plant.r_s + dz.r;
            s.l = l_src;
        }
        let inputs = |tt: f64| {
            let ph = Complex64::from_polar(1.0, w * tt);
            StepInputs {
                e_s: rots.map(|rot| (pre.e_s.0 * e_factor * rot * ph).re),
                e_g: rots.map(|rot| (pre.e_g.0 * rot * ph).re),
                g_f,
            }
        };
        let res = if is_event {
            let h = 0.5 * dt;
            let r1 = net.step(&inputs(t - h), h, true);
            r1.and_then(|a| net.step(&inputs(t), h, true).map(|b| a.max(b)))
        } else {
            net.step(&inputs(t), dt, false)
        };
        let res = res.ok_or(Error::StepFailed {
            t,
            residual: f64::INFINITY,
        })?;
        if !(res <= KCL_TOL) {
            return Err(Error::StepFailed { t, residual: res });
        }
        max_res = max_res.max(res);

        let dz_now = if limited {
            let i_ab = Complex64::new(net.source[0].i, net.source[1].i);
            let i_dq = meter.push(i_ab * Complex64::from_polar(1.0, -w * t));
            // The saturation clamp acts on the instantaneous vector.
            let i_mag = match dyn_.mode {
                SourceMode::GfmVirtualImpedance => i_dq,
                _ => i_ab.norm(),
            };
            let z = gfm_limiter_step(&mut limiter, i_mag, e_s_mag, dyn_, dt);
            net.r_v = z.r;
            net.x_v = z.x;
            z
        } else {
            dz
        };

        if n % decim == 0 {
            push(&mut rec, &net);
            dz_trace.push(dz_now);
        }
    }
    Ok(SimOutput {
        record: rec,
        inception: t_inc,
        max_kcl_residual: max_res,
        dz_trace,
        pre_fault: PreFault {
            e_s: pre.e_s,
            e_g: pre.e_g,
            i_s: Phasor(i_pre),
            v_s: Phasor(v_bus),
            z_l: pre.z_l,
        },
    })
}
