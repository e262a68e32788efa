//! Steady-state IQ network of a two-source line with a nonlinear sending-end
//! source.
//!
//! The sending-end source change is represented by an impedance step `ΔZ_s`
//! (driven by the pre-disturbance current) and an IVS change `ΔE_s`. The
//! fault point is energised through `R_f` by the negated pre-fault voltage.
//! [`incremental_current`], [`incremental_voltage`] and
//! [`operating_quantity`] are the closed forms; [`nodal_oracle`] solves the
//! same circuit by modified nodal analysis and shares no algebra with them.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linalg::solve_complex;
use crate::phasor::{ComplexProduct, Impedance, Phasor};
use crate::system::{PreFaultLoad, SystemConfig};
// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

/// Fault branch resistance. `Open` is the unfaulted (`R_f → ∞`) branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FaultResistance {
    Finite(f64),
    Open,
}

impl FaultResistance {
    pub fn finite(self) -> Option<f64> {
        match self {
            FaultResistance::Finite(r) => Some(r),
            FaultResistance::Open => None,
        }
    }
}

/// One evaluation point of the per-phase IQ network (all per-unit).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IqNetworkCase {
    /// Sending-end source impedance before the disturbance.
    pub z_s: Impedance,
    /// Source impedance change emulating the current limiter.
    pub dz_s: Impedance,
    pub z_g: Impedance,
    /// Full-length positive-sequence line impedance.
    pub z_l: Impedance,
    /// Fault position as a fraction of the line length.
    pub m_f: f64,
    /// Relay reach as a fraction of the line length.
    pub m: f64,
    pub r_f: FaultResistance,
    /// Pre-fault voltage at the fault point.
    pub v_f_pre: Phasor,
    /// Pre-fault sending-end current (relay bus into the line).
    pub i_s_pre: Phasor,
    /// IVS change source in the IQ network orientation: a positive value
    /// opposes the sending-end current, i.e. the post-disturbance IVS is
    /// `E_s,pre − de_s`.
    pub de_s: Phasor,
    /// Restraint bias K ≥ 1.
    pub k_rst: f64,
}

impl IqNetworkCase {
    /// Linear-source case (`ΔZ_s = 0`, `ΔE_s = 0`, `K = 1`) on `cfg` with the
    /// pre-fault state `pre`.
    pub fn on_system(
        cfg: &SystemConfig,
        pre: &PreFault,
        m_f: f64,
        r_f: FaultResistance,
        m: f64,
    ) -> Self {
        IqNetworkCase {
            z_s: cfg.z_source(),
            dz_s: Impedance::ZERO,
            z_g: cfg.z_grid(),
            z_l: cfg.z_line(),
            m_f,
            m,
            r_f,
            v_f_pre: pre.voltage_at(m_f),
            i_s_pre: pre.i_s,
            de_s: Phasor::ZERO,
            k_rst: 1.0,
        }
    }

    pub fn with_dz_s(mut self, dz_s: Impedance) -> Self {
        self.dz_s = dz_s;
        self
    }

    pub fn with_de_s(mut self, de_s: Phasor) -> Self {
        self.de_s = de_s;
        self
    }

    pub fn with_k_rst(mut self, k_rst: f64) -> Self {
        self.k_rst = k_rst;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let imps = [self.z_s, self.dz_s, self.z_g, self.z_l];
        if imps.iter().any(|z| !z.is_finite()) {
            return Err(invalid("impedance", "must be finite"));
        }
        if self.z_s.r < 0.0 || self.z_g.r < 0.0 || self.z_l.r < 0.0 || self.dz_s.r < 0.0 {
            return Err(invalid("impedance", "resistances must be >= 0"));
        }
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(invalid("m", "reach must lie in (0, 1)"));
        }
        if !(self.m_f >= 0.0 && self.m_f.is_finite()) {
            return Err(invalid("m_f", "fault position must be >= 0"));
        }
        if let FaultResistance::Finite(r) = self.r_f {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(invalid("r_f", "fault resistance must be finite and >= 0"));
            }
        }
        if !(self.k_rst >= 1.0 && self.k_rst.is_finite()) {
            return Err(invalid("k_rst", "restraint bias must be >= 1"));
        }
        if !(self.v_f_pre.is_finite() && self.i_s_pre.is_finite() && self.de_s.is_finite()) {
            return Err(invalid("phasor", "must be finite"));
        }
        Ok(())
    }

    fn source_branch(&self) -> Complex64 {
        (self.z_s + self.dz_s).to_complex()
    }

    /// Remote branch seen from the fault point: `Z_g + (1 − m_f) Z_ℓ`.
    fn remote_branch(&self) -> Complex64 {
        (self.z_g + self.z_l.scale(1.0 - self.m_f)).to_complex()
    }

    /// Combined IQ-network source in the sending-end branch: `ΔE_s + I_pre ΔZ_s`.
    fn source_change(&self) -> Complex64 {
        self.de_s.0 + self.i_s_pre.0 * self.dz_s.to_complex()
    }
}

/// Auxiliary impedances used by the closed forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxQuantities {
    /// `(Z_s + ΔZ_s + m_f Z_ℓ)(Z_g + (1 − m_f) Z_ℓ)`.
    pub z_x: ComplexProduct,
    /// `Z_s + ΔZ_s + Z_g + Z_ℓ`.
    pub z_sgl: Impedance,
    /// `R_f ‖ (Z_g + (1 − m_f) Z_ℓ)`.
    pub z_y: Impedance,
}

pub fn aux_quantities(case: &IqNetworkCase) -> Result<AuxQuantities> {
    let near = case.source_branch() + case.z_l.to_complex() * case.m_f;
    let far = case.remote_branch();
    let z_y = match case.r_f {
        FaultResistance::Open => far,
        FaultResistance::Finite(r) => {
            let den = far + r;
            if r == 0.0 && far.norm() == 0.0 {
                return Err(Error::DegenerateNetwork(
                    "fault resistance and remote branch are both zero",
                ));
            }
            if den.norm() == 0.0 {
                return Err(Error::DegenerateNetwork("R_f in resonance with remote branch"));
            }
            far * r / den
        }
    };
    Ok(AuxQuantities {
        z_x: ComplexProduct(near * far),
        z_sgl: case.z_s + case.dz_s + case.z_g + case.z_l,
        z_y: Impedance::from_complex(z_y),
    })
}

/// Shared pieces of the closed forms.
struct Terms {
    /// Coefficient of `V_f,pre` in ΔI_s: `Z_x / ((Z_s+ΔZ_s+m_f Z_ℓ)(Z_x + R_f Z_sgℓ))`.
    fault_gain: Complex64,
    /// `Z_y + m_f Z_ℓ + Z_s + ΔZ_s`.
    source_den: Complex64,
    z_y: Complex64,
}

fn terms(case: &IqNetworkCase) -> Result<Terms> {
    case.validate()?;
    let aux = aux_quantities(case)?;
    let near = case.source_branch() + case.z_l.to_complex() * case.m_f;
    let z_y = aux.z_y.to_complex();

    let fault_gain = match case.r_f {
        FaultResistance::Open => Complex64::new(0.0, 0.0),
        FaultResistance::Finite(r) => {
            let den = aux.z_x.0 + aux.z_sgl.to_complex() * r;
            if den.norm() == 0.0 {
                return Err(Error::DegenerateNetwork("Z_x + R_f Z_sgl vanishes"));
            }
            if near.norm() > 0.0 {
                aux.z_x.0 / (near * den)
            } else {
                // Z_x / near reduces to the remote branch when near = 0.
                case.remote_branch() / den
            }
        }
    };
    let source_den = z_y + near;
    if source_den.norm() == 0.0 {
        return Err(Error::DegenerateNetwork("sending-end loop impedance vanishes"));
    }
    Ok(Terms {
        fault_gain,
        source_den,
        z_y,
    })
}

/// Sending-end incremental current ΔI_s.
pub fn incremental_current(case: &IqNetworkCase) -> Result<Phasor> {
    let t = terms(case)?;
    Ok(Phasor(
        case.v_f_pre.0 * t.fault_gain - case.source_change() / t.source_den,
    ))
}

/// Sending-end incremental voltage ΔV_s.
pub fn incremental_voltage(case: &IqNetworkCase) -> Result<Phasor> {
    let t = terms(case)?;
    let m_f_zl = case.z_l.to_complex() * case.m_f;
    Ok(Phasor(
        -case.v_f_pre.0 * case.source_branch() * t.fault_gain
            - (t.z_y + m_f_zl) / t.source_den * case.source_change(),
    ))
}

/// Complex operating function ψ̄_op (incremental voltage at the reach point).
pub fn operating_phasor(case: &IqNetworkCase) -> Result<Phasor> {
    let t = terms(case)?;
    let zl = case.z_l.to_complex();
    Ok(Phasor(
        -case.v_f_pre.0 * (case.source_branch() + zl * case.m) * t.fault_gain
            - case.source_change() * (t.z_y + zl * case.m_f - zl * case.m) / t.source_den,
    ))
}

/// Operating quantity ψ_op = |ψ̄_op|.
pub fn operating_quantity(case: &IqNetworkCase) -> Result<f64> {
    operating_phasor(case).map(Phasor::mag)
}

/// Operating quantity of a linear source and a solid fault.
pub fn ideal_operating_quantity(case: &IqNetworkCase) -> Result<f64> {
    let zs = case.z_s.to_complex();
    let zl = case.z_l.to_complex();
    let den = zs + zl * case.m_f;
    if den.norm() == 0.0 {
        return Err(Error::DegenerateNetwork("Z_s + m_f Z_l vanishes"));
    }
    Ok((-case.v_f_pre.0 * (zs + zl * case.m) / den).norm())
}

/// Restraining quantity ψ_rst = K |V_f,pre|.
pub fn restraining_quantity(case: &IqNetworkCase) -> f64 {
    case.k_rst * case.v_f_pre.mag()
}

/// Closed-form solution of one case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IqSolution {
    pub di_s: Phasor,
    pub dv_s: Phasor,
    pub psi_op: f64,
    pub psi_rst: f64,
    /// Post-disturbance sending-end current `I_pre + ΔI_s`.
    pub i_s_total: Phasor,
}

impl IqSolution {
    /// Internal/external discrimination; a tie counts as external.
    pub fn op_exceeds_rst(&self) -> bool {
        self.psi_op > self.psi_rst
    }
}

pub fn solve(case: &IqNetworkCase) -> Result<IqSolution> {
    let di_s = incremental_current(case)?;
    let dv_s = incremental_voltage(case)?;
    let psi_op = operating_quantity(case)?;
    Ok(IqSolution {
        di_s,
        dv_s,
        psi_op,
        psi_rst: restraining_quantity(case),
        i_s_total: case.i_s_pre + di_s,
    })
}

/// Post-disturbance apparent impedance at the relay, `V_s / I_s`, from the
/// total (pre-fault plus incremental) quantities.
pub fn apparent_impedance(case: &IqNetworkCase, sol: &IqSolution) -> Option<Impedance> {
    let v_s_pre = case.v_f_pre.0 + case.z_l.to_complex() * case.m_f * case.i_s_pre.0;
    let v = v_s_pre + sol.dv_s.0;
    let i = sol.i_s_total.0;
    if i.norm() == 0.0 {
        return None;
    }
    Some(Impedance::from_complex(v / i))
}

/// Independent solution of the IQ network by modified nodal analysis.
///
/// Unknowns are the relay-node and fault-node voltages plus the current of
/// every branch; zero-impedance branches therefore need no special casing.
/// The three sources (`I_pre ΔZ_s`, `ΔE_s`, `V_f,pre`) are solved one at a
/// time and summed.
pub fn nodal_oracle(case: &IqNetworkCase) -> Result<(Phasor, Phasor)> {
    case.validate()?;
    let zero = Complex64::new(0.0, 0.0);
    let sources = [
        (-(case.i_s_pre.0 * case.dz_s.to_complex()), zero),
        (-case.de_s.0, zero),
        (zero, -case.v_f_pre.0),
    ];
    let mut di = zero;
    let mut dv = zero;
    for (emf_src, emf_fault) in sources {
        let (i, v) = mna_solve(case, emf_src, emf_fault)?;
        di += i;
        dv += v;
    }
    Ok((Phasor(di), Phasor(dv)))
}

/// Returns (current from the relay node into the line, relay-node voltage).
fn mna_solve(case: &IqNetworkCase, emf_src: Complex64, emf_fault: Complex64) -> Result<(Complex64, Complex64)> {
    // Branch convention: V_from + emf − V_to = Z · i, i flowing from → to.
    // Nodes: 0 = ground, 1 = relay, 2 = fault point.
    let z_src = case.source_branch();
    let z_near = case.z_l.to_complex() * case.m_f;
    let z_far = case.remote_branch();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);

    // (from, to, emf, z)
    let mut branches: [(usize, usize, Complex64, Complex64); 4] = [
        (0, 1, emf_src, z_src),
        (1, 2, zero, z_near),
        (2, 0, zero, z_far),
        (0, 2, emf_fault, zero),
    ];
    let n_branches = match case.r_f {
        FaultResistance::Finite(r) => {
            branches[3].3 = Complex64::new(r, 0.0);
            4
        }
        FaultResistance::Open => 3,
    };

    // Unknown vector: [V1, V2, i_0 .. i_{n-1}], padded to 6 with identity rows.
    const N: usize = 6;
    let mut a = [[zero; N]; N];
    let mut b = [zero; N];
    for (k, &(from, to, emf, z)) in branches.iter().take(n_branches).enumerate() {
        let col = 2 + k;
        // KCL rows 0 and 1 (nodes 1 and 2): current leaving is positive.
        if from > 0 {
            a[from - 1][col] += one;
        }
        if to > 0 {
            a[to - 1][col] -= one;
        }
        // Branch row: V_from − V_to − Z i = −emf.
        let row = col;
        if from > 0 {
            a[row][from - 1] += one;
        }
        if to > 0 {
            a[row][to - 1] -= one;
        }
        a[row][col] -= z;
        b[row] = -emf;
    }
    for k in n_branches..4 {
        a[2 + k][2 + k] = one;
    }
    let x = solve_complex(a, b).ok_or(Error::DegenerateNetwork("singular admittance matrix"))?;
    Ok((x[3], x[0]))
}

/// Pre-disturbance phasors of the unfaulted two-source line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreFault {
    pub e_s: Phasor,
    pub e_g: Phasor,
    /// Sending-end current, relay bus into the line.
    pub i_s: Phasor,
    /// Relay bus voltage.
    pub v_s: Phasor,
    pub z_l: Impedance,
}

impl PreFault {
    /// Voltage at `frac` of the line length from the relay.
    pub fn voltage_at(&self, frac: f64) -> Phasor {
        self.v_s - self.i_s * self.z_l.scale(frac)
    }

    /// Active power leaving the relay bus into the line.
    pub fn p_sending(&self) -> f64 {
        (self.v_s.0 * self.i_s.0.conj()).re
    }
}

fn pre_fault_at(cfg: &SystemConfig, delta: f64) -> PreFault {
    let zs = cfg.z_source();
    let zl = cfg.z_line();
    let zg = cfg.z_grid();
    let e_s = Phasor::from_polar(cfg.source.ivs_mag, delta + cfg.grid.ivs_angle);
    let e_g = Phasor::from_polar(cfg.grid.ivs_mag, cfg.grid.ivs_angle);
    let i_s = (e_s - e_g) / (zs + zl + zg);
    PreFault {
        e_s,
        e_g,
        i_s,
        v_s: e_s - i_s * zs,
        z_l: zl,
    }
}

/// Solves the pre-disturbance network. With [`PreFaultLoad::ActivePower`]
/// the sending IVS angle is found by bisection on the stable side of the
/// power-angle curve.
pub fn pre_fault_solve(cfg: &SystemConfig) -> Result<PreFault> {
    cfg.validate()?;
    if (cfg.z_source() + cfg.z_line() + cfg.z_grid()).is_zero() {
        return Err(Error::DegenerateNetwork("zero total series impedance"));
    }
    let target = match cfg.load {
        PreFaultLoad::IvsAngle(delta) => return Ok(pre_fault_at(cfg, delta)),
        PreFaultLoad::ActivePower(p) => p,
    };
    let p = |d: f64| pre_fault_at(cfg, d).p_sending();
    // P(δ) = c + α cos δ + β sin δ for a series network.
    let c = 0.5 * (p(0.0) + p(PI));
    let alpha = 0.5 * (p(0.0) - p(PI));
    let beta = p(0.5 * PI) - c;
    let amp = alpha.hypot(beta);
    let d_max = beta.atan2(alpha);
    let limit = c + amp;
    if target > limit || target < c - amp {
        return Err(Error::TransferLimit {
            requested: target,
            limit,
        });
    }
    let (mut lo, mut hi) = (d_max - PI, d_max);
    let (lo0, hi0) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let err = p(mid) - target;
        if err.abs() <= 1e-13 || hi - lo <= 1e-15 {
            let sol = pre_fault_at(cfg, mid);
            if (sol.p_sending() - target).abs() <= 1e-9 {
                return Ok(sol);
            }
            break;
        }
        if err < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence { lo: lo0, hi: hi0 })
}

/// Magnitude of a limiter impedance at `angle` (rad) that brings the total
/// sending-end current down to `i_target`. Returns 0 when the unlimited
/// current already satisfies the target.
pub fn limiter_impedance_for_current(case: &IqNetworkCase, angle: f64, i_target: f64) -> Result<f64> {
    if !(i_target > 0.0) {
        return Err(invalid("i_target", "must be > 0"));
    }
    let current = |rho: f64| -> Result<f64> {
        let c = case.with_dz_s(Impedance::from_polar(rho, angle));
        Ok((c.i_s_pre + incremental_current(&c)?).mag())
    };
    if current(0.0)? <= i_target {
        return Ok(0.0);
    }
    let mut hi = 0.1;
    while current(hi)? > i_target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoConvergence { lo: 0.0, hi });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if current(mid)? > i_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
