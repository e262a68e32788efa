//! Region maps over the source-impedance change plane.
//!
//! For each `(m_f, R_f)` cell the closed-form network is evaluated on a
//! `ΔR_s × ΔX_s` grid and every point is labelled. The contour where the
//! total sending-end current reaches the limiter setting is traced with
//! marching squares.

use std::io::Write;

use iqdist_core::netmodel::{apparent_impedance, pre_fault_solve, solve, FaultResistance, IqNetworkCase, PreFault};
use iqdist_core::relay_quad::ZonePolygon;
use iqdist_core::{Impedance, SystemConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    /// ψ_op against ψ_rst of the IQ element.
    IqDependability,
    /// Steady apparent impedance in zone 1, for faults inside the reach.
    QuadZone1Internal,
    /// Same test for faults beyond the reach, where "inside" is an overreach.
    QuadZone1External,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    OpGtRst,
    OpLeRst,
    InsideZ1,
    OutsideZ1,
    Degenerate,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::OpGtRst => "op_gt_rst",
            Label::OpLeRst => "op_le_rst",
            Label::InsideZ1 => "inside_z1",
            Label::OutsideZ1 => "outside_z1",
            Label::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    /// `(min, max, steps)` in pu.
    pub dr_range: (f64, f64, usize),
    pub dx_range: (f64, f64, usize),
    /// `(m_f, R_f in Ω)`.
    pub cells: Vec<(f64, f64)>,
    pub base: SystemConfig,
    pub classifier: Classifier,
    pub i_limit: f64,
    /// IQ reach and restraint bias.
    pub reach: f64,
    pub k_rst: f64,
    pub zone: ZonePolygon,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi, n)) in [("dr", self.dr_range), ("dx", self.dx_range)] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(CliError::Input(format!("sweep.{name}: need finite min < max")));
            }
            if n < 2 {
                return Err(CliError::Input(format!("sweep.{name}: need at least 2 steps")));
            }
        }
        if self.cells.is_empty() {
            return Err(CliError::Input("sweep.cells: at least one cell is required".into()));
        }
        for &(m_f, r_f) in &self.cells {
            if !(m_f > 0.0 && m_f.is_finite() && r_f >= 0.0 && r_f.is_finite()) {
                return Err(CliError::Input(format!("sweep.cells: bad cell ({m_f}, {r_f})")));
            }
        }
        if !(self.i_limit > 0.0) {
            return Err(CliError::Input("sweep: i_limit must be > 0".into()));
        }
        self.base.validate()?;
        self.zone.validate()?;
        Ok(())
    }

    pub fn dr_values(&self) -> Vec<f64> {
        linspace(self.dr_range)
    }

    pub fn dx_values(&self) -> Vec<f64> {
        linspace(self.dx_range)
    }
}

fn linspace((lo, hi, n): (f64, f64, usize)) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// One labelled grid. Point `(i, j)` sits at `(dr[i], dx[j])` and is stored
/// at `j * dr.len() + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMap {
    pub m_f: f64,
    pub r_f_ohm: f64,
    pub dr: Vec<f64>,
    pub dx: Vec<f64>,
    pub labels: Vec<Label>,
    pub i_mag: Vec<f64>,
    /// `ψ_op / ψ_rst` for the IQ classifier, `NaN` otherwise.
    pub ratio: Vec<f64>,
    /// Contour `|I_s| = i_limit`, as chained polylines.
    pub boundary: Vec<Vec<(f64, f64)>>,
}

impl RegionMap {
    pub fn at(&self, i: usize, j: usize) -> Label {
        self.labels[j * self.dr.len() + i]
    }

    pub fn count(&self, l: Label) -> usize {
        self.labels.iter().filter(|&&x| x == l).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let map = |e: csv::Error| CliError::Runtime(format!("writing region map: {e}"));
        out.write_record(["dr", "dx", "label", "i_mag"]).map_err(map)?;
        for (j, &dx) in self.dx.iter().enumerate() {
            for (i, &dr) in self.dr.iter().enumerate() {
                let k = j * self.dr.len() + i;
                out.write_record([dr.to_string(), dx.to_string(), self.labels[k].as_str().into(), self.i_mag[k].to_string()])
                    .map_err(map)?;
            }
        }
        out.flush().map_err(|e| CliError::io("writing region map", e))
    }

    pub fn write_boundary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let map = |e: csv::Error| CliError::Runtime(format!("writing boundary: {e}"));
        out.write_record(["dr", "dx"]).map_err(map)?;
        for line in &self.boundary {
            for &(r, x) in line {
                out.write_record([r.to_string(), x.to_string()]).map_err(map)?;
            }
        }
        out.flush().map_err(|e| CliError::io("writing boundary", e))
    }
}

/// Classification of a single point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointResult {
    pub label: Label,
    pub i_mag: f64,
    pub ratio: f64,
}

pub fn evaluate_point(spec: &SweepSpec, pre: &PreFault, m_f: f64, r_f_ohm: f64, dz: Impedance) -> PointResult {
    let cfg = &spec.base;
    let r_f = FaultResistance::Finite(cfg.base.ohm_to_pu(r_f_ohm));
    let case = IqNetworkCase::on_system(cfg, pre, m_f, r_f, spec.reach)
        .with_dz_s(dz)
        .with_k_rst(spec.k_rst);
    let degenerate = PointResult {
        label: Label::Degenerate,
        i_mag: f64::NAN,
        ratio: f64::NAN,
    };
    let Ok(sol) = solve(&case) else {
        return degenerate;
    };
    let i_mag = sol.i_s_total.mag();
    match spec.classifier {
        Classifier::IqDependability => PointResult {
            label: if sol.op_exceeds_rst() { Label::OpGtRst } else { Label::OpLeRst },
            i_mag,
            ratio: sol.psi_op / sol.psi_rst,
        },
        Classifier::QuadZone1Internal | Classifier::QuadZone1External => match apparent_impedance(&case, &sol) {
            Some(z) => PointResult {
                label: if spec.zone.contains(z) { Label::InsideZ1 } else { Label::OutsideZ1 },
                i_mag,
                ratio: f64::NAN,
            },
            None => degenerate,
        },
    }
}

/// Runs every cell of `spec`. `jobs = 0` uses all cores. Output order
/// follows `spec.cells` and does not depend on the worker count.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<RegionMap>> {
    spec.validate()?;
    let pre = pre_fault_solve(&spec.base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("worker pool: {e}")))?;
    let dr = spec.dr_values();
    let dx = spec.dx_values();
    let maps = pool.install(|| {
        spec.cells
            .iter()
            .map(|&(m_f, r_f)| {
                let pts: Vec<PointResult> = (0..dr.len() * dx.len())
                    .into_par_iter()
                    .map(|k| {
                        let (i, j) = (k % dr.len(), k / dr.len());
                        evaluate_point(spec, &pre, m_f, r_f, Impedance::new(dr[i], dx[j]))
                    })
                    .collect();
                let i_mag: Vec<f64> = pts.iter().map(|p| p.i_mag).collect();
                let boundary = marching_squares(&dr, &dx, &i_mag, spec.i_limit);
                RegionMap {
                    m_f,
                    r_f_ohm: r_f,
                    dr: dr.clone(),
                    dx: dx.clone(),
                    labels: pts.iter().map(|p| p.label).collect(),
                    ratio: pts.iter().map(|p| p.ratio).collect(),
                    i_mag,
                    boundary,
                }
            })
            .collect()
    });
    Ok(maps)
}

/// Contour of `f = level` over a rectilinear grid (`f[j * xs.len() + i]`),
/// returned as polylines. Crossings are placed by linear interpolation on
/// cell edges; saddles are split using the cell-centre average. Cells with
/// a non-finite corner are skipped.
pub fn marching_squares(xs: &[f64], ys: &[f64], f: &[f64], level: f64) -> Vec<Vec<(f64, f64)>> {
    let nx = xs.len();
    let ny = ys.len();
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let at = |i: usize, j: usize| f[j * nx + i] - level;
    // Edge ids: horizontal edge (i, j)→(i+1, j) and vertical edge (i, j)→(i, j+1).
    #[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
    enum Edge {
        H(usize, usize),
        V(usize, usize),
    }
    let point = |e: Edge| -> (f64, f64) {
        let (a, b, p, q) = match e {
            Edge::H(i, j) => (at(i, j), at(i + 1, j), (xs[i], ys[j]), (xs[i + 1], ys[j])),
            Edge::V(i, j) => (at(i, j), at(i, j + 1), (xs[i], ys[j]), (xs[i], ys[j + 1])),
        };
        let t = if a == b { 0.5 } else { a / (a - b) };
        (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
    };
    let mut segs: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            if c.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let above = c.map(|v| v >= 0.0);
            // Edges in order bottom, right, top, left.
            let edges = [Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j)];
            let crossing: Vec<usize> = (0..4).filter(|&k| above[k] != above[(k + 1) % 4]).collect();
            match crossing.len() {
                2 => segs.push((edges[crossing[0]], edges[crossing[1]])),
                4 => {
                    let centre_above = c.iter().sum::<f64>() / 4.0 >= 0.0;
                    // Pair each crossing edge with the neighbour that keeps the
                    // centre on the same side as the diagonal it matches.
                    if centre_above == above[0] {
                        segs.push((edges[0], edges[1]));
                        segs.push((edges[2], edges[3]));
                    } else {
                        segs.push((edges[3], edges[0]));
                        segs.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    chain(segs).into_iter().map(|line| line.into_iter().map(point).collect()).collect()
}

fn chain<E: Copy + Eq + std::hash::Hash>(segs: Vec<(E, E)>) -> Vec<Vec<E>> {
    use std::collections::HashMap;
    let mut adj: HashMap<E, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segs.iter().enumerate() {
        adj.entry(a).or_default().push(k);
        adj.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut lines = Vec::new();
    // Start from open ends first so open polylines come out whole.
    let mut starts: Vec<usize> = (0..segs.len()).collect();
    starts.sort_by_key(|&k| {
        let (a, b) = segs[k];
        let open = adj[&a].len() == 1 || adj[&b].len() == 1;
        (!open, k)
    });
    for s in starts {
        if used[s] {
            continue;
        }
        used[s] = true;
        let (a, b) = segs[s];
        let (mut line, mut tail) = if adj[&b].len() == 1 { (vec![b, a], a) } else { (vec![a, b], b) };
        loop {
            let next = adj[&tail].iter().copied().find(|&k| !used[k]);
            let Some(k) = next else { break };
            used[k] = true;
            let (p, q) = segs[k];
            tail = if p == tail { q } else { p };
            line.push(tail);
        }
        lines.push(line);
    }
    lines
}
