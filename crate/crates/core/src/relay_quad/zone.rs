//! Quadrilateral zone characteristic in the R-X plane.

// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::phasor::Impedance;

/// Convex quadrilateral bounded by a lower directional ray, a right blinder
/// parallel to the line, a top reactance line through the reach point and a
/// left directional ray. All impedances in pu, angles in rad.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZonePolygon {
    pub zone: u8,
    /// Reach as a fraction of the line.
    pub reach: f64,
    /// Positive-sequence line impedance.
    pub z_line: Impedance,
    /// Resistive reach: where the right blinder crosses the R axis.
    pub r_reach: f64,
    /// Angle of the lower directional ray, usually slightly negative.
    pub dir_low: f64,
    /// Angle of the left directional ray, beyond the line angle.
    pub dir_high: f64,
    /// Slope angle of the top line; 0 is flat, negative droops to the right.
    pub tilt: f64,
}

fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

/// Intersection of the lines `p + s·d` and `q + t·e`.
fn intersect(p: (f64, f64), d: (f64, f64), q: (f64, f64), e: (f64, f64)) -> Option<(f64, f64)> {
    let den = cross(d, e);
    if den.abs() < 1e-12 {
        return None;
    }
    let s = cross((q.0 - p.0, q.1 - p.1), e) / den;
    Some((p.0 + s * d.0, p.1 + s * d.1))
}

fn dir(a: f64) -> (f64, f64) {
    let (s, c) = a.sin_cos();
    (c, s)
}

impl ZonePolygon {
    /// Zone with directional rays at −15° and line angle + 15° and a top line
    /// drooping 10° to the right, which keeps load export from pulling
    /// remote resistive faults into the zone.
    pub fn new(zone: u8, reach: f64, z_line: Impedance, r_reach: f64) -> Self {
        let deg = core::f64::consts::PI / 180.0;
        ZonePolygon {
            zone,
            reach,
            z_line,
            r_reach,
            dir_low: -15.0 * deg,
            dir_high: z_line.angle() + 15.0 * deg,
            tilt: -10.0 * deg,
        }
    }

    pub fn reach_point(&self) -> (f64, f64) {
        (self.reach * self.z_line.r, self.reach * self.z_line.x)
    }

    pub fn x_reach(&self) -> f64 {
        self.reach * self.z_line.x
    }

    /// Vertices in counter-clockwise order, starting at the origin.
    pub fn vertices(&self) -> Option<[(f64, f64); 4]> {
        let o = (0.0, 0.0);
        let la = dir(self.z_line.angle());
        let blinder = (self.r_reach, 0.0);
        let top = self.reach_point();
        let p1 = intersect(o, dir(self.dir_low), blinder, la)?;
        let p2 = intersect(blinder, la, top, dir(self.tilt))?;
        let p3 = intersect(top, dir(self.tilt), o, dir(self.dir_high))?;
        Some([o, p1, p2, p3])
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.reach, self.r_reach, self.dir_low, self.dir_high, self.tilt];
        if vals.iter().any(|v| !v.is_finite()) || !self.z_line.is_finite() {
            return Err(invalid("zone", "parameters must be finite"));
        }
        if !(self.reach > 0.0 && self.r_reach > 0.0) {
            return Err(invalid("zone", "reach and resistive reach must be > 0"));
        }
        let la = self.z_line.angle();
        if !(self.dir_low < 0.5 * la && self.dir_high > la) {
            return Err(invalid("zone", "directional rays must bracket the line angle"));
        }
        let v = self
            .vertices()
            .ok_or_else(|| invalid("zone", "boundary lines are parallel"))?;
        for k in 0..4 {
            let a = v[k];
            let b = v[(k + 1) % 4];
            let c = v[(k + 2) % 4];
            if cross((b.0 - a.0, b.1 - a.1), (c.0 - b.0, c.1 - b.1)) <= 0.0 {
                return Err(invalid("zone", "polygon is not convex"));
            }
        }
        // The reach point must lie on or inside the boundary.
        let (rr, rx) = self.reach_point();
        if !self.contains_tol(Impedance::new(rr, rx), 1e-12) {
            return Err(invalid("zone", "polygon does not cover the protected segment"));
        }
        Ok(())
    }

    pub fn contains(&self, z: Impedance) -> bool {
        self.contains_tol(z, 0.0)
    }

    fn contains_tol(&self, z: Impedance, tol: f64) -> bool {
        let Some(v) = self.vertices() else {
            return false;
        };
        (0..4).all(|k| {
            let a = v[k];
            let b = v[(k + 1) % 4];
            cross((b.0 - a.0, b.1 - a.1), (z.r - a.0, z.x - a.1)) >= -tol
        })
    }
}
