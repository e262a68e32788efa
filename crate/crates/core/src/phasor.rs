//! Complex steady-state quantities.
//!
//! A [`Phasor`] `X` stands for the waveform `x(t) = Re(X e^{jωt})`, so its
//! magnitude is the peak value of the sinusoid. Per-unit instantaneous
//! waveforms in this crate use the same convention, which keeps phasor
//! magnitudes and waveform amplitudes numerically equal.

use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex64;
// Float math comes from libm through this trait; rustc flags it unused.
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Phasor(pub Complex64);

impl Phasor {
    pub const ZERO: Phasor = Phasor(Complex64::new(0.0, 0.0));

    pub const fn new(re: f64, im: f64) -> Self {
        Phasor(Complex64::new(re, im))
    }

    pub fn from_polar(mag: f64, angle_rad: f64) -> Self {
        Phasor(Complex64::from_polar(mag, angle_rad))
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }

    pub fn mag(self) -> f64 {
        self.0.norm()
    }

    pub fn angle(self) -> f64 {
        self.0.arg()
    }

    pub fn to_polar(self) -> (f64, f64) {
        (self.mag(), self.angle())
    }

    pub fn is_finite(self) -> bool {
        self.0.re.is_finite() && self.0.im.is_finite()
    }

    /// Instantaneous value `Re(X e^{jωt})`.
    pub fn instantaneous(self, omega: f64, t: f64) -> f64 {
        let (s, c) = (omega * t).sin_cos();
        self.0.re * c - self.0.im * s
    }

    /// Rotate by a real angle (radians).
    pub fn rotate(self, angle_rad: f64) -> Self {
        Phasor(self.0 * Complex64::from_polar(1.0, angle_rad))
    }
}

impl From<Complex64> for Phasor {
    fn from(c: Complex64) -> Self {
        Phasor(c)
    }
}

impl Add for Phasor {
    type Output = Phasor;
    fn add(self, rhs: Phasor) -> Phasor {
        Phasor(self.0 + rhs.0)
    }
}

impl AddAssign for Phasor {
    fn add_assign(&mut self, rhs: Phasor) {
        self.0 += rhs.0;
    }
}

impl Sub for Phasor {
    type Output = Phasor;
    fn sub(self, rhs: Phasor) -> Phasor {
        Phasor(self.0 - rhs.0)
    }
}

impl Neg for Phasor {
    type Output = Phasor;
    fn neg(self) -> Phasor {
        Phasor(-self.0)
    }
}

impl Mul<f64> for Phasor {
    type Output = Phasor;
    fn mul(self, k: f64) -> Phasor {
        Phasor(self.0 * k)
    }
}

/// Current times impedance gives a voltage.
impl Mul<Impedance> for Phasor {
    type Output = Phasor;
    fn mul(self, z: Impedance) -> Phasor {
        Phasor(self.0 * z.to_complex())
    }
}

/// Voltage over impedance gives a current.
impl Div<Impedance> for Phasor {
    type Output = Phasor;
    fn div(self, z: Impedance) -> Phasor {
        Phasor(self.0 / z.to_complex())
    }
}

/// Series impedance `r + jx` in per-unit (or ohms, when stated).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Impedance {
    pub r: f64,
    pub x: f64,
}

impl Impedance {
    pub const ZERO: Impedance = Impedance { r: 0.0, x: 0.0 };

    pub const fn new(r: f64, x: f64) -> Self {
        Impedance { r, x }
    }

    pub fn from_polar(mag: f64, angle_rad: f64) -> Self {
        let (s, c) = angle_rad.sin_cos();
        Impedance {
            r: mag * c,
            x: mag * s,
        }
    }

    pub fn resistive(r: f64) -> Self {
        Impedance { r, x: 0.0 }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.r, self.x)
    }

    pub fn from_complex(c: Complex64) -> Self {
        Impedance { r: c.re, x: c.im }
    }

    pub fn mag(self) -> f64 {
        self.r.hypot(self.x)
    }

    pub fn angle(self) -> f64 {
        self.x.atan2(self.r)
    }

    pub fn scale(self, k: f64) -> Self {
        Impedance {
            r: self.r * k,
            x: self.x * k,
        }
    }

    pub fn is_zero(self) -> bool {
        self.r == 0.0 && self.x == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.r.is_finite() && self.x.is_finite()
    }
}

impl Add for Impedance {
    type Output = Impedance;
    fn add(self, rhs: Impedance) -> Impedance {
        Impedance::new(self.r + rhs.r, self.x + rhs.x)
    }
}

impl Sub for Impedance {
    type Output = Impedance;
    fn sub(self, rhs: Impedance) -> Impedance {
        Impedance::new(self.r - rhs.r, self.x - rhs.x)
    }
}

impl Mul<f64> for Impedance {
    type Output = Impedance;
    fn mul(self, k: f64) -> Impedance {
        self.scale(k)
    }
}

impl Mul for Impedance {
    type Output = ComplexProduct;
    fn mul(self, rhs: Impedance) -> ComplexProduct {
        ComplexProduct(self.to_complex() * rhs.to_complex())
    }
}

/// Product of two impedances (unit Ω² or pu²). Kept apart from
/// [`Impedance`] so it cannot be added to one by accident.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexProduct(pub Complex64);

impl ComplexProduct {
    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }
}
