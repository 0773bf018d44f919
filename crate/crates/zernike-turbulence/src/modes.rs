//! Zernike modes on the unit disk and their Fourier transforms.
//!
//! `Z_n^m(ρ, θ) = √(n+1) R_n^{|m|}(ρ) e^{imθ}` inside the disk and zero
//! outside, normalized so that `∫_D Z Z'* = π δδ'`. The transform uses the
//! kernel `e^{-2πi s·q}`, which gives
//! `Z̃_n^m(q, φ) = 2π iⁿ √(n+1) J_{n+1}(2πq)/(2πq) e^{imφ}`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::bessel_j;

/// A valid Zernike index: `|m| ≤ n` and `n - |m|` even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub n: u32,
    pub m: i32,
}

impl ModeIndex {
    pub fn new(n: i64, m: i64) -> Result<Self> {
        if n < 0 || m.abs() > n || (n - m.abs()) % 2 != 0 || n > i32::MAX as i64 {
            return Err(Error::InvalidMode { n, m });
        }
        Ok(Self { n: n as u32, m: m as i32 })
    }

    pub fn m_abs(&self) -> u32 {
        self.m.unsigned_abs()
    }

    /// The mode with `m → -m`, i.e. the complex conjugate.
    pub fn conj(&self) -> Self {
        Self { n: self.n, m: -self.m }
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.n, self.m)
    }
}

/// A point in polar coordinates; `theta` is kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if r.is_nan() || r < 0.0 || !r.is_finite() || !theta.is_finite() {
            return Err(Error::Domain(format!("bad polar point r={r}, theta={theta}")));
        }
        Ok(Self { r, theta: theta.rem_euclid(TAU) })
    }

    pub fn origin() -> Self {
        Self { r: 0.0, theta: 0.0 }
    }

    pub fn from_cartesian(x: f64, y: f64) -> Self {
        Self { r: x.hypot(y), theta: y.atan2(x).rem_euclid(TAU) }
    }

    pub fn cartesian(&self) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        (self.r * c, self.r * s)
    }
}

fn binomial_f64(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// `R_n^{|m|}(ρ)` by the explicit finite sum.
///
/// The coefficients `(n-s)!/(s! ((n+m)/2-s)! ((n-m)/2-s)!)` are formed as a
/// product of two binomials, exact in integers.
pub fn radial_poly(n: u32, m_abs: u32, rho: f64) -> Result<f64> {
    ModeIndex::new(n as i64, m_abs as i64)?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("radial polynomial needs rho in [0, 1], got {rho}")));
    }
    Ok(radial_unchecked(n, m_abs, rho))
}

pub(crate) fn radial_unchecked(n: u32, m_abs: u32, rho: f64) -> f64 {
    let half = (n - m_abs) / 2;
    let rho2 = rho * rho;
    // Horner in ρ² from the lowest power ρ^{|m|} upwards
    let mut acc = 0.0f64;
    for s in 0..=half {
        let c = binomial_f64(n - s, s) * binomial_f64(n - 2 * s, half - s);
        let c = if s % 2 == 0 { c } else { -c };
        acc = acc * rho2 + c;
    }
    acc * rho.powi(m_abs as i32)
}

/// `Z_n^m` at `p`; exactly zero outside the closed unit disk.
pub fn zernike_eval(mode: ModeIndex, p: PolarPoint) -> Complex64 {
    if p.r > 1.0 {
        return Complex64::new(0.0, 0.0);
    }
    let amp = ((mode.n + 1) as f64).sqrt() * radial_unchecked(mode.n, mode.m_abs(), p.r);
    Complex64::from_polar(1.0, mode.m as f64 * p.theta) * amp
}

/// `Z_n^0(0) = √(n+1) (-1)^{n/2}` for even `n`; zero for odd `n`.
pub fn zernike_at_origin(n: u32) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let s = ((n + 1) as f64).sqrt();
    if (n / 2) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// `iⁿ` as a complex unit.
pub(crate) fn i_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Radial part of `Z̃_n`, `2π √(n+1) J_{n+1}(2πq)/(2πq)`, without `iⁿ`.
pub(crate) fn fourier_radial(n: u32, q: f64) -> f64 {
    let norm = ((n + 1) as f64).sqrt();
    if q == 0.0 {
        // J_1(u)/u → 1/2; higher orders vanish
        return if n == 0 { PI } else { 0.0 };
    }
    let u = TAU * q;
    TAU * norm * bessel_j(n + 1, u) / u
}

/// `Z̃_n^m` at frequency-plane point `q`.
pub fn fourier_zernike_eval(mode: ModeIndex, q: PolarPoint) -> Complex64 {
    let radial = fourier_radial(mode.n, q.r);
    i_pow(mode.n as i64) * Complex64::from_polar(radial, mode.m as f64 * q.theta)
}

/// All valid modes with `n ≤ n_max`, ordered by `(n, m)`.
pub fn enumerate_modes(n_max: u32) -> Vec<ModeIndex> {
    let mut out = Vec::with_capacity(((n_max + 1) * (n_max + 2) / 2) as usize);
    for n in 0..=n_max {
        let mut m = -(n as i32);
        while m <= n as i32 {
            out.push(ModeIndex { n, m });
            m += 2;
        }
    }
    out
}
