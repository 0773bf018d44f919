//! Brute-force quadrature used to check the closed forms.
//!
//! None of this is on a fast path. Everything here integrates a defining
//! formula directly, with its own error estimate, so a closed form that
//! disagrees shows up as a number rather than an argument.
//!
//! * Disk integrals use Gauss–Legendre in `t = ρ²` times the trapezoid rule
//!   in angle. For polynomial integrands both are exact once there are
//!   enough nodes.
//! * `Γ` has two routes. The Fourier route integrates the triple-Bessel
//!   radial integral of the definition out to a cutoff. Past the cutoff the
//!   four-term combination decays like `u^{-7/2}`, and partial sums are
//!   averaged over the last period. The real-space route uses the convolution
//!   identity,
//!   `Γ = (1/4π) ∫_D ∫_D Z_{n1}^{m1}(u) Z_{n2}^{m2}(v) Z_{n3}^{m3*}((u+v)/2)`. That
//!   integrand is a polynomial on `D × D`, since `|u+v|/2 ≤ 1` always, so a
//!   product rule with enough nodes is exact.
//! * `G` is a Gaussian-damped Bessel integral done panel by panel.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use crate::coupling::{a_coeff, gamma_coeff, CouplingKey};
use crate::error::{Error, Result};
use crate::modes::{
    enumerate_modes, fourier_zernike_eval, i_pow, zernike_at_origin, zernike_eval, PolarPoint,
};
use crate::specfun::bessel_j;
use crate::turbulence::TurbulenceParams;

/// Node counts and cutoffs for the oracle quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes in `ρ²` on the disk.
    pub radial_nodes: usize,
    /// Trapezoid nodes in angle; even.
    pub angular_nodes: usize,
    /// Cutoff for Fourier-plane radial integrals, in units of `q`.
    pub q_max: f64,
    /// Average partial sums over the last oscillation period.
    pub tail_averaging: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { radial_nodes: 16, angular_nodes: 64, q_max: 500.0, tail_averaging: true }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes < 8 {
            return Err(Error::Domain("radial_nodes must be >= 8".into()));
        }
        if self.angular_nodes < 16 || self.angular_nodes % 2 != 0 {
            return Err(Error::Domain("angular_nodes must be even and >= 16".into()));
        }
        if !(self.q_max > 0.0 && self.q_max.is_finite()) {
            return Err(Error::Domain("q_max must be positive".into()));
        }
        Ok(())
    }

    /// Twice the nodes in both directions.
    pub fn refined(&self) -> Self {
        Self { radial_nodes: 2 * self.radial_nodes, angular_nodes: 2 * self.angular_nodes, ..*self }
    }
}

/// A quadrature result with its own error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    /// Imaginary residue, for quantities that should be real.
    pub imag: f64,
    pub error_bound: f64,
}

impl OracleValue {
    fn exact_zero() -> Self {
        Self { value: 0.0, imag: 0.0, error_bound: 0.0 }
    }
}

type Rule = (Vec<f64>, Vec<f64>);

/// Gauss–Legendre nodes and weights on `[-1, 1]`, memoized by size.
pub fn gauss_legendre(n: usize) -> Rule {
    static MEMO: OnceLock<Mutex<Vec<Option<Rule>>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| Mutex::new(Vec::new()));
    if let Some(Some(hit)) = memo.lock().unwrap().get(n) {
        return hit.clone();
    }
    let rule = gauss_legendre_uncached(n);
    let mut guard = memo.lock().unwrap();
    if guard.len() <= n {
        guard.resize(n + 1, None);
    }
    guard[n] = Some(rule.clone());
    rule
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0f64, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (pn, pm) = if n == 1 { (z, 1.0) } else { (p1, p0) };
    (pn, n as f64 * (z * pn - pm) / (z * z - 1.0))
}

fn gauss_legendre_uncached(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (pn, d) = legendre_with_derivative(n, z);
            let dz = pn / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        // weights from the derivative at the converged node
        let dp = legendre_with_derivative(n, z).1;
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

struct DiskRule {
    points: Vec<PolarPoint>,
    weights: Vec<f64>,
}

fn disk_rule(radial: usize, angular: usize) -> DiskRule {
    let (x, w) = gauss_legendre(radial);
    let dtheta = TAU / angular as f64;
    let mut points = Vec::with_capacity(radial * angular);
    let mut weights = Vec::with_capacity(radial * angular);
    for (xi, wi) in x.iter().zip(&w) {
        // t = (x+1)/2, d²s = ½ dt dθ
        let r = (0.5 * (xi + 1.0)).sqrt();
        for j in 0..angular {
            points.push(PolarPoint { r, theta: j as f64 * dtheta });
            weights.push(0.25 * wi * dtheta);
        }
    }
    DiskRule { points, weights }
}

/// `∫_D f d²s`.
pub fn disk_integral<F>(f: F, spec: &QuadratureSpec) -> Complex64
where
    F: Fn(PolarPoint) -> Complex64,
{
    let rule = disk_rule(spec.radial_nodes, spec.angular_nodes);
    rule.points.iter().zip(&rule.weights).map(|(p, w)| f(*p) * *w).sum()
}

/// `(1/π) ∫_D Z_{n1}^{m1} Z_{n2}^{m2} Z_{n3}^{m3*}` by disk quadrature.
///
/// The error bound is the change under [`QuadratureSpec::refined`] plus a
/// rounding allowance.
pub fn a_coeff_numeric(key: &CouplingKey, spec: &QuadratureSpec) -> OracleValue {
    let f = |p: PolarPoint| {
        zernike_eval(key.a, p) * zernike_eval(key.b, p) * zernike_eval(key.c, p).conj()
    };
    let coarse = disk_integral(f, spec) / PI;
    let fine = disk_integral(f, &spec.refined()) / PI;
    OracleValue {
        value: fine.re,
        imag: fine.im,
        error_bound: (fine - coarse).norm() + 1e-15 * (1.0 + fine.norm()),
    }
}

/// Integrate `f` over `[0, u_max]` in panels of `width` with `nodes`-point
/// Gauss–Legendre. With `average`, return the mean of the partial sums at the
/// last `per_period` panel ends instead of the final one.
fn panel_integral<F: Fn(f64) -> f64>(
    f: F,
    u_max: f64,
    width: f64,
    nodes: usize,
    average: Option<usize>,
) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    let panels = (u_max / width).ceil().max(1.0) as usize;
    let keep = average.unwrap_or(1).max(1);
    let mut acc = 0.0;
    let mut tail_sum = 0.0;
    for p in 0..panels {
        let a = p as f64 * width;
        let half = 0.5 * width;
        let mid = a + half;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + half * xi);
        }
        acc += half * s;
        if p + keep >= panels {
            tail_sum += acc;
        }
    }
    tail_sum / keep as f64
}

/// Fourier-side radial integral `∫_0^U J_{n1+1}(u) J_{n2+1}(u) J_{n3+1}(2u) / u² du`
/// and the envelope bound on what lies beyond `U`.
fn gamma_radial(n1: u32, n2: u32, n3: u32, spec: &QuadratureSpec) -> (f64, f64) {
    let u_max = TAU * spec.q_max;
    let f = |u: f64| {
        if u == 0.0 {
            return 0.0;
        }
        bessel_j(n1 + 1, u) * bessel_j(n2 + 1, u) * bessel_j(n3 + 1, 2.0 * u) / (u * u)
    };
    // Frequencies 0, 2 and 4 appear; four quarter-period panels span one
    // period of the slowest oscillation, and averaging over them cancels the
    // leading endpoint wiggle of both oscillating parts.
    let avg = spec.tail_averaging.then_some(4);
    let value = panel_integral(f, u_max, FRAC_PI_4, 12, avg);
    // |J_ν(u)| ≤ √(2/(πu)) asymptotically; the product envelope is
    // (2/π)(1/√π) u^{-7/2}, whose tail integral is (2/5) of that times U.
    let envelope = 2.0 / PI.powf(1.5) * 0.4 * u_max.powf(-2.5);
    (value, envelope)
}

/// `Γ` by the Fourier-side definition, cross-checked by the real-space route.
///
/// Returns the Fourier-route value. Fails with [`Error::NonConvergent`] when
/// the two routes disagree by more than the larger of their bounds.
pub fn gamma_coeff_numeric(key: &CouplingKey, spec: &QuadratureSpec) -> Result<OracleValue> {
    spec.validate()?;
    let primary = gamma_fourier(key, spec);
    let secondary = gamma_convolution(key);
    let allowed = primary.error_bound.max(secondary.error_bound);
    let diff = (primary.value - secondary.value).abs().max((primary.imag - secondary.imag).abs());
    if diff > allowed {
        return Err(Error::NonConvergent { partial: primary.value, tail: diff });
    }
    Ok(primary)
}

/// Fourier-side route only.
pub fn gamma_fourier(key: &CouplingKey, spec: &QuadratureSpec) -> OracleValue {
    if key.a.m + key.b.m != key.c.m {
        // the angular integral ∫ e^{i(m1+m2-m3)φ} dφ vanishes identically
        return OracleValue::exact_zero();
    }
    let (n1, n2, n3) = (key.a.n, key.b.n, key.c.n);
    let (radial, tail) = gamma_radial(n1, n2, n3, spec);
    // (1/π)·2π·(2π)³/(4π²)/2 = 2π, times iⁿ¹ iⁿ² (-i)ⁿ³ and the √(n+1) norms
    let phase = i_pow(n1 as i64 + n2 as i64 - n3 as i64);
    let scale = TAU * (((n1 + 1) * (n2 + 1) * (n3 + 1)) as f64).sqrt();
    let v = phase * (scale * radial);
    OracleValue {
        value: v.re,
        imag: v.im,
        error_bound: scale * tail + 1e-13 * (1.0 + v.norm()),
    }
}

/// Real-space route: exact product quadrature on `D × D`.
pub fn gamma_convolution(key: &CouplingKey) -> OracleValue {
    let degree = (key.a.n + key.b.n + key.c.n) as usize;
    // angular trapezoid exact below degree+1 frequencies, radial GL in ρ²
    let rule = disk_rule(degree / 4 + 2, degree + 2);
    let za: Vec<Complex64> = rule.points.iter().map(|p| zernike_eval(key.a, *p)).collect();
    let zb: Vec<Complex64> = rule.points.iter().map(|p| zernike_eval(key.b, *p)).collect();
    let cart: Vec<(f64, f64)> = rule.points.iter().map(|p| p.cartesian()).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    for (i, (u, wu)) in cart.iter().zip(&rule.weights).enumerate() {
        if za[i] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut inner = Complex64::new(0.0, 0.0);
        for (j, (v, wv)) in cart.iter().zip(&rule.weights).enumerate() {
            let mid = PolarPoint::from_cartesian(0.5 * (u.0 + v.0), 0.5 * (u.1 + v.1));
            let mid = PolarPoint { r: mid.r.min(1.0), ..mid };
            let t = zb[j] * zernike_eval(key.c, mid).conj() * *wv;
            mag += t.norm() * wu * za[i].norm();
            inner += t;
        }
        acc += za[i] * inner * *wu;
    }
    let v = acc / (4.0 * PI);
    OracleValue { value: v.re, imag: v.im, error_bound: 1e-14 * (1.0 + mag / (4.0 * PI)) }
}

/// `Q_{ij}^{k}(1,1,2) = ∫_0^∞ J_i(u) J_j(u) J_k(2u) du` by panels out to the
/// cutoff, plus the leading non-oscillating tail `2c/√U`. The integral only
/// converges like `U^{-1/2}` without that correction; with it the remainder
/// is `O(U^{-3/2})`.
pub fn triple_bessel_q_numeric(i: u32, j: u32, k: u32, spec: &QuadratureSpec) -> OracleValue {
    let u_max = TAU * spec.q_max;
    let f = |u: f64| bessel_j(i, u) * bessel_j(j, u) * bessel_j(k, 2.0 * u);
    let avg = spec.tail_averaging.then_some(4);
    let body = panel_integral(f, u_max, FRAC_PI_4, 12, avg);
    // ⟨cos A cos B cos C⟩ = ¼ cos(A + B - C), A + B - C = (k-i-j)π/2 - π/4
    let phase = (k as f64 - i as f64 - j as f64) * PI / 2.0 - FRAC_PI_4;
    let c = phase.cos() / (2.0 * PI.powf(1.5));
    let value = body + 2.0 * c / u_max.sqrt();
    let bound = 4.0 * (1.0 + (i * i + j * j + k * k) as f64) * u_max.powf(-1.5);
    OracleValue { value, imag: 0.0, error_bound: bound }
}

/// `G_{n5}` from its defining integral,
/// `z²/(16k²R²) Z_{n5}(0) ∫_0^∞ e^{-w²/(4x)} J_{n5+1}(w) dw` with
/// `x = 8π²kR²/(γz)`.
pub fn g_tensor_numeric(
    n5: u32,
    params: &TurbulenceParams,
    _spec: &QuadratureSpec,
) -> Result<OracleValue> {
    if n5 % 2 != 0 {
        return Err(Error::InvalidMode { n: n5 as i64, m: 0 });
    }
    params.validate()?;
    let x = params.filter_width();
    if !x.is_finite() {
        return Err(Error::Domain("g_tensor_numeric needs sigma_R > 0".into()));
    }
    let w_max = (4.0 * x * 52.0).sqrt();
    let f = |w: f64| (-w * w / (4.0 * x)).exp() * bessel_j(n5 + 1, w);
    let fine = panel_integral(f, w_max, PI, 20, None);
    let coarse = panel_integral(f, w_max, PI, 14, None);
    let scale = params.vacuum_scale() * zernike_at_origin(n5);
    Ok(OracleValue {
        value: scale * fine,
        imag: 0.0,
        error_bound: scale.abs() * ((fine - coarse).abs() + 1e-14 * (1.0 + w_max / PI).sqrt()),
    })
}

/// `|Σ_{n ≤ n_max} Σ_m Z_n^m(s) Z̃_n^{m*}(q) − π e^{-2πi s·q}|`.
pub fn completeness_residual(s: PolarPoint, q: PolarPoint, n_max: u32) -> Result<f64> {
    if s.r >= 1.0 {
        return Err(Error::Domain("completeness residual needs s strictly inside the disk".into()));
    }
    let partial: Complex64 = enumerate_modes(n_max)
        .into_iter()
        .map(|m| zernike_eval(m, s) * fourier_zernike_eval(m, q).conj())
        .sum();
    let (sx, sy) = s.cartesian();
    let (qx, qy) = q.cartesian();
    let target = Complex64::from_polar(PI, -TAU * (sx * qx + sy * qy));
    Ok((partial - target).norm())
}

/// Which tensor a fixture line refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tensor {
    A,
    Gamma,
}

/// Plain-text fixture table: one line per key,
/// `n1 m1 n2 m2 n3 m3 closed oracle error_bound`.
pub fn fixture_table(
    tensor: Tensor,
    keys: &[CouplingKey],
    spec: &QuadratureSpec,
) -> Result<String> {
    use rayon::prelude::*;
    let lines: Vec<Result<String>> = keys
        .par_iter()
        .map(|k| {
            let (closed, oracle) = match tensor {
                Tensor::A => (a_coeff(k), a_coeff_numeric(k, spec)),
                Tensor::Gamma => (gamma_coeff(k), gamma_coeff_numeric(k, spec)?),
            };
            Ok(format!(
                "{} {} {} {} {} {} {:?} {:?} {:?}",
                k.a.n, k.a.m, k.b.n, k.b.m, k.c.n, k.c.m, closed, oracle.value, oracle.error_bound
            ))
        })
        .collect();
    let mut out = String::from(match tensor {
        Tensor::A => "# A n1 m1 n2 m2 n3 m3 closed oracle error_bound\n",
        Tensor::Gamma => "# Gamma n1 m1 n2 m2 n3 m3 closed oracle error_bound\n",
    });
    for l in lines {
        out.push_str(&l?);
        out.push('\n');
    }
    Ok(out)
}

/// All keys with every order `≤ n_max` and `m3 = m1 + m2`.
pub fn conserving_keys(n_max: u32) -> Vec<CouplingKey> {
    let modes = enumerate_modes(n_max);
    let mut out = Vec::new();
    for &a in &modes {
        for &b in &modes {
            for &c in &modes {
                if a.m + b.m == c.m {
                    out.push(CouplingKey::new(a, b, c));
                }
            }
        }
    }
    out
}

/// Every key with orders `≤ n_max`, including ones that break `m` conservation.
pub fn all_keys(n_max: u32) -> Vec<CouplingKey> {
    let modes = enumerate_modes(n_max);
    let mut out = Vec::with_capacity(modes.len().pow(3));
    for &a in &modes {
        for &b in &modes {
            for &c in &modes {
                out.push(CouplingKey::new(a, b, c));
            }
        }
    }
    out
}
