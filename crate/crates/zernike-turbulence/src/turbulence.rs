//! Turbulence tensor, detection probabilities and the grid experiment.
//!
//! For collinear detection of the pair in modes `(N1,M1)`, `(N2,M2)` with the
//! pump in `(N,M)`, the probability collapses to
//!
//! ```text
//! P = Σ_{n1 n2} W_{n1 n2} F_{n1} F_{n2},
//! W_{n1 n2} = Σ_{n5} G_{n5} A_{n1 n2 n5}^{m, -m, 0},
//! F_n = Σ_{n'} Γ_{N1 N2 n'}^{M1 M2 m'} Γ_{n' N n}^{-m' M m},
//! ```
//!
//! with `m' = M1 + M2` and `m = M - M1 - M2`. `W` depends only on the
//! channel, not on the detector orders, so a grid builds it once.
//!
//! # Truncation
//!
//! `F_n` is nonzero for every `n ≥ N1 + N2 + N`, and the double sum converges
//! only algebraically. The weights `G_{n5}` fall off once `n5 ≳ √x`, with
//! `x = 8π²kR²/(γz)`, roughly 50 at `σ_R = 0.5` and 2500 at `σ_R = 0.1`. So
//! `n1, n2` have to run to `order_max ≈ 160` before the off-peak cells settle,
//! and `n5` to `2 · order_max`. Every value carries a tail estimate, the
//! largest change against nested truncations at 4/8 to 7/8 of `order_max`.
//!
//! # Vacuum
//!
//! At `σ_R = 0` the weights are `G_{n5} = z²/(16k²R²) Z_{n5}^0(0)`. Then
//! `W_{n1 n2}` is proportional to `Z_{n1}(0) Z_{n2}(0)` and
//! `Σ_n F_n Z_n(0) = (-1)^N π Γ_{N1 N2 N}`, which gives
//! `P = z²/(16k²R²) π² Γ²_{N1 N2 N}` exactly. The vacuum branch uses this
//! collapse. Going through the truncated sums would leave artifacts around
//! `1e-6` of the peak in cells that must vanish.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::coupling::{a_coeff, gamma_coeff, CouplingKey};
use crate::error::{Error, Result};
use crate::modes::{zernike_at_origin, ModeIndex};
use crate::specfun::{ln_factorial, ln_hyp1f1_neg};

/// Channel parameters: wave number `k` [1/m], distance `z` [m], pupil radius
/// `r` [m], Rytov standard deviation `sigma_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceParams {
    pub k: f64,
    pub z: f64,
    pub r: f64,
    pub sigma_r: f64,
}

impl TurbulenceParams {
    /// `k = 10⁷ m⁻¹`, `z = 5 km`, `R = 5 mm`.
    pub fn reference(sigma_r: f64) -> Self {
        Self { k: 1e7, z: 5e3, r: 5e-3, sigma_r }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.k) && pos(self.z) && pos(self.r)) {
            return Err(Error::Domain("k, z and R must be positive".into()));
        }
        if !(self.sigma_r >= 0.0 && self.sigma_r.is_finite()) {
            return Err(Error::Domain("sigma_R must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// `γ = 0.4 (σ_R²)^{6/5}`.
    pub fn gamma(&self) -> f64 {
        0.4 * (self.sigma_r * self.sigma_r).powf(1.2)
    }

    /// `x = 8π²kR²/(γz)`, the squared inverse width of the turbulence filter
    /// on the unit pupil; infinite in vacuum.
    pub fn filter_width(&self) -> f64 {
        8.0 * PI * PI * self.k * self.r * self.r / (self.gamma() * self.z)
    }

    /// `z²/(16k²R²)`, the vacuum weight per unit `Z(0)`.
    pub fn vacuum_scale(&self) -> f64 {
        let d = 4.0 * self.k * self.r;
        self.z * self.z / (d * d)
    }
}

/// `γ = 0.4 (σ_R²)^{6/5}`.
pub fn gamma_of_rytov(sigma_r: f64) -> Result<f64> {
    if !(sigma_r >= 0.0 && sigma_r.is_finite()) {
        return Err(Error::Domain(format!("sigma_R must be >= 0, got {sigma_r}")));
    }
    Ok(0.4 * (sigma_r * sigma_r).powf(1.2))
}

fn check_even(n5: u32) -> Result<()> {
    if n5 % 2 == 1 {
        return Err(Error::InvalidMode { n: n5 as i64, m: 0 });
    }
    Ok(())
}

/// `G_{n5}` for `γ > 0`:
/// `2π (-1)^{n5/2} √(n5+1) (πz/(4γk)) x^{n5/2} Γ(n5/2+1)/Γ(n5+2) 1F1(n5/2+1; n5+2; -x)`.
pub fn g_tensor(n5: u32, params: &TurbulenceParams) -> Result<f64> {
    check_even(n5)?;
    params.validate()?;
    if params.sigma_r == 0.0 {
        return Err(Error::Domain("g_tensor needs sigma_R > 0; use g_tensor_vacuum".into()));
    }
    let x = params.filter_width();
    let h = (n5 / 2) as u64;
    let a = (h + 1) as f64;
    let b = (n5 + 2) as f64;
    let ln_mag = TAU.ln()
        + 0.5 * ((n5 + 1) as f64).ln()
        + (PI * params.z / (4.0 * params.gamma() * params.k)).ln()
        + h as f64 * x.ln()
        + ln_factorial(h)
        - ln_factorial(n5 as u64 + 1)
        + ln_hyp1f1_neg(a, b, x)?;
    let sign = if h % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * ln_mag.exp())
}

/// `G_{n5}` in vacuum, `z²/(16k²R²) Z_{n5}^0(0)`. The small-`γ` limit of
/// [`g_tensor`] reaches this with ratio exactly one.
pub fn g_tensor_vacuum(n5: u32, params: &TurbulenceParams) -> Result<f64> {
    check_even(n5)?;
    params.validate()?;
    Ok(params.vacuum_scale() * zernike_at_origin(n5))
}

/// How adaptive optics enters the `n5` sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AoMode {
    None,
    /// Drop every `n5 ≤ cutoff` term.
    Truncate,
    /// Use vacuum weights for `n5 ≤ cutoff`.
    Hybrid,
}

impl AoMode {
    pub fn name(&self) -> &'static str {
        match self {
            AoMode::None => "none",
            AoMode::Truncate => "truncate",
            AoMode::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for AoMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AoMode::None),
            "truncate" => Ok(AoMode::Truncate),
            "hybrid" => Ok(AoMode::Hybrid),
            _ => Err(Error::Domain(format!("unknown ao mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AoConfig {
    pub mode: AoMode,
    pub cutoff: u32,
}

impl AoConfig {
    pub fn none() -> Self {
        Self { mode: AoMode::None, cutoff: 0 }
    }

    pub fn truncate(cutoff: u32) -> Self {
        Self { mode: AoMode::Truncate, cutoff }
    }

    pub fn hybrid(cutoff: u32) -> Self {
        Self { mode: AoMode::Hybrid, cutoff }
    }
}

/// Where the sums stop, and how much tail is tolerated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Largest `n1`, `n2` in the double sum.
    pub order_max: u32,
    /// Largest `n5`. Anything at or above `2 · order_max` is no truncation.
    pub n5_max: u32,
    /// Tail allowed relative to the value.
    pub rel_tol: f64,
    /// Tail allowed in units of `z²/(16k²R²)`.
    pub abs_tol: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self::with_order(160)
    }
}

impl Truncation {
    pub fn with_order(order_max: u32) -> Self {
        Self { order_max, n5_max: 2 * order_max, rel_tol: 1e-2, abs_tol: 1e-5 }
    }
}

/// Pump and the two detector modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DetectionSpec {
    pub pump: ModeIndex,
    pub det1: ModeIndex,
    pub det2: ModeIndex,
}

impl DetectionSpec {
    pub fn new(pump: ModeIndex, det1: ModeIndex, det2: ModeIndex) -> Self {
        Self { pump, det1, det2 }
    }

    /// `m' = M1 + M2`, carried by the intermediate mode.
    fn m_mid(&self) -> i32 {
        self.det1.m + self.det2.m
    }

    /// `m = M - M1 - M2`, the channel of `F` and of the `A` inside `W`.
    fn m_channel(&self) -> i32 {
        self.pump.m - self.m_mid()
    }
}

/// A probability with its truncation tail estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probability {
    pub value: f64,
    pub tail: f64,
}

/// Radial orders of channel `m` up to `order_max`.
fn channel_orders(m: i32, order_max: u32) -> Vec<u32> {
    let lo = m.unsigned_abs();
    if lo > order_max {
        return Vec::new();
    }
    (lo..=order_max).step_by(2).collect()
}

/// Effective `n5` weights under an AO model, indexed by `n5 / 2`.
pub fn effective_weights(
    params: &TurbulenceParams,
    ao: &AoConfig,
    n5_max: u32,
) -> Result<Vec<f64>> {
    params.validate()?;
    (0..=n5_max / 2)
        .into_par_iter()
        .map(|h| {
            let n5 = 2 * h;
            let low = n5 <= ao.cutoff;
            match ao.mode {
                AoMode::Truncate if low => Ok(0.0),
                AoMode::Hybrid if low => g_tensor_vacuum(n5, params),
                _ if params.sigma_r == 0.0 => g_tensor_vacuum(n5, params),
                _ => g_tensor(n5, params),
            }
        })
        .collect()
}

/// The channel kernel `W_{n1 n2} = Σ_{n5} G_{n5} A_{n1 n2 n5}^{m,-m,0}`.
#[derive(Debug, Clone)]
pub struct Kernel {
    m: i32,
    orders: Vec<u32>,
    w: Vec<f64>,
    // contribution of the two highest n5 shells kept, for the n5 tail
    w_edge: Vec<f64>,
    /// `max |W_ij - W_ji| / max |W|`, with both triangles computed separately.
    pub hermitian_residue: f64,
}

impl Kernel {
    pub fn build(m: i32, weights: &[f64], order_max: u32, n5_max: u32) -> Self {
        let orders = channel_orders(m, order_max);
        let len = orders.len();
        let n5_top = n5_max.min(2 * (weights.len() as u32 - 1));
        let rows: Vec<(Vec<f64>, Vec<f64>)> = orders
            .par_iter()
            .map(|&n1| {
                let mut row = vec![0.0; len];
                let mut edge = vec![0.0; len];
                for (j, &n2) in orders.iter().enumerate() {
                    let lo = n1.abs_diff(n2);
                    let hi = (n1 + n2).min(n5_top);
                    let mut acc = 0.0;
                    let mut acc_edge = 0.0;
                    let mut n5 = lo;
                    while n5 <= hi {
                        let g = weights[(n5 / 2) as usize];
                        if g != 0.0 {
                            let key = CouplingKey::new(
                                ModeIndex { n: n1, m },
                                ModeIndex { n: n2, m: -m },
                                ModeIndex { n: n5, m: 0 },
                            );
                            let t = g * a_coeff(&key);
                            acc += t;
                            if n5 + 4 > n5_top && n5_top < 2 * order_max {
                                acc_edge += t;
                            }
                        }
                        n5 += 2;
                    }
                    row[j] = acc;
                    edge[j] = acc_edge;
                }
                (row, edge)
            })
            .collect();
        let mut w = Vec::with_capacity(len * len);
        let mut w_edge = Vec::with_capacity(len * len);
        for (r, e) in rows {
            w.extend(r);
            w_edge.extend(e);
        }
        let mut asym = 0.0f64;
        let mut big = 0.0f64;
        for i in 0..len {
            for j in 0..len {
                asym = asym.max((w[i * len + j] - w[j * len + i]).abs());
                big = big.max(w[i * len + j].abs());
            }
        }
        let hermitian_residue = if big > 0.0 { asym / big } else { 0.0 };
        Self { m, orders, w, w_edge, hermitian_residue }
    }

    /// The azimuthal channel `m`.
    pub fn channel(&self) -> i32 {
        self.m
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    /// `Σ_{i,j} F_i W_ij F_j` over orders `≤ limit`.
    fn quadratic(&self, mat: &[f64], f: &[f64], limit: u32) -> f64 {
        let len = self.orders.len();
        let cut = self.orders.iter().take_while(|&&n| n <= limit).count();
        let mut acc = 0.0;
        for i in 0..cut {
            if f[i] == 0.0 {
                continue;
            }
            let row = &mat[i * len..i * len + cut];
            let s: f64 = row.iter().zip(&f[..cut]).map(|(w, f)| w * f).sum();
            acc += f[i] * s;
        }
        acc
    }
}

/// Inner factor `Γ_{n' N n}^{-m' M m}` for every `(n', n)` pair, shared by
/// all detector pairs with the same `m' = M1 + M2`.
#[derive(Debug, Clone)]
pub struct Collapse {
    pump: ModeIndex,
    m_mid: i32,
    mids: Vec<u32>,
    orders: Vec<u32>,
    inner: Vec<f64>,
}

impl Collapse {
    pub fn build(pump: ModeIndex, m_mid: i32, order_max: u32) -> Self {
        let m = pump.m - m_mid;
        let orders = channel_orders(m, order_max);
        let mids = channel_orders(m_mid, order_max);
        let inner: Vec<f64> = mids
            .par_iter()
            .flat_map_iter(|&np| {
                let orders = &orders;
                orders.iter().map(move |&n| {
                    gamma_coeff(&CouplingKey::new(
                        ModeIndex { n: np, m: -m_mid },
                        pump,
                        ModeIndex { n, m },
                    ))
                })
            })
            .collect();
        Self { pump, m_mid, mids, orders, inner }
    }

    /// `F_n` for all channel orders.
    pub fn f_vector(&self, spec: &DetectionSpec) -> Vec<f64> {
        assert_eq!(spec.pump, self.pump, "collapse built for another pump");
        assert_eq!(spec.m_mid(), self.m_mid, "collapse built for another M1 + M2");
        let outer: Vec<f64> = self
            .mids
            .iter()
            .map(|&np| {
                gamma_coeff(&CouplingKey::new(
                    spec.det1,
                    spec.det2,
                    ModeIndex { n: np, m: self.m_mid },
                ))
            })
            .collect();
        let len = self.orders.len();
        let mut f = vec![0.0; len];
        for (i, &g) in outer.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = &self.inner[i * len..(i + 1) * len];
            for (fk, r) in f.iter_mut().zip(row) {
                *fk += g * r;
            }
        }
        f
    }
}

/// `F_n = Σ_{n'} Γ_{N1 N2 n'}^{M1 M2 m'} Γ_{n' N n}^{-m' M m}`.
///
/// The sum is finite: the first factor needs `n' ≥ N1 + N2`, the second
/// `n ≥ n' + N`. Returns zero when `n` is not a valid order of the channel
/// `m = M - M1 - M2`.
pub fn f_vector(spec: &DetectionSpec, n: u32) -> f64 {
    let m_mid = spec.m_mid();
    let m = spec.m_channel();
    if ModeIndex::new(n as i64, m as i64).is_err() {
        return 0.0;
    }
    let lo = (spec.det1.n + spec.det2.n).max(m_mid.unsigned_abs());
    if n < lo + spec.pump.n {
        return 0.0;
    }
    let mut acc = 0.0;
    for np in (lo..=n - spec.pump.n).step_by(2) {
        let outer = gamma_coeff(&CouplingKey::new(spec.det1, spec.det2, ModeIndex { n: np, m: m_mid }));
        let inner = gamma_coeff(&CouplingKey::new(
            ModeIndex { n: np, m: -m_mid },
            spec.pump,
            ModeIndex { n, m },
        ));
        acc += outer * inner;
    }
    acc
}

fn vacuum_analytic(spec: &DetectionSpec, params: &TurbulenceParams) -> f64 {
    let g = gamma_coeff(&CouplingKey::new(spec.det1, spec.det2, spec.pump));
    params.vacuum_scale() * PI * PI * g * g
}

fn uses_vacuum_collapse(params: &TurbulenceParams, ao: &AoConfig) -> bool {
    params.sigma_r == 0.0 && ao.mode != AoMode::Truncate
}

fn evaluate(
    kernel: &Kernel,
    f: &[f64],
    params: &TurbulenceParams,
    trunc: &Truncation,
) -> Result<Probability> {
    let full = kernel.quadratic(&kernel.w, f, trunc.order_max);
    // The partial sums wander rather than settle monotonically, so the tail
    // is the largest change against several nested truncations.
    let spread = [4, 5, 6, 7]
        .iter()
        .map(|&eighths| {
            let nested = trunc.order_max * eighths / 8;
            (full - kernel.quadratic(&kernel.w, f, nested)).abs()
        })
        .fold(0.0, f64::max);
    let edge = kernel.quadratic(&kernel.w_edge, f, trunc.order_max);
    let tail = spread.max(edge.abs());
    let allowed = trunc.rel_tol * full.abs() + trunc.abs_tol * params.vacuum_scale();
    if tail > allowed {
        return Err(Error::NonConvergent { partial: full, tail });
    }
    Ok(Probability { value: full, tail })
}

/// Collinear joint detection probability.
///
/// Unnormalized, in the units of the collapsed formula; only ratios are
/// meaningful. Values below `-1e-12` of the vacuum scale are legitimate
/// output of the literal `truncate` model and are returned as they are.
pub fn joint_probability(
    spec: &DetectionSpec,
    params: &TurbulenceParams,
    ao: &AoConfig,
    trunc: &Truncation,
) -> Result<Probability> {
    params.validate()?;
    if uses_vacuum_collapse(params, ao) {
        return Ok(Probability { value: vacuum_analytic(spec, params), tail: 0.0 });
    }
    let weights = effective_weights(params, ao, trunc.n5_max)?;
    let kernel = Kernel::build(spec.m_channel(), &weights, trunc.order_max, trunc.n5_max);
    let collapse = Collapse::build(spec.pump, spec.m_mid(), trunc.order_max);
    let f = collapse.f_vector(spec);
    evaluate(&kernel, &f, params, trunc)
}

/// Vacuum probabilities: `|A_{N1 N2 N}|²` for separated detectors,
/// `|Γ_{N1 N2 N}|²` for collinear ones.
pub fn no_turbulence_probability(spec: &DetectionSpec, collinear: bool) -> f64 {
    let key = CouplingKey::new(spec.det1, spec.det2, spec.pump);
    let v = if collinear { gamma_coeff(&key) } else { a_coeff(&key) };
    v * v
}

/// How a grid was normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Clamped values divided by their sum.
    UnitSum,
    /// Nothing positive to divide by; values left as they are.
    AllZero,
}

impl Normalization {
    pub fn name(&self) -> &'static str {
        match self {
            Normalization::UnitSum => "unit_sum_of_clamped_cells",
            Normalization::AllZero => "none_all_cells_zero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub n1: u32,
    pub n2: u32,
    /// Unclamped, unnormalized value.
    pub raw: f64,
    pub tail: f64,
    /// False when the tail estimate exceeded tolerance; `raw` is then the
    /// partial value.
    pub converged: bool,
    /// `max(raw, 0)` divided by the grid total (or left as is for an all-zero
    /// grid).
    pub norm: f64,
}

/// Probabilities over `(N1, N2)` at fixed detector azimuths.
#[derive(Debug, Clone)]
pub struct ProbabilityGrid {
    pub pump: ModeIndex,
    pub m1: i32,
    pub m2: i32,
    pub n_max: u32,
    pub params: TurbulenceParams,
    pub ao: AoConfig,
    pub truncation: Truncation,
    /// Lexicographic in `(N1, N2)`.
    pub cells: Vec<GridCell>,
    pub normalization: Normalization,
    /// Sum of clamped raw values before normalization.
    pub total: f64,
    /// Cells whose raw value is below `-1e-12` times the largest magnitude.
    pub negative_cells: usize,
    pub hermitian_residue: f64,
}

impl ProbabilityGrid {
    pub fn cell(&self, n1: u32, n2: u32) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.n1 == n1 && c.n2 == n2)
    }

    /// The cell with the largest normalized value (first in order on ties).
    pub fn peak(&self) -> Option<&GridCell> {
        self.cells.iter().fold(None, |best: Option<&GridCell>, c| match best {
            Some(b) if b.norm >= c.norm => Some(b),
            _ => Some(c),
        })
    }

    pub fn all_converged(&self) -> bool {
        self.cells.iter().all(|c| c.converged)
    }
}

/// Fill every valid `(N1, N2)` cell with `N1, N2 ≤ n_max` and normalize.
pub fn probability_grid(
    pump: ModeIndex,
    m1: i32,
    m2: i32,
    n_max: u32,
    params: &TurbulenceParams,
    ao: &AoConfig,
    trunc: &Truncation,
) -> Result<ProbabilityGrid> {
    params.validate()?;
    if n_max < m1.unsigned_abs().max(m2.unsigned_abs()) {
        return Err(Error::Domain(format!("n_max = {n_max} leaves no valid cell for m = ({m1}, {m2})")));
    }
    let rows = channel_orders(m1, n_max);
    let cols = channel_orders(m2, n_max);
    let specs: Vec<DetectionSpec> = rows
        .iter()
        .flat_map(|&a| {
            cols.iter().map(move |&b| {
                DetectionSpec::new(pump, ModeIndex { n: a, m: m1 }, ModeIndex { n: b, m: m2 })
            })
        })
        .collect();

    let (values, hermitian_residue): (Vec<(f64, f64, bool)>, f64) =
        if uses_vacuum_collapse(params, ao) {
            (specs.iter().map(|s| (vacuum_analytic(s, params), 0.0, true)).collect(), 0.0)
        } else {
            let weights = effective_weights(params, ao, trunc.n5_max)?;
            let m = pump.m - m1 - m2;
            let kernel = Kernel::build(m, &weights, trunc.order_max, trunc.n5_max);
            let collapse = Collapse::build(pump, m1 + m2, trunc.order_max);
            let vals = specs
                .par_iter()
                .map(|s| {
                    let f = collapse.f_vector(s);
                    match evaluate(&kernel, &f, params, trunc) {
                        Ok(p) => (p.value, p.tail, true),
                        Err(Error::NonConvergent { partial, tail }) => (partial, tail, false),
                        Err(_) => unreachable!("evaluate only reports non-convergence"),
                    }
                })
                .collect();
            (vals, kernel.hermitian_residue)
        };

    let biggest = values.iter().map(|v| v.0.abs()).fold(0.0, f64::max);
    let negative_cells = values.iter().filter(|v| v.0 < -1e-12 * biggest).count();
    let total: f64 = values.iter().map(|v| v.0.max(0.0)).sum();
    let normalization = if total > 0.0 { Normalization::UnitSum } else { Normalization::AllZero };
    let cells = specs
        .iter()
        .zip(&values)
        .map(|(s, &(raw, tail, converged))| GridCell {
            n1: s.det1.n,
            n2: s.det2.n,
            raw,
            tail,
            converged,
            norm: match normalization {
                Normalization::UnitSum => raw.max(0.0) / total,
                Normalization::AllZero => raw.max(0.0),
            },
        })
        .collect();
    Ok(ProbabilityGrid {
        pump,
        m1,
        m2,
        n_max,
        params: *params,
        ao: *ao,
        truncation: *trunc,
        cells,
        normalization,
        total,
        negative_cells,
        hermitian_residue,
    })
}
