//! The two coupling tensors.
//!
//! `A` is the triple overlap `(1/π) ∫_D Z_{n1}^{m1} Z_{n2}^{m2} Z_{n3}^{m3*}`,
//! which reduces to a squared Clebsch–Gordan coefficient with `j = n/2`.
//!
//! `Γ` is the Fourier-side triple product
//! `(1/π) ∫ d²q Z̃_{n1}^{m1}(q) Z̃_{n2}^{m2}(q) Z̃_{n3}^{m3*}(2q)`, equivalently the
//! coefficient of `Z_{n3}(s/2)` in the convolution `Z_{n1} * Z_{n2}`. Its
//! closed form is a sum of four triple-Bessel integrals `Q`, each a factorial
//! ratio times two Jacobi polynomials at zero.
//!
//! The overall constant in front of the `Q` sum is `π/2`. With `1/π` instead
//! the closed form misses both quadratures of the defining integral by the
//! same factor `π²/2`, and `Σ Γ A` no longer equals `π/4`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modes::{enumerate_modes, ModeIndex};
use crate::specfun::{clebsch_gordan_sq, jacobi_at_zero, ln_factorial, AngularMomentumTriple};

/// Index triple `((n1,m1), (n2,m2), (n3,m3))` of an `A` or `Γ` entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CouplingKey {
    pub a: ModeIndex,
    pub b: ModeIndex,
    pub c: ModeIndex,
}

impl CouplingKey {
    pub fn new(a: ModeIndex, b: ModeIndex, c: ModeIndex) -> Self {
        Self { a, b, c }
    }

    /// Build from six raw integers, validating every pair.
    pub fn from_ints(v: [i64; 6]) -> Result<Self> {
        Ok(Self {
            a: ModeIndex::new(v[0], v[1])?,
            b: ModeIndex::new(v[2], v[3])?,
            c: ModeIndex::new(v[4], v[5])?,
        })
    }

    /// Both tensors are symmetric in the first two slots.
    pub fn swapped(&self) -> Self {
        Self { a: self.b, b: self.a, c: self.c }
    }

    fn canonical(&self) -> Self {
        if self.b < self.a {
            self.swapped()
        } else {
            *self
        }
    }

    fn max_order(&self) -> u32 {
        self.a.n.max(self.b.n).max(self.c.n)
    }

    fn m_conserved(&self) -> bool {
        self.a.m + self.b.m == self.c.m
    }
}

impl std::fmt::Display for CouplingKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.a, self.b, self.c)
    }
}

/// Selection rule for `A`: azimuthal conservation, triangle, even radial sum.
pub fn a_selection(key: &CouplingKey) -> bool {
    let (n1, n2, n3) = (key.a.n, key.b.n, key.c.n);
    key.m_conserved()
        && (n1 + n2 + n3) % 2 == 0
        && n3 <= n1 + n2
        && n1 <= n2 + n3
        && n2 <= n1 + n3
}

/// `A_{n1 n2 n3}^{m1 m2 m3} = √((n1+1)(n2+1)/(n3+1)) |C^{n3/2,m3/2}_{n1/2,m1/2; n2/2,m2/2}|²`.
///
/// Evaluated on the canonical slot order, so the swap symmetry holds bit for
/// bit.
pub fn a_coeff(key: &CouplingKey) -> f64 {
    let key = &key.canonical();
    if !a_selection(key) {
        return 0.0;
    }
    let t = AngularMomentumTriple {
        tj1: key.a.n,
        tm1: key.a.m,
        tj2: key.b.n,
        tm2: key.b.m,
        tj3: key.c.n,
        tm3: key.c.m,
    };
    let weight = (((key.a.n + 1) * (key.b.n + 1)) as f64 / (key.c.n + 1) as f64).sqrt();
    weight * clebsch_gordan_sq(&t)
}

/// `Q_{ij}^{k}(1,1,2) = ∫_0^∞ J_i(u) J_j(u) J_k(2u) du`, closed form.
///
/// With `n = k - 1` this is zero for `n < i + j`. Otherwise the closed form
/// needs `n - i - j` even, the only case that occurs inside `Γ`; the odd case
/// is rejected.
pub fn triple_bessel_q(i: u32, j: u32, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("triple_bessel_q needs k >= 1".into()));
    }
    let n = k - 1;
    if n < i + j {
        return Ok(0.0);
    }
    if (n - i - j) % 2 != 0 {
        return Err(Error::Domain(format!(
            "closed form for Q_{{{i},{j}}}^{{{k}}} needs k - 1 - i - j even"
        )));
    }
    Ok(q_unchecked(i, j, n))
}

fn q_unchecked(i: u32, j: u32, n: u32) -> f64 {
    if n < i + j {
        return 0.0;
    }
    let kk = (n - i - j) / 2;
    let lf = |v: u32| ln_factorial(v as u64);
    let ln_ratio = lf((n + i + j) / 2) + lf(kk) - lf((n + j - i) / 2) - lf((n + i - j) / 2)
        - ((i + j + 1) as f64) * std::f64::consts::LN_2;
    ln_ratio.exp() * jacobi_at_zero(kk, i, j) * jacobi_at_zero(kk, j, i)
}

/// `Γ_{n1 n2 n3}^{m1 m2 m3}`, real by construction.
pub fn gamma_coeff(key: &CouplingKey) -> f64 {
    let key = &key.canonical();
    let (n1, n2, n) = (key.a.n, key.b.n, key.c.n);
    if !key.m_conserved() || n < n1 + n2 || (n1 + n2 + n) % 2 != 0 {
        return 0.0;
    }
    // i^{N1+N2-n} with an even exponent
    let sign = if ((n - n1 - n2) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let weight = ((n + 1) as f64 / ((n1 + 1) * (n2 + 1)) as f64).sqrt();
    let q = q_unchecked(n1, n2, n)
        + q_unchecked(n1 + 2, n2, n)
        + q_unchecked(n1, n2 + 2, n)
        + q_unchecked(n1 + 2, n2 + 2, n);
    sign * FRAC_PI_2 * weight * q
}

fn modes_with_m(n_max: u32, m: i32) -> impl Iterator<Item = ModeIndex> {
    let start = m.unsigned_abs();
    (start..=n_max).step_by(2).map(move |n| ModeIndex { n, m })
}

/// Read-only table of `A` and `Γ` up to a radial order, keyed with the
/// first two slots in canonical order. Lookups beyond the table fall back to
/// the closed forms.
#[derive(Debug, Clone)]
pub struct CouplingCache {
    // None: no table, every lookup goes to the closed forms
    max_order: Option<u32>,
    a: HashMap<CouplingKey, f64>,
    gamma: HashMap<CouplingKey, f64>,
}

impl CouplingCache {
    /// Tabulate every valid key with all orders `≤ max_order`.
    pub fn build(max_order: u32) -> Self {
        let modes = enumerate_modes(max_order);
        let keys: Vec<CouplingKey> = modes
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| {
                let modes = &modes;
                modes[i..].iter().flat_map(move |&b| {
                    modes_with_m(max_order, a.m + b.m).map(move |c| CouplingKey { a, b, c })
                })
            })
            .collect();
        let values: Vec<(CouplingKey, f64, f64)> =
            keys.par_iter().map(|k| (*k, a_coeff(k), gamma_coeff(k))).collect();
        let mut a = HashMap::new();
        let mut gamma = HashMap::new();
        for (k, va, vg) in values {
            if va != 0.0 {
                a.insert(k, va);
            }
            if vg != 0.0 {
                gamma.insert(k, vg);
            }
        }
        Self { max_order: Some(max_order), a, gamma }
    }

    /// A cache with no table; all lookups are computed on demand.
    pub fn direct() -> Self {
        Self { max_order: None, a: HashMap::new(), gamma: HashMap::new() }
    }

    pub fn max_order(&self) -> Option<u32> {
        self.max_order
    }

    fn tabulated(&self, key: &CouplingKey) -> bool {
        self.max_order.is_some_and(|m| key.max_order() <= m)
    }

    /// Number of stored nonzero entries, `(A, Γ)`.
    pub fn len(&self) -> (usize, usize) {
        (self.a.len(), self.gamma.len())
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty() && self.gamma.is_empty()
    }

    pub fn a(&self, key: &CouplingKey) -> f64 {
        if !self.tabulated(key) {
            return a_coeff(key);
        }
        self.a.get(&key.canonical()).copied().unwrap_or(0.0)
    }

    pub fn gamma(&self, key: &CouplingKey) -> f64 {
        if !self.tabulated(key) {
            return gamma_coeff(key);
        }
        self.gamma.get(&key.canonical()).copied().unwrap_or(0.0)
    }

    /// Test hook: scale one stored `Γ` entry (and its swap partner).
    pub fn perturb_gamma(&mut self, key: &CouplingKey, factor: f64) {
        if let Some(v) = self.gamma.get_mut(&key.canonical()) {
            *v *= factor;
        }
    }

    /// `Σ_{n1 m1 n2 m2} Γ*_{n1 n2 N} A_{n1 n2 N1}`.
    ///
    /// `Γ` needs `n1 + n2 ≤ N`, so the sum is finite and exact.
    pub fn ga_contraction(&self, big: ModeIndex, big1: ModeIndex) -> f64 {
        let mut acc = 0.0;
        for n1 in 0..=big.n {
            for n2 in 0..=(big.n - n1) {
                let mut m1 = -(n1 as i32);
                while m1 <= n1 as i32 {
                    let m2 = big.m - m1;
                    if let Ok(b) = ModeIndex::new(n2 as i64, m2 as i64) {
                        let a = ModeIndex { n: n1, m: m1 };
                        let g = self.gamma(&CouplingKey::new(a, b, big));
                        if g != 0.0 {
                            acc += g * self.a(&CouplingKey::new(a, b, big1));
                        }
                    }
                    m1 += 2;
                }
            }
        }
        acc
    }

    /// `8 Σ_{n m} Σ_{n' m' n'' m''} Γ_{n1 n2 n} Γ*_{n' n'' n} A_{n' n'' N}`, summed
    /// literally over intermediate orders `n` up to `max(N, n1+n2) + pad`.
    ///
    /// Every inner sum is a [`ga_contraction`](Self::ga_contraction), which
    /// is `(π/4) δ_{nN}`, so the result is `2π Γ_{n1 n2 N}`.
    pub fn overlap_gga(&self, n1: ModeIndex, n2: ModeIndex, big: ModeIndex, pad: u32) -> f64 {
        let m = n1.m + n2.m;
        let lo = m.unsigned_abs().max(n1.n + n2.n);
        let hi = lo.max(big.n) + pad;
        let mut acc = 0.0;
        for n in (lo..=hi).step_by(2) {
            let mid = ModeIndex { n, m };
            let outer = self.gamma(&CouplingKey::new(n1, n2, mid));
            if outer != 0.0 {
                acc += outer * self.ga_contraction(mid, big);
            }
        }
        8.0 * acc
    }
}

/// [`CouplingCache::ga_contraction`] straight from the closed forms.
pub fn ga_contraction(big: ModeIndex, big1: ModeIndex) -> f64 {
    CouplingCache::direct().ga_contraction(big, big1)
}

/// The value `ga_contraction` should take.
pub fn ga_expected(big: ModeIndex, big1: ModeIndex) -> f64 {
    if big == big1 {
        FRAC_PI_4
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn key(v: [i64; 6]) -> CouplingKey {
        CouplingKey::from_ints(v).unwrap()
    }

    #[test]
    fn selection_examples() {
        assert!(a_selection(&key([1, 1, 1, -1, 0, 0])));
        assert!(!a_selection(&key([1, 1, 1, 1, 2, 0])));
        assert!(!a_selection(&key([0, 0, 0, 0, 4, 0])));
    }

    #[test]
    fn a_examples() {
        assert_eq!(a_coeff(&key([0, 0, 0, 0, 0, 0])), 1.0);
        assert!((a_coeff(&key([1, 1, 1, -1, 0, 0])) - 1.0).abs() < 1e-15);
        assert_eq!(a_coeff(&key([1, 1, 1, 1, 2, 0])), 0.0);
        // (1/π)∫ Z_2^0 Z_1^1 Z_1^{1*} = √3 ∫ (2t-1) 2t dt = √3/3
        let v = a_coeff(&key([2, 0, 1, 1, 1, 1]));
        assert!((v - 3f64.sqrt() / 3.0).abs() < 1e-15, "{v}");
    }

    #[test]
    fn q_examples() {
        assert!((triple_bessel_q(0, 0, 1).unwrap() - 0.5).abs() < 1e-16);
        assert_eq!(triple_bessel_q(2, 0, 1).unwrap(), 0.0);
        assert!((triple_bessel_q(1, 1, 3).unwrap() - 0.25).abs() < 1e-16);
        assert!(triple_bessel_q(0, 0, 2).is_err());
    }

    #[test]
    fn gamma_origin_value() {
        // Γ_000 = π/4: the only term of Σ Γ A for N = N1 = (0,0)
        assert!((gamma_coeff(&key([0, 0, 0, 0, 0, 0])) - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_selection() {
        assert_eq!(gamma_coeff(&key([1, 1, 1, -1, 2, 2])), 0.0);
        assert_eq!(gamma_coeff(&key([2, 0, 2, 0, 2, 0])), 0.0);
            assert_ne!(gamma_coeff(&key([1, 1, 1, -1, 2, 0])), 0.0);
    }

    #[test]
    fn contraction_examples() {
        let z = |n, m| ModeIndex::new(n, m).unwrap();
        assert!((ga_contraction(z(0, 0), z(0, 0)) - PI / 4.0).abs() < 1e-15);
        assert!(ga_contraction(z(2, 0), z(4, 0)).abs() < 1e-15);
        assert!((ga_contraction(z(2, 2), z(2, 2)) - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn contraction_identity_to_order_six() {
        let cache = CouplingCache::build(6);
        let modes = enumerate_modes(6);
        for &big in &modes {
            for &big1 in &modes {
                let got = cache.ga_contraction(big, big1);
                let want = ga_expected(big, big1);
                assert!((got - want).abs() < 1e-12, "{big} {big1}: {got}");
            }
        }
    }

    #[test]
    fn overlap_is_two_pi_gamma() {
        let cache = CouplingCache::build(8);
        let z = |n, m| ModeIndex::new(n, m).unwrap();
        for (a, b, c) in [
            (z(1, 1), z(1, -1), z(2, 0)),
            (z(0, 0), z(0, 0), z(0, 0)),
            (z(1, 1), z(2, 0), z(3, 1)),
            (z(1, 1), z(1, 1), z(4, 2)),
        ] {
            let got = cache.overlap_gga(a, b, c, 4);
            let g = gamma_coeff(&CouplingKey::new(a, b, c));
            assert!((got - 2.0 * PI * g).abs() < 1e-13, "{a}{b}{c}: {got} vs {g}");
        }
        assert_eq!(cache.overlap_gga(z(1, 1), z(1, 1), z(2, 0), 4), 0.0);
    }

    #[test]
    fn cache_matches_direct() {
        let cache = CouplingCache::build(5);
        for a in enumerate_modes(5) {
            for b in enumerate_modes(5) {
                for c in enumerate_modes(5) {
                    let k = CouplingKey::new(a, b, c);
                    assert_eq!(cache.a(&k).to_bits(), a_coeff(&k).to_bits(), "{k}");
                    assert_eq!(cache.gamma(&k).to_bits(), gamma_coeff(&k).to_bits(), "{k}");
                }
            }
        }
    }

    #[test]
    fn radial_bounds() {
        for a in enumerate_modes(6) {
            for b in enumerate_modes(6) {
                for c in enumerate_modes(6) {
                    let k = CouplingKey::new(a, b, c);
                    if c.n > a.n + b.n {
                        assert_eq!(a_coeff(&k), 0.0);
                    }
                    if c.n < a.n + b.n {
                        assert_eq!(gamma_coeff(&k), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn perturbation_breaks_contraction() {
        let mut cache = CouplingCache::build(4);
        let k = key([1, 1, 1, -1, 2, 0]);
        cache.perturb_gamma(&k, 1.0 + 1e-6);
        let z = ModeIndex::new(2, 0).unwrap();
        let d = (cache.ga_contraction(z, z) - PI / 4.0).abs();
        assert!(d > 1e-10, "{d}");
    }

    proptest! {
        #[test]
        fn swap_symmetry(i in 0usize..28, j in 0usize..28, k in 0usize..28) {
            let modes = enumerate_modes(6);
            let key = CouplingKey::new(modes[i], modes[j], modes[k]);
            prop_assert_eq!(a_coeff(&key), a_coeff(&key.swapped()));
            prop_assert_eq!(gamma_coeff(&key), gamma_coeff(&key.swapped()));
        }

        #[test]
        fn a_is_nonnegative(i in 0usize..45, j in 0usize..45, k in 0usize..45) {
            let modes = enumerate_modes(8);
            let key = CouplingKey::new(modes[i], modes[j], modes[k]);
            prop_assert!(a_coeff(&key) >= 0.0);
        }
    }
}
