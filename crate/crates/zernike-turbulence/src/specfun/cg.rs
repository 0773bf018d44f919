//! Clebsch–Gordan coefficients for integer and half-integer momenta.
//!
//! Angular momenta are carried doubled (`tj = 2j`, `tm = 2m`) so that
//! half-integers stay exact. The Racah alternating sum is done in big
//! integers; everything multiplicative is done in log space. That keeps the
//! result to a few ulps well beyond the `j ≲ 10` regime where a plain f64
//! Racah sum starts to cancel badly.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::factorial::ln_factorial;
use crate::error::{Error, Result};

/// `(j1 m1; j2 m2 | j3 m3)`, all six stored doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngularMomentumTriple {
    pub tj1: u32,
    pub tm1: i32,
    pub tj2: u32,
    pub tm2: i32,
    pub tj3: u32,
    pub tm3: i32,
}

impl AngularMomentumTriple {
    /// Checks `|m| ≤ j` and that `j - m` is an integer for each pair.
    pub fn new(tj1: u32, tm1: i32, tj2: u32, tm2: i32, tj3: u32, tm3: i32) -> Result<Self> {
        for (tj, tm) in [(tj1, tm1), (tj2, tm2), (tj3, tm3)] {
            if tm.unsigned_abs() > tj || (tj as i64 - tm as i64) % 2 != 0 {
                return Err(Error::Domain(format!(
                    "angular momentum pair j={}/2, m={}/2 is not valid",
                    tj, tm
                )));
            }
        }
        Ok(Self { tj1, tm1, tj2, tm2, tj3, tm3 })
    }

    fn triangle(&self) -> bool {
        let (a, b, c) = (self.tj1 as i64, self.tj2 as i64, self.tj3 as i64);
        (a + b + c) % 2 == 0 && c <= a + b && a <= b + c && b <= a + c
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    BigInt::from(acc)
}

fn ln_abs_big(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 900 {
        return v.abs().to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (v.abs() >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Sign and `ln|C|²`, or `None` when the coefficient vanishes.
fn cg_log(t: &AngularMomentumTriple) -> Option<(i8, f64)> {
    if t.tm1 + t.tm2 != t.tm3 || !t.triangle() {
        return None;
    }
    // Half-sums below are integers because of the parity checks above.
    let h = |x: i64| -> i64 { x / 2 };
    let (j1, j2, j3) = (t.tj1 as i64, t.tj2 as i64, t.tj3 as i64);
    let (m1, m2, m3) = (t.tm1 as i64, t.tm2 as i64, t.tm3 as i64);
    let a = h(j1 + j2 - j3);
    let b = h(j1 - m1);
    let c = h(j2 + m2);
    let d = h(j3 - j2 + m1);
    let e = h(j3 - j1 - m2);
    let lo = 0.max(-d).max(-e);
    let hi = a.min(b).min(c);
    if lo > hi {
        return None;
    }

    let mut sum = BigInt::zero();
    for k in lo..=hi {
        let term = binomial(a as u64, k as u64)
            * binomial((b + e) as u64, (b - k) as u64)
            * binomial((c + d) as u64, (c - k) as u64);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return None;
    }
    let sign = if sum.is_negative() { -1 } else { 1 };

    let lf = |x: i64| ln_factorial(x as u64);
    let ln_delta = lf(h(j3 + j1 - j2)) + lf(h(j3 - j1 + j2)) + lf(a) - lf(h(j1 + j2 + j3) + 1);
    let ln_m = lf(h(j1 - m1)) + lf(h(j1 + m1)) + lf(h(j2 - m2)) + lf(h(j2 + m2));
    let ln_den = 2.0 * lf(a) + lf(h(j3 - m3)) + lf(h(j3 + m3));
    let ln_sq = ((j3 + 1) as f64).ln() + ln_delta + ln_m - ln_den + 2.0 * ln_abs_big(&sum);
    Some((sign, ln_sq))
}

/// `C^{j3 m3}_{j1 m1 j2 m2}` in the Condon–Shortley phase convention.
pub fn clebsch_gordan(t: &AngularMomentumTriple) -> f64 {
    match cg_log(t) {
        None => 0.0,
        Some((s, l)) => s as f64 * (0.5 * l).exp(),
    }
}

/// `|C|²` without the square root round trip.
pub fn clebsch_gordan_sq(t: &AngularMomentumTriple) -> f64 {
    if t.tm1 == 0 && t.tm2 == 0 && t.tm3 == 0 && t.tj1 % 2 == 0 && t.tj2 % 2 == 0 {
        return cg_sq_zero_m(t.tj1 / 2, t.tj2 / 2, t.tj3 / 2, t.tj3 % 2 == 0 && t.triangle());
    }
    cg_log(t).map_or(0.0, |(_, l)| l.exp())
}

/// Closed form for `(j1 0; j2 0 | j3 0)²` with integer momenta.
fn cg_sq_zero_m(j1: u32, j2: u32, j3: u32, allowed: bool) -> f64 {
    let big_j = j1 + j2 + j3;
    if !allowed || big_j % 2 == 1 {
        return 0.0;
    }
    let g = big_j / 2;
    let lf = |x: u32| ln_factorial(x as u64);
    let ln = ((2 * j3 + 1) as f64).ln() + lf(big_j - 2 * j1) + lf(big_j - 2 * j2)
        + lf(big_j - 2 * j3)
        - lf(big_j + 1)
        + 2.0 * (lf(g) - lf(g - j1) - lf(g - j2) - lf(g - j3));
    ln.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(tj1: u32, tm1: i32, tj2: u32, tm2: i32, tj3: u32, tm3: i32) -> AngularMomentumTriple {
        AngularMomentumTriple::new(tj1, tm1, tj2, tm2, tj3, tm3).unwrap()
    }

    #[test]
    fn trivial() {
        assert_eq!(clebsch_gordan(&t(0, 0, 0, 0, 0, 0)), 1.0);
        assert_eq!(clebsch_gordan(&t(1, 1, 1, 1, 0, 0)), 0.0);
    }

    #[test]
    fn spin_half_singlet() {
        let v = clebsch_gordan(&t(1, 1, 1, -1, 0, 0));
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let w = clebsch_gordan(&t(1, -1, 1, 1, 0, 0));
        assert!((w + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn textbook_values() {
        // <1 1; 1 -1 | 2 0> = 1/√6, <1 0; 1 0 | 2 0> = √(2/3), <1 0; 1 0 | 1 0> = 0
        assert!((clebsch_gordan(&t(2, 2, 2, -2, 4, 0)) - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan(&t(2, 0, 2, 0, 4, 0)) - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(clebsch_gordan(&t(2, 0, 2, 0, 2, 0)), 0.0);
        // <3/2 1/2; 1 0 | 3/2 1/2> = 1/√15
        assert!((clebsch_gordan(&t(3, 1, 2, 0, 3, 1)) - (1.0f64 / 15.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn invalid_pairs_rejected() {
        assert!(AngularMomentumTriple::new(1, 3, 0, 0, 1, 3).is_err());
        assert!(AngularMomentumTriple::new(2, 1, 0, 0, 2, 1).is_err());
    }

    #[test]
    fn zero_m_closed_form_matches_racah() {
        for j1 in 0..=12u32 {
            for j2 in 0..=12u32 {
                for j3 in 0..=24u32 {
                    let tr = t(2 * j1, 0, 2 * j2, 0, 2 * j3, 0);
                    let fast = clebsch_gordan_sq(&tr);
                    let slow = cg_log(&tr).map_or(0.0, |(_, l)| l.exp());
                    assert!(
                        (fast - slow).abs() <= 1e-13 * slow,
                        "{j1} {j2} {j3}: {fast} vs {slow}"
                    );
                }
            }
        }
    }

    #[test]
    fn unitarity_over_j3() {
        for tj1 in 0..=12u32 {
            for tj2 in 0..=12u32 {
                for tm1 in (-(tj1 as i32)..=tj1 as i32).step_by(2) {
                    for tm2 in (-(tj2 as i32)..=tj2 as i32).step_by(2) {
                        let mut s = 0.0;
                        let mut tj3 = tj1.abs_diff(tj2);
                        while tj3 <= tj1 + tj2 {
                            if ((tm1 + tm2).unsigned_abs()) <= tj3 {
                                s += clebsch_gordan_sq(&t(tj1, tm1, tj2, tm2, tj3, tm1 + tm2));
                            }
                            tj3 += 2;
                        }
                        assert!((s - 1.0).abs() < 1e-13, "{tj1} {tm1} {tj2} {tm2}: {s}");
                    }
                }
            }
        }
    }

    #[test]
    fn large_momenta_still_unitary() {
        // j1 = j2 = 60, m1 = 7, m2 = -3: the f64 Racah sum is hopeless here
        let (tj1, tj2, tm1, tm2) = (120u32, 120u32, 14i32, -6i32);
        let mut s = 0.0;
        let mut tj3 = 0;
        while tj3 <= 240 {
            if (tm1 + tm2).unsigned_abs() <= tj3 {
                s += clebsch_gordan_sq(&t(tj1, tm1, tj2, tm2, tj3, tm1 + tm2));
            }
            tj3 += 2;
        }
        assert!((s - 1.0).abs() < 1e-11, "{s}");
    }
}
