//! Bessel functions of the first kind, integer order.
//!
//! Three regimes: the ascending series where it cannot cancel, Hankel's
//! asymptotic expansion once `x` is well past the turning point, and Miller's
//! downward recurrence normalized by `J_0 + 2 Σ J_2k = 1` in between.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `J_order(x)`. Negative `x` is handled through `J_n(-x) = (-1)^n J_n(x)`.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    if x < 0.0 {
        let v = bessel_j(order, -x);
        return if order % 2 == 0 { v } else { -v };
    }
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let nu = order as f64;
    if x < 1.0 || x * x <= 4.0 * (nu + 1.0) {
        series(order, x)
    } else if x >= 30.0 && x >= nu * nu {
        hankel(order, x)
    } else {
        miller(order, x)
    }
}

fn series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let nu = order as f64;
    // (x/2)^n / n! in log form so large orders don't overflow
    let lead = nu * half.ln() - super::factorial::ln_factorial(order as u64);
    let lead = lead.exp();
    if lead == 0.0 {
        return 0.0;
    }
    let q = -half * half;
    let (mut term, mut sum) = (1.0f64, 1.0f64);
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn hankel(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order as f64).powi(2);
    let eight_x = 8.0 * x;
    let (mut p, mut q) = (1.0f64, 0.0f64);
    let mut term = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * eight_x);
        let mag = term.abs();
        if mag > prev {
            break;
        }
        // a_k / x^k enters P for even k, Q for odd k, with alternating signs
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if mag < 1e-17 * (p.abs() + q.abs()) {
            break;
        }
        prev = mag;
    }
    // χ = x - (2n+1)π/4; reduce the phase offset exactly
    let (s, c) = x.sin_cos();
    let (sp, cp) = eighth_turn((2 * order + 1) % 8);
    let cos_chi = c * cp + s * sp;
    let sin_chi = s * cp - c * sp;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// (sin, cos) of `j π/4`.
fn eighth_turn(j: u32) -> (f64, f64) {
    const R: f64 = FRAC_1_SQRT_2;
    match j {
        0 => (0.0, 1.0),
        1 => (R, R),
        2 => (1.0, 0.0),
        3 => (R, -R),
        4 => (0.0, -1.0),
        5 => (-R, -R),
        6 => (-1.0, 0.0),
        _ => (-R, R),
    }
}

fn miller(order: u32, x: f64) -> f64 {
    let top = (order as f64).max(x);
    let mut start = (top + 20.0 + (40.0 * top).sqrt()) as u32;
    start += start % 2;
    let two_over_x = 2.0 / x;
    let (mut above, mut cur) = (0.0f64, 1e-30f64);
    let (mut sum, mut ans) = (0.0f64, 0.0f64);
    for k in (1..=start).rev() {
        let below = (k as f64) * two_over_x * cur - above;
        above = cur;
        cur = below;
        let idx = k - 1;
        if idx == order {
            ans = cur;
        }
        if idx % 2 == 0 {
            sum += if idx == 0 { cur } else { 2.0 * cur };
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            sum *= 1e-250;
            ans *= 1e-250;
        }
    }
    ans / sum
}
