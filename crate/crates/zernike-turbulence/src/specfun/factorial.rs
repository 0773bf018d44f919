//! Log-factorials and friends.

use std::sync::OnceLock;

const TABLE_LEN: usize = 4096;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Compensated sum keeps ln(4095!) ~ 3e4 good to a few ulps.
        let mut out = Vec::with_capacity(TABLE_LEN);
        let (mut acc, mut comp) = (0.0f64, 0.0f64);
        out.push(0.0);
        for k in 1..TABLE_LEN {
            let y = (k as f64).ln() - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            out.push(acc);
        }
        out
    })
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        return table()[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// `ln Γ(t/2)` for a positive integer `t`, i.e. the gamma function at
/// integers and half-integers.
pub fn ln_gamma_half(t: u64) -> f64 {
    assert!(t > 0, "ln_gamma_half: argument must be positive");
    if t % 2 == 0 {
        ln_factorial(t / 2 - 1)
    } else {
        // Γ(k + 1/2) = (2k)! √π / (4^k k!)
        let k = (t - 1) / 2;
        ln_factorial(2 * k) + 0.5 * std::f64::consts::PI.ln()
            - (k as f64) * 4f64.ln()
            - ln_factorial(k)
    }
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_factorials_exact() {
        let mut f = 1.0f64;
        for n in 0..=20u64 {
            if n > 0 {
                f *= n as f64;
            }
            let got = ln_factorial(n).exp();
            assert!((got - f).abs() <= 1e-14 * f, "n={n}");
        }
    }

    #[test]
    fn stirling_branch_joins_table() {
        let direct = table()[TABLE_LEN - 1];
        let x = (TABLE_LEN - 1) as f64;
        let inv = 1.0 / x;
        let stirling = x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + inv / 12.0
            - inv.powi(3) / 360.0;
        assert!((direct - stirling).abs() < 1e-10);
        let beyond = ln_factorial(TABLE_LEN as u64) - ln_factorial(TABLE_LEN as u64 - 1);
        assert!((beyond - (TABLE_LEN as f64).ln()).abs() < 1e-10);
    }

    #[test]
    fn half_integer_gamma() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((ln_gamma_half(1).exp() - sqrt_pi).abs() < 1e-15);
        assert!((ln_gamma_half(3).exp() - 0.5 * sqrt_pi).abs() < 1e-15);
        assert!((ln_gamma_half(7).exp() - 15.0 / 8.0 * sqrt_pi).abs() < 1e-14);
        assert!((ln_gamma_half(10).exp() - 24.0).abs() < 1e-13);
    }
}
