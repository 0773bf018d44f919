//! Jacobi polynomials at the origin.

/// `P_k^{(α,β)}(0)` by the three-term recurrence evaluated at `x = 0`.
///
/// Every step is a ratio of modest integers, and for `α = β` the odd-degree
/// values come out as exact zeros.
pub fn jacobi_at_zero(k: u32, alpha: u32, beta: u32) -> f64 {
    let a = alpha as f64;
    let b = beta as f64;
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0f64;
    let mut cur = 0.5 * (a - b);
    for n in 2..=k {
        let n = n as f64;
        let s = 2.0 * n + a + b;
        let c_cur = (s - 1.0) * (a * a - b * b);
        let c_prev = 2.0 * (n + a - 1.0) * (n + b - 1.0) * s;
        let denom = 2.0 * n * (n + a + b) * (s - 2.0);
        let next = (c_cur * cur - c_prev * prev) / denom;
        prev = cur;
        cur = next;
    }
    cur
}

/// Exact `P_k^{(α,β)}(0)` as a rational `num / 2^k`, from
/// `2^{-k} Σ_t (-1)^t C(k+α, k-t) C(k+β, t)`.
pub fn jacobi_at_zero_exact(k: u32, alpha: u32, beta: u32) -> (num_bigint::BigInt, u32) {
    use num_bigint::BigInt;
    let mut total = BigInt::from(0);
    for t in 0..=k {
        let term = super::cg::binomial((k + alpha) as u64, (k - t) as u64)
            * super::cg::binomial((k + beta) as u64, t as u64);
        if t % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    (total, k)
}
