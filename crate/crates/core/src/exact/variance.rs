use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::TestFunction;
use crate::summation::pairwise_sum;

/// The four sums of the CUE variance formula for `S_N(f)`:
///
/// ```text
/// Var S_N = 4 sum_{1<=s<=N-1} s^2 fhat(s)^2                          (term1)
///         + 4 (N^2 - N) sum_{s>=N} fhat(s)^2                         (term2)
///         - 4 sum_{|s-t| in [1, N-1], max(s,t) >= N} (N - |s-t|) fhat(s) fhat(t)   (term3)
///         - 4 sum_{1<=s,t<=N-1, s+t>=N+1} (s + t - N) fhat(s) fhat(t)            (term4)
/// ```
///
/// Indices beyond `k_tail` are dropped, which makes `total` the exact
/// variance of `S_N(f_{k_tail})`. `remainder_bound` bounds the change in
/// `total` from restoring the dropped tail, when the family admits one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceBreakdown {
    pub n: usize,
    pub k_tail: usize,
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    pub term4: f64,
    pub total: f64,
    pub remainder_bound: Option<f64>,
}

pub fn variance_exact(f: &TestFunction, n: usize, k_tail: usize) -> Result<VarianceBreakdown> {
    check(n, k_tail)?;
    let mut a = f.coefficients_up_to(k_tail);
    a[0] = 0.0;
    Ok(breakdown(&a, n, f, k_tail))
}

/// Variance of the high-mode part `2 sum_{k > floor(N/M)} fhat(k) |t_k|^2`
/// of `S_N(f)`: the four-term formula with every index restricted to
/// `s, t >= floor(N/M) + 1`.
pub fn variance_tail_exact(f: &TestFunction, n: usize, m: usize, k_tail: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("M must be >= 2, got {m}")));
    }
    check(n, k_tail)?;
    let cutoff = n / m;
    let mut a = f.coefficients_up_to(k_tail);
    a[..=cutoff].iter_mut().for_each(|v| *v = 0.0);
    Ok(breakdown(&a, n, f, k_tail).total)
}

fn check(n: usize, k_tail: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("variance formula needs N >= 2, got {n}")));
    }
    if k_tail < n {
        return Err(Error::InvalidParameter(format!("K_tail = {k_tail} must be >= N = {n}")));
    }
    Ok(())
}

/// `a[s] = fhat(s)` for `s = 0..=K` (with `a[0]` ignored).
fn breakdown(a: &[f64], n: usize, f: &TestFunction, k_tail: usize) -> VarianceBreakdown {
    let k = a.len() - 1;
    let nf = n as f64;

    let term1 = 4.0 * pairwise_sum(&(1..n).map(|s| (s as f64 * a[s]).powi(2)).collect::<Vec<_>>());
    let term2 = 4.0 * (nf * nf - nf) * pairwise_sum(&a[n..].iter().map(|v| v * v).collect::<Vec<_>>());

    // Prefix sums p0[t] = sum_{u<=t} a_u and p1[t] = sum_{u<=t} u a_u.
    let mut p0 = vec![0.0; k + 1];
    let mut p1 = vec![0.0; k + 1];
    for t in 1..=k {
        p0[t] = p0[t - 1] + a[t];
        p1[t] = p1[t - 1] + t as f64 * a[t];
    }
    let window = |lo: usize, hi: usize| (p0[hi] - p0[lo - 1], p1[hi] - p1[lo - 1]);

    // Ordered pairs with s > t; the mirror images double the sum.
    let term3_parts: Vec<f64> = (n..=k)
        .map(|s| {
            let lo = (s + 1).saturating_sub(n).max(1);
            if a[s] == 0.0 || lo > s - 1 {
                return 0.0;
            }
            let (w0, w1) = window(lo, s - 1);
            // sum_t (N - s + t) a_t
            a[s] * ((nf - s as f64) * w0 + w1)
        })
        .collect();
    let term3 = 8.0 * pairwise_sum(&term3_parts);

    let term4_parts: Vec<f64> = (1..n)
        .map(|s| {
            let lo = (n + 1 - s).max(1);
            if a[s] == 0.0 || lo > n - 1 {
                return 0.0;
            }
            let (w0, w1) = window(lo, n - 1);
            // sum_t (s + t - N) a_t
            a[s] * ((s as f64 - nf) * w0 + w1)
        })
        .collect();
    let term4 = 4.0 * pairwise_sum(&term4_parts);

    let remainder_bound = tail_remainder(f, n, k_tail);
    VarianceBreakdown {
        n,
        k_tail,
        term1,
        term2,
        term3,
        term4,
        total: term1 + term2 - term3 - term4,
        remainder_bound,
    }
}

/// Bound on the contribution of indices above `K` to term2 and term3.
fn tail_remainder(f: &TestFunction, n: usize, k_tail: usize) -> Option<f64> {
    if let Some(support) = f.support() {
        if support <= k_tail {
            return Some(0.0);
        }
    }
    if !f.is_monotone_family() {
        return None;
    }
    let nf = n as f64;
    let sq = f.tail_sq_bound(k_tail)?;
    let abs = f.tail_abs_bound(k_tail)?;
    // Window partners of an index above K start at K - N + 2.
    let partner = f.fhat((k_tail + 2).saturating_sub(n).max(1)).abs();
    Some(4.0 * (nf * nf - nf) * sq + 8.0 * nf * (2.0 * nf - 1.0) * partner * abs)
}
