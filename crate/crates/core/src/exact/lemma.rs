use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::TestFunction;
use crate::summation::pairwise_sum;

/// The three off-diagonal sums that are `o(V_N)` when `V_N` varies slowly:
///
/// ```text
/// (i)   sum_{1<=s,t<=N, s+t>=N+1} s |fhat(s)| |fhat(t)|
/// (ii)  (N+1) sum_{s>=N+1, 1<=t<=N, s-t<=N} |fhat(s)| |fhat(t)|
/// (iii) N sum_{s,t>=N, |s-t|<=N-1} |fhat(s)| |fhat(t)|
/// ```
///
/// Sum (iii) runs over an infinite range and is truncated at `k_tail`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma21Sums {
    pub n: usize,
    pub k_tail: usize,
    pub first: f64,
    pub second: f64,
    pub third: f64,
    /// Bound on what the truncation drops from (iii).
    pub third_remainder: Option<f64>,
}

pub fn lemma21_sums(f: &TestFunction, n: usize, k_tail: usize) -> Result<Lemma21Sums> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N must be >= 2, got {n}")));
    }
    let k = k_tail.max(2 * n);
    let abs: Vec<f64> = (0..=k).map(|s| f.fhat(s).abs()).collect();
    let mut prefix = vec![0.0; k + 1];
    for s in 1..=k {
        prefix[s] = prefix[s - 1] + abs[s];
    }
    let window = |lo: usize, hi: usize| if lo > hi { 0.0 } else { prefix[hi] - prefix[lo - 1] };
    let nf = n as f64;

    let first: Vec<f64> = (1..=n).map(|s| s as f64 * abs[s] * window(n + 1 - s, n)).collect();
    let second: Vec<f64> = (n + 1..=2 * n).map(|s| abs[s] * window(s - n, n)).collect();
    let third: Vec<f64> = (n..=k_tail)
        .map(|s| abs[s] * window((s + 1).saturating_sub(n).max(n), (s + n - 1).min(k_tail)))
        .collect();

    let third_remainder = match f.support() {
        Some(support) if support <= k_tail => Some(0.0),
        _ if f.is_monotone_family() => f.tail_abs_bound(k_tail).map(|tail| {
            let partner = f.fhat((k_tail + 2).saturating_sub(n).max(1)).abs();
            2.0 * nf * (2.0 * nf - 1.0) * partner * tail
        }),
        _ => None,
    };

    Ok(Lemma21Sums {
        n,
        k_tail,
        first: pairwise_sum(&first),
        second: (nf + 1.0) * pairwise_sum(&second),
        third: nf * pairwise_sum(&third),
        third_remainder,
    })
}

/// `x_s = s |fhat(s)|` over `s = first..=last`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    first: usize,
    values: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(f: &TestFunction, first: usize, last: usize) -> Self {
        let first = first.max(1);
        let values = (first..=last).map(|s| s as f64 * f.fhat(s).abs()).collect();
        Self { first, values }
    }

    /// `X_N = (x_1, ..., x_N)`.
    pub fn leading(f: &TestFunction, n: usize) -> Self {
        Self::new(f, 1, n)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm_sq(&self) -> f64 {
        pairwise_sum(&self.values.iter().map(|v| v * v).collect::<Vec<_>>())
    }

    /// Coordinates with index `s <= threshold` zeroed (`Y_N` for `threshold = N/2`).
    pub fn above(&self, threshold: usize) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| if self.first + i > threshold { v } else { 0.0 })
            .collect();
        Self { first: self.first, values }
    }

    /// `X^{(j)}`: coordinates with `jN <= s < (j+1)N`, others zeroed.
    pub fn block(&self, j: usize, n: usize) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let s = self.first + i;
                if (j * n..(j + 1) * n).contains(&s) {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        Self { first: self.first, values }
    }
}
