//! Power traces and the pair statistic `S_N(f) = sum_{i != j} f(theta_i - theta_j)`.
//!
//! `S_N` is computed two independent ways: the direct `O(N^2 K)` double sum
//! and the `O(N K)` spectral identity
//!
//! ```text
//! S_N(f_K) = 2 sum_{k=1}^K fhat(k) |t_k|^2 + fhat(0) N^2 - N f_K(0).
//! ```

use rustfft::num_complex::Complex64;

use crate::ensembles::EigenvalueSample;
use crate::error::{Error, Result};
use crate::spectral::TestFunction;
use crate::summation::{pairwise_sum, pairwise_sum_complex};

/// Steps between exact recomputations of the phase in trace recurrences.
const RENORMALIZE_EVERY: usize = 64;
/// Angles per partial-sum block before pairwise combination.
const TRACE_BLOCK: usize = 256;

/// `t_k = sum_j e^{i k theta_j}` for `k = 0..=K`; negative indices are
/// conjugates and are derived on access.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTraces {
    n: usize,
    values: Vec<Complex64>,
}

impl PowerTraces {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest stored index `K`.
    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `t_k` for any `|k| <= K`.
    pub fn get(&self, k: i64) -> Option<Complex64> {
        let v = *self.values.get(k.unsigned_abs() as usize)?;
        Some(if k < 0 { v.conj() } else { v })
    }

    /// `|t_k|^2`; panics when `k > K`.
    pub fn abs_sq(&self, k: usize) -> f64 {
        self.values[k].norm_sqr()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Power traces via a per-angle phase recurrence, renormalized every
/// [`RENORMALIZE_EVERY`] steps.
pub fn power_traces(sample: &EigenvalueSample, k_max: usize) -> PowerTraces {
    let angles = sample.angles();
    let n = angles.len();
    let mut blocks: Vec<Vec<Complex64>> = angles
        .chunks(TRACE_BLOCK)
        .map(|chunk| {
            let mut acc = vec![Complex64::default(); k_max + 1];
            for &theta in chunk {
                let step = Complex64::from_polar(1.0, theta);
                let mut w = step;
                for (k, slot) in acc.iter_mut().enumerate().skip(1) {
                    if k % RENORMALIZE_EVERY == 0 {
                        w = Complex64::from_polar(1.0, k as f64 * theta);
                    }
                    *slot += w;
                    w *= step;
                }
            }
            acc
        })
        .collect();
    let mut values = if blocks.len() == 1 {
        blocks.pop().unwrap_or_default()
    } else {
        (0..=k_max)
            .map(|k| pairwise_sum_complex(&blocks.iter().map(|b| b[k]).collect::<Vec<_>>()))
            .collect()
    };
    values[0] = Complex64::new(n as f64, 0.0);
    PowerTraces { n, values }
}

/// `sum_{k=0}^{K} a_k cos(k x)`.
fn cosine_series(coefficients: &[f64], x: f64) -> f64 {
    let terms = coefficients.iter().enumerate().map(|(k, a)| a * (k as f64 * x).cos());
    if coefficients.len() <= 1024 {
        terms.sum()
    } else {
        pairwise_sum(&terms.collect::<Vec<_>>())
    }
}

/// Cosine-series coefficients of `f_K`: `fhat(0), 2 fhat(1), ..., 2 fhat(K)`.
fn series_coefficients(f: &TestFunction, k_max: usize) -> Vec<f64> {
    (0..=k_max).map(|k| if k == 0 { f.fhat(0) } else { 2.0 * f.fhat(k) }).collect()
}

/// `sum_{i != j} f_K(theta_i - theta_j)` by the double sum. `N = 1` gives
/// the empty sum, 0.
pub fn pair_statistic_direct(sample: &EigenvalueSample, f: &TestFunction, k_max: usize) -> f64 {
    let angles = sample.angles();
    let coefficients = series_coefficients(f, k_max);
    let mut pairs = Vec::with_capacity(angles.len() * angles.len().saturating_sub(1) / 2);
    for (i, a) in angles.iter().enumerate() {
        for b in &angles[i + 1..] {
            pairs.push(cosine_series(&coefficients, a - b));
        }
    }
    2.0 * pairwise_sum(&pairs)
}

/// The spectral route to `S_N(f_K)`. Fails when the traces stop short of `K`.
pub fn pair_statistic_spectral(traces: &PowerTraces, f: &TestFunction, k_max: usize) -> Result<f64> {
    if traces.k_max() < k_max {
        return Err(Error::TraceRange { available: traces.k_max(), required: k_max });
    }
    let n = traces.n() as f64;
    let weighted: Vec<f64> = (1..=k_max).map(|k| f.fhat(k) * traces.abs_sq(k)).collect();
    Ok(2.0 * pairwise_sum(&weighted) + f.fhat(0) * n * n - n * f.value_at_zero(k_max))
}

/// `E S_N(f_K)` under the CUE, from `E |t_k|^2 = min(k, N)`.
pub fn expected_pair_statistic(f: &TestFunction, n: usize, k_max: usize) -> f64 {
    let weighted: Vec<f64> = (1..=k_max).map(|k| f.fhat(k) * k.min(n) as f64).collect();
    let nf = n as f64;
    2.0 * pairwise_sum(&weighted) + f.fhat(0) * nf * nf - nf * f.value_at_zero(k_max)
}

/// `(S_N(f_K) - E S_N(f_K)) / sqrt(2 V_N)`.
pub fn normalized_pair_statistic(sample: &EigenvalueSample, f: &TestFunction, k_max: usize) -> Result<f64> {
    let traces = power_traces(sample, k_max);
    normalized_from_traces(&traces, f, k_max)
}

/// As [`normalized_pair_statistic`], from precomputed traces.
pub fn normalized_from_traces(traces: &PowerTraces, f: &TestFunction, k_max: usize) -> Result<f64> {
    let n = traces.n();
    let v_n = f.v_n(n);
    if v_n == 0.0 {
        return Err(Error::ZeroVariance(n));
    }
    let s = pair_statistic_spectral(traces, f, k_max)?;
    Ok((s - expected_pair_statistic(f, n, k_max)) / (2.0 * v_n).sqrt())
}
