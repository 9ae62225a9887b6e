use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::pairwise_sum;

const TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200_000;

/// `A_N x` for the `N x N` matrix `(A_N)_{s,t} = (1/s) 1{t >= N - s + 1}`,
/// with `N = x.len()`.
pub fn a_matrix_apply(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    // suffix[i] = x[i] + ... + x[n-1]
    let suffix = suffix_sums(x);
    (1..=n).map(|s| suffix[n - s] / s as f64).collect()
}

fn a_matrix_apply_transpose(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let scaled: Vec<f64> = y.iter().enumerate().map(|(i, v)| v / (i + 1) as f64).collect();
    let suffix = suffix_sums(&scaled);
    // Column t collects rows s >= N + 1 - t.
    (1..=n).map(|t| suffix[n - t]).collect()
}

fn suffix_sums(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len() + 1];
    for i in (0..x.len()).rev() {
        out[i] = out[i + 1] + x[i];
    }
    out
}

/// `||A_N||_op` by power iteration on `A_N^T A_N`.
pub fn a_matrix_norm(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    power_iteration(n, |x| a_matrix_apply_transpose(&a_matrix_apply(x)))
}

/// Operator and Hilbert-Schmidt norms of `R_{N,j}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorms {
    pub op: f64,
    pub hs: f64,
}

/// Norms of `(R_{N,j})_{t,s} = (1/t) 1{t - N + 1 <= s <= t} 1{jN <= t < (j+1)N}`.
///
/// Rows are `t = jN..(j+1)N - 1`; the nonzero columns are
/// `s = (j-1)N + 1..=(j+1)N - 1`, so the operator is stored as `N x (2N - 1)`.
pub fn r_operator_norm(n: usize, j: usize) -> Result<OperatorNorms> {
    if n == 0 || j == 0 {
        return Err(Error::InvalidParameter(format!("need N >= 1 and j >= 1, got N = {n}, j = {j}")));
    }
    let band = RBand::new(n, j);
    let op = power_iteration(band.cols, |x| band.apply_transpose(&band.apply(x)))?;
    let hs_terms: Vec<f64> = band.rows().map(|t| (t as f64).powi(-2)).collect();
    let hs = (n as f64 * pairwise_sum(&hs_terms)).sqrt();
    Ok(OperatorNorms { op, hs })
}

struct RBand {
    n: usize,
    j: usize,
    cols: usize,
}

impl RBand {
    fn new(n: usize, j: usize) -> Self {
        Self { n, j, cols: 2 * n - 1 }
    }

    fn rows(&self) -> std::ops::Range<usize> {
        self.j * self.n..(self.j + 1) * self.n
    }

    /// Column position of index `s`.
    fn col(&self, s: usize) -> usize {
        s - ((self.j - 1) * self.n + 1)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut prefix = vec![0.0; x.len() + 1];
        for (i, v) in x.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v;
        }
        self.rows()
            .map(|t| {
                let lo = self.col(t + 1 - self.n);
                let hi = self.col(t);
                (prefix[hi + 1] - prefix[lo]) / t as f64
            })
            .collect()
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let first_row = self.j * self.n;
        let mut prefix = vec![0.0; y.len() + 1];
        for (r, v) in y.iter().enumerate() {
            prefix[r + 1] = prefix[r] + v / (first_row + r) as f64;
        }
        let last_row = first_row + self.n - 1;
        let first_col = (self.j - 1) * self.n + 1;
        (0..self.cols)
            .map(|c| {
                let s = first_col + c;
                let lo = s.max(first_row) - first_row;
                let hi = (s + self.n - 1).min(last_row) - first_row;
                prefix[hi + 1] - prefix[lo]
            })
            .collect()
    }
}

/// Square root of the top eigenvalue of a symmetric nonnegative operator.
fn power_iteration<F>(dim: usize, gram: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let w = gram(&v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let next = norm;
        v = w.into_iter().map(|x| x / norm).collect();
        if (next - lambda).abs() <= TOLERANCE * next {
            return Ok(next.sqrt());
        }
        lambda = next;
    }
    Err(Error::Degenerate(format!("power iteration did not converge in {MAX_ITERATIONS} steps")))
}
