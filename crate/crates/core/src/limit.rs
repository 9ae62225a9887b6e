//! The limiting laws of the pair statistic: the exponential sum
//! `(4/beta) sum_k fhat(k) k (phi_k - 1)` with `phi_k` i.i.d. Exp(1), and the
//! moment generating function of normalized exponential sums.

use rand::Rng;

use crate::error::{Error, Result};
use crate::spectral::TestFunction;
use crate::stream::open_unit;
use crate::summation::pairwise_sum;

/// Coefficients `a_k = fhat(k) k` for `k = 1..=K` and the prefactor `4/beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLawSpec {
    coefficients: Vec<f64>,
    prefactor: f64,
}

impl LimitLawSpec {
    /// The CUE law, prefactor 2.
    pub fn cue(f: &TestFunction, k: usize) -> Result<Self> {
        Self::with_beta(f, k, 2.0)
    }

    pub fn with_beta(f: &TestFunction, k: usize, beta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("limit law needs K >= 1".into()));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        let coefficients: Vec<f64> = (1..=k).map(|j| f.fhat(j) * j as f64).collect();
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("limit law coefficients must be finite".into()));
        }
        Ok(Self { coefficients, prefactor: 4.0 / beta })
    }

    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let terms: Vec<f64> = self
            .coefficients
            .iter()
            .map(|a| a * (-open_unit(rng).ln() - 1.0))
            .collect();
        self.prefactor * pairwise_sum(&terms)
    }

    /// `kappa_m = (m-1)! sum_k (c a_k)^m` for `m >= 2`, and 0 for `m = 1`.
    pub fn cumulant(&self, m: u32) -> Result<f64> {
        if m == 0 {
            return Err(Error::InvalidParameter("cumulant order must be >= 1".into()));
        }
        if m == 1 {
            return Ok(0.0);
        }
        let factorial: f64 = (1..m).map(f64::from).product();
        let powers: Vec<f64> = self.coefficients.iter().map(|a| (self.prefactor * a).powi(m as i32)).collect();
        Ok(factorial * pairwise_sum(&powers))
    }
}

/// One draw of `2 sum_{k<=K} fhat(k) k (phi_k - 1)`.
pub fn sample_limit_law<R: Rng + ?Sized>(f: &TestFunction, k: usize, rng: &mut R) -> Result<f64> {
    Ok(LimitLawSpec::cue(f, k)?.sample(rng))
}

pub fn limit_law_cumulant(f: &TestFunction, k: usize, m: u32) -> Result<f64> {
    LimitLawSpec::cue(f, k)?.cumulant(m)
}

/// `E exp(t sum_k a_k (phi_k - 1) / sigma) = prod_k e^{-u_k} / (1 - u_k)`,
/// `u_k = t a_k / sigma`, `sigma^2 = sum_k a_k^2`. Evaluated in log space.
pub fn exp_sum_mgf(a: &[f64], t: f64) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::InvalidParameter("empty coefficient sequence".into()));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let sigma = pairwise_sum(&a.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
    if sigma == 0.0 {
        return Ok(1.0);
    }
    let mut logs = Vec::with_capacity(a.len());
    for &ak in a {
        let u = t * ak / sigma;
        if u >= 1.0 {
            return Err(Error::MgfDomain(u));
        }
        logs.push(-u - (-u).ln_1p());
    }
    Ok(pairwise_sum(&logs).exp())
}
