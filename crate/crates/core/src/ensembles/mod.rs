//! Eigenvalue configurations of the circular ensembles.
//!
//! * [`sample_cue`] draws exactly from the `beta = 2` law by sequential
//!   projection-DPP sampling.
//! * [`sample_cbe_mcmc`] targets general `beta >= 0` with single-site
//!   Metropolis moves.
//!
//! Both consume an explicit random stream and hold no shared state.

mod dpp;
mod mcmc;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dpp::{sample_cue, CueSampler, DEFAULT_REJECTION_CAP};
pub use mcmc::{
    calibrate_thinning, integrated_autocorrelation_time, sample_cbe_mcmc, CbeChain, McmcParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Dpp,
    Mcmc,
}

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sampler: SamplerKind,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
}

/// One configuration of `N` eigenangles, sorted ascending in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueSample {
    angles: Vec<f64>,
    beta: f64,
    provenance: Provenance,
}

impl EigenvalueSample {
    /// Wraps every angle into `[0, 2 pi)` and sorts.
    pub fn new(mut angles: Vec<f64>, beta: f64, provenance: Provenance) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidParameter("a sample needs N >= 1 angles".into()));
        }
        for a in angles.iter_mut() {
            if !a.is_finite() {
                return Err(Error::InvalidParameter("non-finite angle".into()));
            }
            *a = wrap_angle(*a);
        }
        angles.sort_by(f64::total_cmp);
        Ok(Self { angles, beta, provenance })
    }

    /// Convenience constructor for hand-built configurations.
    pub fn from_angles(angles: Vec<f64>) -> Result<Self> {
        Self::new(angles, 2.0, Provenance { sampler: SamplerKind::Dpp, seed: None, stream: None })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn n(&self) -> usize {
        self.angles.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub(crate) fn with_seed(mut self, seed: u64, stream: u64) -> Self {
        self.provenance.seed = Some(seed);
        self.provenance.stream = Some(stream);
        self
    }

    /// The same configuration rotated by `shift` radians.
    pub fn rotated(&self, shift: f64) -> Self {
        let angles = self.angles.iter().map(|a| a + shift).collect();
        Self::new(angles, self.beta, self.provenance).expect("rotation keeps angles finite")
    }
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `N` and `beta` of a circular ensemble; `beta = 2` is the CUE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub n: usize,
    pub beta: f64,
}

impl EnsembleParams {
    /// `beta = 0` is admitted as the i.i.d. uniform reference case.
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be >= 1".into()));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(Self { n, beta })
    }

    pub fn cue(n: usize) -> Result<Self> {
        Self::new(n, 2.0)
    }

    pub fn is_cue(&self) -> bool {
        self.beta == 2.0
    }
}

/// `Z_N(2) = (2 pi)^N N!`, available while it fits comfortably in an `f64`.
pub fn partition_function_cue(n: usize) -> Result<f64> {
    if !(1..=20).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "partition_function_cue supports 1 <= N <= 20, got {n}; use log_partition_function_cue"
        )));
    }
    Ok(log_partition_function_cue(n)?.exp())
}

/// `log Z_N(2) = N log(2 pi) + log N!`.
pub fn log_partition_function_cue(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    let log_factorial: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
    Ok(n as f64 * TAU.ln() + log_factorial)
}
