//! Single-site Metropolis sampling of the circular beta ensemble.
//!
//! Target log-density `beta * sum_{j<k} log|e^{i theta_j} - e^{i theta_k}|`.
//! Each move perturbs one angle by a wrapped uniform step; a move onto an
//! occupied angle has log-density `-inf` and is rejected.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{wrap_angle, EigenvalueSample, EnsembleParams, Provenance, SamplerKind};
use crate::error::{Error, Result};
use crate::stream::open_unit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcParams {
    /// Half-width of the uniform proposal, in `(0, pi]`.
    pub proposal_width: f64,
    pub burn_in_sweeps: usize,
    /// Sweeps between retained configurations.
    pub thinning: usize,
}

impl McmcParams {
    /// Width `2 pi / N`, `100 N` burn-in sweeps, thinning 1.
    pub fn defaults(n: usize) -> Self {
        Self {
            proposal_width: (TAU / n.max(1) as f64).min(PI),
            burn_in_sweeps: 100 * n,
            thinning: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.proposal_width > 0.0 && self.proposal_width <= PI) {
            return Err(Error::InvalidParameter(format!(
                "proposal width must lie in (0, pi], got {}",
                self.proposal_width
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be >= 1".into()));
        }
        Ok(())
    }
}

/// A Metropolis chain over labeled (unsorted) angles.
#[derive(Debug, Clone)]
pub struct CbeChain {
    beta: f64,
    width: f64,
    angles: Vec<f64>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    proposed: u64,
    accepted: u64,
}

impl CbeChain {
    /// Starts from equispaced angles under a uniformly random rotation.
    pub fn new<R: Rng + ?Sized>(params: &EnsembleParams, width: f64, rng: &mut R) -> Result<Self> {
        let n = params.n;
        let offset = TAU * rng.random::<f64>() / n as f64;
        let angles: Vec<f64> = (0..n).map(|j| wrap_angle(offset + TAU * j as f64 / n as f64)).collect();
        Self::from_angles(params.beta, width, angles)
    }

    /// Starts from the given angles, which must be pairwise distinct.
    pub fn from_angles(beta: f64, width: f64, angles: Vec<f64>) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
        }
        if angles.is_empty() {
            return Err(Error::InvalidParameter("N must be >= 1".into()));
        }
        let xs = angles.iter().map(|a| a.cos()).collect();
        let ys = angles.iter().map(|a| a.sin()).collect();
        let chain = Self { beta, width, angles, xs, ys, proposed: 0, accepted: 0 };
        if !chain.log_density().is_finite() {
            return Err(Error::Degenerate("initial angles are not pairwise distinct".into()));
        }
        Ok(chain)
    }

    /// Unnormalized log-density of the current state.
    pub fn log_density(&self) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        let n = self.angles.len();
        let mut total = 0.0;
        for j in 0..n {
            for k in j + 1..n {
                let d2 = (self.xs[j] - self.xs[k]).powi(2) + (self.ys[j] - self.ys[k]).powi(2);
                total += 0.5 * d2.ln();
            }
        }
        self.beta * total
    }

    /// One pass of single-site updates over every angle in index order.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for j in 0..self.angles.len() {
            self.update(j, rng);
        }
    }

    fn update<R: Rng + ?Sized>(&mut self, j: usize, rng: &mut R) {
        let step = self.width * (2.0 * rng.random::<f64>() - 1.0);
        let u = open_unit(rng);
        self.proposed += 1;
        let proposal = wrap_angle(self.angles[j] + step);
        let (ys, xs) = proposal.sin_cos();
        if self.beta > 0.0 {
            match self.log_ratio(j, xs, ys) {
                Some(delta) if u.ln() < delta => {}
                _ => return,
            }
        }
        self.angles[j] = proposal;
        self.xs[j] = xs;
        self.ys[j] = ys;
        self.accepted += 1;
    }

    /// `log p(proposal) - log p(current)`, or `None` on a collision.
    fn log_ratio(&self, j: usize, xs: f64, ys: f64) -> Option<f64> {
        let (x0, y0) = (self.xs[j], self.ys[j]);
        let mut log_sum = 0.0;
        let mut product = 1.0;
        for k in 0..self.angles.len() {
            if k == j {
                continue;
            }
            let new = (xs - self.xs[k]).powi(2) + (ys - self.ys[k]).powi(2);
            if new == 0.0 {
                return None;
            }
            let old = (x0 - self.xs[k]).powi(2) + (y0 - self.ys[k]).powi(2);
            product *= new / old;
            if !(1e-100..=1e100).contains(&product) {
                log_sum += product.ln();
                product = 1.0;
            }
        }
        Some(0.5 * self.beta * (log_sum + product.ln()))
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// `Re t_{N,1} = sum_j cos(theta_j)`.
    pub fn re_t1(&self) -> f64 {
        self.xs.iter().sum()
    }
}

/// One retained configuration: burn-in, then `thinning` further sweeps.
pub fn sample_cbe_mcmc<R: Rng + ?Sized>(
    params: &EnsembleParams,
    mcmc: &McmcParams,
    rng: &mut R,
) -> Result<EigenvalueSample> {
    let params = EnsembleParams::new(params.n, params.beta)?;
    mcmc.validate()?;
    let mut chain = CbeChain::new(&params, mcmc.proposal_width, rng)?;
    for _ in 0..mcmc.burn_in_sweeps + mcmc.thinning {
        chain.sweep(rng);
    }
    EigenvalueSample::new(
        chain.angles,
        params.beta,
        Provenance { sampler: SamplerKind::Mcmc, seed: None, stream: None },
    )
}

/// Integrated autocorrelation time `1 + 2 sum_k rho_k`, truncated by
/// Geyer's initial positive sequence rule.
pub fn integrated_autocorrelation_time(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
    };
    let gamma0 = autocov(0);
    if gamma0 <= 0.0 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut lag = 0;
    while lag + 1 < n / 2 {
        let pair = autocov(lag) + autocov(lag + 1);
        if pair <= 0.0 {
            break;
        }
        total += pair;
        lag += 2;
    }
    ((2.0 * total - gamma0) / gamma0).max(1.0)
}

/// Runs a pilot chain and returns the smallest thinning interval exceeding
/// twice the integrated autocorrelation time of `Re t_{N,1}`, with that time.
pub fn calibrate_thinning<R: Rng + ?Sized>(
    params: &EnsembleParams,
    mcmc: &McmcParams,
    pilot_sweeps: usize,
    rng: &mut R,
) -> Result<(usize, f64)> {
    mcmc.validate()?;
    let mut chain = CbeChain::new(params, mcmc.proposal_width, rng)?;
    for _ in 0..mcmc.burn_in_sweeps {
        chain.sweep(rng);
    }
    let series: Vec<f64> = (0..pilot_sweeps)
        .map(|_| {
            chain.sweep(rng);
            chain.re_t1()
        })
        .collect();
    let tau = integrated_autocorrelation_time(&series);
    Ok(((2.0 * tau).floor() as usize + 1, tau))
}
