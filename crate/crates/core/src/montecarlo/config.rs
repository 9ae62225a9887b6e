use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensembles::{McmcParams, SamplerKind};
use crate::error::{Error, Result};
use crate::spectral::FamilySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// KS distance of the normalized statistic to the standard normal.
    Clt,
    /// `S_N - E S_N` against draws of the exponential-sum law.
    LimitCompare,
    /// Mean and variance of `S_N(f_K)` against the exact formulas.
    VarianceCheck,
    /// `E prod |t_{k_i}|^2` against the exponential moment identity.
    MomentIdentity,
    /// Joint trace cumulants against their known values.
    CumulantCheck,
    /// The three off-diagonal sums relative to `V_N`; no sampling.
    LemmaSums,
    /// Central moments of the low-mode trace sum against the exponential model.
    TruncatedMoments,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let text = serde_json::to_value(self).map_err(|_| std::fmt::Error)?;
        f.write_str(text.as_str().unwrap_or_default())
    }
}

/// Optional output files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Summary JSON.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    /// Long-form per-sample values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Matrix sizes; each gets its own record.
    pub n: Vec<usize>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Test-function family, e.g. `power:1.5`.
    #[serde(default = "default_fhat")]
    pub fhat: String,
    /// Truncation `K` of `f`; `None` means `K = N`.
    #[serde(default)]
    pub k: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    /// MCMC settings; `None` means the per-N defaults.
    #[serde(default)]
    pub mcmc: Option<McmcParams>,
    /// Trace indices for moment-identity and cumulant-check.
    #[serde(default)]
    pub ks: Vec<i64>,
    /// Draws of the exponential-sum law; `None` means `10 * samples`.
    #[serde(default)]
    pub limit_samples: Option<usize>,
    /// Tolerance of the `M_N` schedule.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Moment order for truncated-moments.
    #[serde(default = "default_moment_order")]
    pub moment_order: u32,
    /// Fixed `M` instead of the schedule (exploratory runs).
    #[serde(default)]
    pub m_override: Option<usize>,
    /// Truncation of infinite tails in exact sums; `None` means `32 N`.
    #[serde(default)]
    pub k_tail: Option<usize>,
    /// Width of the acceptance band in standard errors.
    #[serde(default = "default_se_band")]
    pub se_band: f64,
    /// Largest acceptable KS distance, where the kind reports one.
    #[serde(default)]
    pub ks_threshold: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_beta() -> f64 {
    2.0
}

fn default_fhat() -> String {
    "power:1.5".into()
}

fn default_sampler() -> SamplerKind {
    SamplerKind::Dpp
}

fn default_delta() -> f64 {
    0.05
}

fn default_moment_order() -> u32 {
    3
}

fn default_se_band() -> f64 {
    4.0
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, n: Vec<usize>, fhat: &str, samples: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            beta: default_beta(),
            fhat: fhat.into(),
            k: None,
            samples,
            seed,
            sampler: default_sampler(),
            mcmc: None,
            ks: Vec::new(),
            limit_samples: None,
            delta: default_delta(),
            moment_order: default_moment_order(),
            m_override: None,
            k_tail: None,
            se_band: default_se_band(),
            ks_threshold: None,
            outputs: Outputs::default(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn family(&self) -> Result<FamilySpec> {
        self.fhat.parse()
    }

    pub fn truncation(&self, n: usize) -> usize {
        self.k.unwrap_or(n)
    }

    pub fn tail_cutoff(&self, n: usize) -> usize {
        self.k_tail.unwrap_or(crate::exact::default_k_tail(n))
    }

    pub fn limit_draws(&self) -> usize {
        self.limit_samples.unwrap_or(10 * self.samples)
    }

    pub fn mcmc_for(&self, n: usize) -> McmcParams {
        self.mcmc.unwrap_or_else(|| McmcParams::defaults(n))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n.is_empty() {
            return fail("the N list is empty".into());
        }
        if self.n.contains(&0) {
            return fail("every N must be >= 1".into());
        }
        if self.kind != ExperimentKind::LemmaSums && self.samples < 2 {
            return fail(format!("need at least 2 samples, got {}", self.samples));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return fail(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        if self.sampler == SamplerKind::Dpp && self.beta != 2.0 {
            return fail(format!("the dpp sampler draws beta = 2 only, got beta = {}", self.beta));
        }
        if let Some(m) = &self.mcmc {
            m.validate()?;
        }
        if !(self.se_band > 0.0) {
            return fail("se_band must be positive".into());
        }
        if !(self.delta > 0.0) {
            return fail("delta must be positive".into());
        }
        self.family()?;
        let needs_cue = matches!(
            self.kind,
            ExperimentKind::Clt
                | ExperimentKind::LimitCompare
                | ExperimentKind::VarianceCheck
                | ExperimentKind::MomentIdentity
                | ExperimentKind::CumulantCheck
                | ExperimentKind::TruncatedMoments
        );
        if needs_cue && self.beta != 2.0 {
            return fail(format!("{} compares against CUE formulas and needs beta = 2", self.kind));
        }
        match self.kind {
            ExperimentKind::MomentIdentity => {
                if self.ks.is_empty() || self.ks.iter().any(|&k| k <= 0) {
                    return fail("moment-identity needs a nonempty list of positive ks".into());
                }
            }
            ExperimentKind::CumulantCheck => {
                if self.ks.is_empty() || self.ks.len() > 4 || self.ks.contains(&0) {
                    return fail("cumulant-check needs 1 to 4 nonzero ks".into());
                }
            }
            ExperimentKind::LemmaSums => {
                if self.n.iter().any(|&n| n < 2) {
                    return fail("lemma-sums needs N >= 2".into());
                }
            }
            ExperimentKind::TruncatedMoments => {
                if self.n.iter().any(|&n| n < 4) {
                    return fail("truncated-moments needs N >= 4".into());
                }
                if self.moment_order == 0 {
                    return fail("moment_order must be >= 1".into());
                }
                if matches!(self.m_override, Some(m) if m < 2) {
                    return fail("m_override must be >= 2".into());
                }
            }
            ExperimentKind::VarianceCheck if self.n.iter().any(|&n| n < 2) => {
                return fail("variance-check needs N >= 2".into());
            }
            _ => {}
        }
        Ok(())
    }
}
