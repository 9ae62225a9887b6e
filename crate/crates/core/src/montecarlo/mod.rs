//! Seeded, parallel Monte Carlo experiments.
//!
//! Sample `i` of size `N` always comes from stream `i` of the `(seed, N)`
//! family, and results are gathered in index order before any estimator
//! runs, so a summary is bit-identical for every thread count.

mod config;
mod estimators;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, ExperimentKind, Outputs};
pub use estimators::{
    central_moment, chi_square_uniform, empirical_cumulant, empirical_joint_cumulant, ks_distance,
    ks_to_fitted_normal, ks_two_sample, mean_with_se, standard_normal_cdf, JOINT_CUMULANT_BATCHES,
    JOINT_CUMULANT_MIN_SAMPLES,
};

use crate::ensembles::{sample_cbe_mcmc, CueSampler, EigenvalueSample, EnsembleParams, Provenance, SamplerKind};
use crate::error::{Error, Result};
use crate::exact::{joint_cumulant_exact, lemma21_sums, moment_identity_rhs, variance_exact};
use crate::limit::LimitLawSpec;
use crate::spectral::{make_family, mn_schedule, TestFunction};
use crate::statistics::{expected_pair_statistic, pair_statistic_spectral, power_traces, PowerTraces};
use crate::stream::{purpose, RootSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Status {
    pub fn is_pass(self) -> bool {
        self == Status::Pass
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(if self.is_pass() { "PASS" } else { "FAIL" })
    }
}

/// One estimated quantity. `within` is set when a reference exists and
/// records whether `|value - reference| <= se_band * stderr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_im: Option<f64>,
    pub stderr: f64,
    pub reference: Option<f64>,
    pub within: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsEntry {
    pub name: String,
    pub distance: f64,
    pub threshold: Option<f64>,
    pub passed: Option<bool>,
}

/// A pass/fail condition that is not a single estimate-vs-reference band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NRecord {
    pub n: usize,
    /// Truncation `K` of the test function.
    pub k: usize,
    pub samples: usize,
    pub v_n: f64,
    /// Upper bound on `2 sum_{k>K} |fhat(k)|`, when the family admits one.
    pub truncation_tail_bound: Option<f64>,
    /// Bound on the error of the exact reference from truncating its tails.
    pub reference_remainder_bound: Option<f64>,
    /// `M` used by truncated-moments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub estimates: Vec<Estimate>,
    pub ks: Vec<KsEntry>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub records: Vec<NRecord>,
    pub checks: Vec<Check>,
    pub status: Status,
}

impl MonteCarloSummary {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, self)?;
        writeln!(file)?;
        Ok(())
    }

    pub fn estimate(&self, n: usize, name: &str) -> Option<&Estimate> {
        self.records.iter().find(|r| r.n == n)?.estimates.iter().find(|e| e.name == name)
    }

    pub fn ks_entry(&self, n: usize, name: &str) -> Option<&KsEntry> {
        self.records.iter().find(|r| r.n == n)?.ks.iter().find(|e| e.name == name)
    }
}

/// Per-sample values in long form: `(n, index, quantity, value)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleTable {
    pub rows: Vec<(usize, usize, String, f64)>,
}

impl SampleTable {
    fn push_series(&mut self, n: usize, quantity: &str, values: &[f64]) {
        self.rows.extend(values.iter().enumerate().map(|(i, &v)| (n, i, quantity.to_string(), v)));
    }

    /// CSV with columns `n,index,quantity,value`, preceded by `#` lines
    /// holding the config echo.
    pub fn write_csv(&self, path: &Path, config: &ExperimentConfig) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(file, "# seed: {}", config.seed)?;
        writeln!(file, "# config: {}", serde_json::to_string(config)?)?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(["n", "index", "quantity", "value"])?;
        for (n, i, q, v) in &self.rows {
            writer.write_record([n.to_string(), i.to_string(), q.clone(), format!("{v:e}")])?;
        }
        writer.flush()?;
        Ok(())
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<MonteCarloSummary> {
    run_experiment_with_samples(config).map(|(summary, _)| summary)
}

/// Runs the experiment and also returns the per-sample values it was built from.
pub fn run_experiment_with_samples(config: &ExperimentConfig) -> Result<(MonteCarloSummary, SampleTable)> {
    config.validate()?;
    let f = make_family(&config.family()?)?;
    let mut table = SampleTable::default();
    let mut records = Vec::with_capacity(config.n.len());
    for &n in &config.n {
        let record = match config.kind {
            ExperimentKind::VarianceCheck => variance_check(config, &f, n, &mut table)?,
            ExperimentKind::Clt => clt(config, &f, n, &mut table)?,
            ExperimentKind::LimitCompare => limit_compare(config, &f, n, &mut table)?,
            ExperimentKind::MomentIdentity => moment_identity(config, &f, n, &mut table)?,
            ExperimentKind::CumulantCheck => cumulant_check(config, &f, n, &mut table)?,
            ExperimentKind::LemmaSums => lemma_sums(config, &f, n)?,
            ExperimentKind::TruncatedMoments => truncated_moments(config, &f, n, &mut table)?,
        };
        records.push(record);
    }
    let checks = summary_checks(config, &records);
    let passed = records.iter().all(|r| {
        r.estimates.iter().all(|e| e.within != Some(false)) && r.ks.iter().all(|k| k.passed != Some(false))
    }) && checks.iter().all(|c| c.passed);
    let summary = MonteCarloSummary {
        kind: config.kind,
        seed: config.seed,
        config: config.clone(),
        records,
        checks,
        status: if passed { Status::Pass } else { Status::Fail },
    };
    Ok((summary, table))
}

/// Draws `config.samples` configurations of size `n` in parallel and maps
/// each through `observe`, returning results in sample order.
pub fn map_samples<T, F>(config: &ExperimentConfig, n: usize, observe: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&EigenvalueSample) -> Result<T> + Sync,
{
    let root = RootSeed(config.seed);
    let params = EnsembleParams::new(n, config.beta)?;
    let mcmc = config.mcmc_for(n);
    (0..config.samples as u64)
        .into_par_iter()
        .map_init(
            || None::<CueSampler>,
            |sampler, index| {
                let mut rng = root.stream(purpose::ENSEMBLE, n, index);
                let drawn = match config.sampler {
                    SamplerKind::Dpp => {
                        if sampler.is_none() {
                            *sampler = Some(CueSampler::new(n)?);
                        }
                        let angles = sampler.as_mut().expect("initialized above").sample_angles(&mut rng)?;
                        EigenvalueSample::new(
                            angles,
                            2.0,
                            Provenance { sampler: SamplerKind::Dpp, seed: None, stream: None },
                        )
                    }
                    SamplerKind::Mcmc => sample_cbe_mcmc(&params, &mcmc, &mut rng),
                };
                drawn
                    .and_then(|s| observe(&s.with_seed(config.seed, index)))
                    .map_err(|e| Error::Sample { index, source: Box::new(e) })
            },
        )
        .collect()
}

/// Draws of the exponential-sum law, one stream per draw.
pub fn map_limit_draws(config: &ExperimentConfig, n: usize, spec: &LimitLawSpec, count: usize) -> Vec<f64> {
    let root = RootSeed(config.seed);
    (0..count as u64)
        .into_par_iter()
        .map(|i| spec.sample(&mut root.stream(purpose::LIMIT_LAW, n, i)))
        .collect()
}

fn banded(name: &str, (value, stderr): (f64, f64), reference: Option<f64>, band: f64) -> Estimate {
    Estimate {
        name: name.into(),
        value,
        value_im: None,
        stderr,
        within: reference.map(|r| (value - r).abs() <= band * stderr),
        reference,
    }
}

fn ks_entry(name: &str, distance: f64, threshold: Option<f64>) -> KsEntry {
    KsEntry { name: name.into(), distance, threshold, passed: threshold.map(|t| distance < t) }
}

fn record(config: &ExperimentConfig, f: &TestFunction, n: usize) -> NRecord {
    let k = config.truncation(n);
    NRecord {
        n,
        k,
        samples: config.samples,
        v_n: f.v_n(n),
        truncation_tail_bound: match f.support() {
            Some(s) if s <= k => Some(0.0),
            _ => f.tail_abs_bound(k).map(|b| 2.0 * b),
        },
        reference_remainder_bound: None,
        m: None,
        estimates: Vec::new(),
        ks: Vec::new(),
        notes: if n == 1 { vec!["N = 1: S_N is the empty sum 0".into()] } else { Vec::new() },
    }
}

/// Exact variance of `S_N(f_K)`.
fn exact_variance(f: &TestFunction, n: usize, k: usize) -> Result<(f64, Option<f64>)> {
    let v = variance_exact(&f.truncated(k), n, k.max(n))?;
    Ok((v.total, v.remainder_bound))
}

fn pair_statistics(config: &ExperimentConfig, f: &TestFunction, n: usize, k: usize) -> Result<Vec<f64>> {
    map_samples(config, n, |s| pair_statistic_spectral(&power_traces(s, k), f, k))
}

fn variance_check(config: &ExperimentConfig, f: &TestFunction, n: usize, table: &mut SampleTable) -> Result<NRecord> {
    let mut rec = record(config, f, n);
    let k = rec.k;
    let values = pair_statistics(config, f, n, k)?;
    table.push_series(n, "s_n", &values);
    let (var, bound) = exact_variance(f, n, k)?;
    rec.reference_remainder_bound = bound;
    let band = config.se_band;
    rec.estimates.push(banded("mean", mean_with_se(&values)?, Some(expected_pair_statistic(f, n, k)), band));
    rec.estimates.push(banded("variance", empirical_cumulant(&values, 2)?, Some(var), band));
    Ok(rec)
}

fn clt(config: &ExperimentConfig, f: &TestFunction, n: usize, table: &mut SampleTable) -> Result<NRecord> {
    let mut rec = record(config, f, n);
    let k = rec.k;
    if rec.v_n == 0.0 {
        return Err(Error::ZeroVariance(n));
    }
    let scale = (2.0 * rec.v_n).sqrt();
    let mean = expected_pair_statistic(f, n, k);
    let values: Vec<f64> = pair_statistics(config, f, n, k)?.into_iter().map(|s| (s - mean) / scale).collect();
    table.push_series(n, "normalized", &values);
    let band = config.se_band;
    let (var, bound) = if n >= 2 { exact_variance(f, n, k)? } else { (0.0, Some(0.0)) };
    rec.reference_remainder_bound = bound.map(|b| b / (scale * scale));
    rec.estimates.push(banded("mean", mean_with_se(&values)?, Some(0.0), band));
    rec.estimates.push(banded("variance", empirical_cumulant(&values, 2)?, Some(var / (scale * scale)), band));
    rec.estimates.push(banded("cumulant3", empirical_cumulant(&values, 3)?, None, band));
    rec.estimates.push(banded("cumulant4", empirical_cumulant(&values, 4)?, None, band));
    rec.ks.push(ks_entry("standard-normal", ks_distance(&values, standard_normal_cdf)?, config.ks_threshold));
    Ok(rec)
}

fn limit_compare(config: &ExperimentConfig, f: &TestFunction, n: usize, table: &mut SampleTable) -> Result<NRecord> {
    let mut rec = record(config, f, n);
    let k = rec.k;
    let mean = expected_pair_statistic(f, n, k);
    let centered: Vec<f64> = pair_statistics(config, f, n, k)?.into_iter().map(|s| s - mean).collect();
    let spec = LimitLawSpec::cue(f, k)?;
    let draws = map_limit_draws(config, n, &spec, config.limit_draws());
    table.push_series(n, "centered", &centered);
    table.push_series(n, "limit_law", &draws);
    let band = config.se_band;
    let (var, bound) = if n >= 2 { exact_variance(f, n, k)? } else { (0.0, Some(0.0)) };
    rec.reference_remainder_bound = bound;
    rec.estimates.push(banded("mean", mean_with_se(&centered)?, Some(0.0), band));
    rec.estimates.push(banded("variance", empirical_cumulant(&centered, 2)?, Some(var), band));
    rec.estimates.push(banded("cumulant3", empirical_cumulant(&centered, 3)?, None, band));
    for m in 1..=3 {
        rec.estimates.push(banded(
            &format!("limit_cumulant{m}"),
            empirical_cumulant(&draws, m)?,
            Some(spec.cumulant(m)?),
            band,
        ));
    }
    let two_sample = ks_two_sample(&centered, &draws)?;
    let fitted = ks_to_fitted_normal(&centered)?;
    rec.ks.push(ks_entry("limit-law", two_sample, config.ks_threshold));
    rec.ks.push(ks_entry("fitted-normal", fitted, None));
    Ok(rec)
}

fn moment_identity(config: &ExperimentConfig, f: &TestFunction, n: usize, table: &mut SampleTable) -> Result<NRecord> {
    let mut rec = record(config, f, n);
    let ks: Vec<u64> = config.ks.iter().map(|&k| k as u64).collect();
    let k_max = *ks.iter().max().expect("validated nonempty") as usize;
    let values = map_samples(config, n, |s| {
        let t = power_traces(s, k_max);
        Ok(ks.iter().map(|&k| t.abs_sq(k as usize)).product::<f64>())
    })?;
    table.push_series(n, "product", &values);
    let reference = match moment_identity_rhs(&ks, n) {
        Ok(v) => Some(v),
        Err(Error::IdentityNotGuaranteed { .. }) => {
            rec.notes.push(format!("2 * sum(ks) exceeds N = {n}; no reference"));
            None
        }
        Err(e) => return Err(e),
    };
    rec.estimates.push(banded("moment", mean_with_se(&values)?, reference, config.se_band));
    Ok(rec)
}

fn cumulant_check(config: &ExperimentConfig, f: &TestFunction, n: usize, table: &mut SampleTable) -> Result<NRecord> {
    let mut rec = record(config, f, n);
    let k_max = config.ks.iter().map(|k| k.unsigned_abs() as usize).max().expect("validated nonempty");
    let traces: Vec<PowerTraces> = map_samples(config, n, |s| Ok(power_traces(s, k_max)))?;
    let band = config.se_band;
    let mut distinct: Vec<usize> = config.ks.iter().map(|k| k.unsigned_abs() as usize).collect();
    distinct.sort_unstable();
    distinct.dedup();
    for k in distinct {
        let values: Vec<f64> = traces.iter().map(|t| t.abs_sq(k)).collect();
        table.push_series(n, &format!("abs_sq_t{k}"), &values);
        rec.estimates.push(banded(&format!("mean_abs_sq_t{k}"), mean_with_se(&values)?, Some(k.min(n) as f64), band));
    }
    let (z, se) = empirical_joint_cumulant(&traces, &config.ks)?;
    let reference = joint_cumulant_exact(&config.ks, n)?;
    if reference.is_none() {
        rec.notes.push("joint cumulant undetermined for this index set".into());
    }
    // Known cumulants are real; the band applies to the modulus of the error.
    rec.estimates.push(Estimate {
        name: "joint_cumulant".into(),
        value: z.re,
        value_im: Some(z.im),
        stderr: se,
        reference,
        within: reference.map(|r| (z - r).norm() <= band * se),
    });
    Ok(rec)
}

fn lemma_sums(config: &ExperimentConfig, f: &TestFunction, n: usize) -> Result<NRecord> {
    let mut rec = record(config, f, n);
    rec.samples = 0;
    let sums = lemma21_sums(f, n, config.tail_cutoff(n))?;
    rec.reference_remainder_bound = sums.third_remainder;
    let v = rec.v_n;
    for (name, value) in [("sum_i", sums.first), ("sum_ii", sums.second), ("sum_iii", sums.third)] {
        rec.estimates.push(banded(name, (value, 0.0), None, config.se_band));
        if v > 0.0 {
            rec.estimates.push(banded(&format!("{name}_over_v_n"), (value / v, 0.0), None, config.se_band));
        }
    }
    Ok(rec)
}

fn truncated_moments(config: &ExperimentConfig, f: &TestFunction, n: usize, table: &mut SampleTable) -> Result<NRecord> {
    let mut rec = record(config, f, n);
    let m_n = match config.m_override {
        Some(m) => m,
        None => mn_schedule(f, n, config.delta)?,
    };
    rec.m = Some(m_n);
    let cutoff = n / m_n;
    let order = config.moment_order;
    if 2 * order as usize >= m_n {
        rec.notes.push(format!("moment order {order} does not satisfy m < M/2 with M = {m_n}"));
    }
    if cutoff == 0 {
        rec.notes.push("cutoff floor(N/M) = 0: both models are identically zero".into());
        return Ok(rec);
    }
    let trace_sum = map_samples(config, n, |s| {
        let t = power_traces(s, cutoff);
        let terms: Vec<f64> = (1..=cutoff).map(|k| f.fhat(k) * (t.abs_sq(k) - k.min(n) as f64)).collect();
        Ok(2.0 * terms.iter().sum::<f64>())
    })?;
    let spec = LimitLawSpec::cue(f, cutoff)?;
    let draws = map_limit_draws(config, n, &spec, config.limit_draws());
    table.push_series(n, "trace_sum", &trace_sum);
    table.push_series(n, "exp_sum", &draws);
    let (a, sa) = central_moment(&trace_sum, order)?;
    let (b, sb) = central_moment(&draws, order)?;
    let band = config.se_band;
    let exact_exp = if (2..=3).contains(&order) { Some(spec.cumulant(order)?) } else { None };
    rec.estimates.push(banded(&format!("trace_sum_moment{order}"), (a, sa), None, band));
    rec.estimates.push(banded(&format!("exp_sum_moment{order}"), (b, sb), exact_exp, band));
    let joint = (sa * sa + sb * sb).sqrt();
    rec.estimates.push(Estimate {
        name: "moment_difference".into(),
        value: a - b,
        value_im: None,
        stderr: joint,
        reference: Some(0.0),
        within: Some((a - b).abs() <= band * joint),
    });
    Ok(rec)
}

fn summary_checks(config: &ExperimentConfig, records: &[NRecord]) -> Vec<Check> {
    let mut checks = Vec::new();
    match config.kind {
        ExperimentKind::Clt if records.len() > 1 => {
            let d: Vec<f64> = records.iter().filter_map(|r| r.ks.first().map(|k| k.distance)).collect();
            checks.push(Check {
                name: "ks-non-increasing".into(),
                passed: d.windows(2).all(|w| w[1] <= w[0]),
                detail: format!("{d:?}"),
            });
        }
        ExperimentKind::LimitCompare => {
            for r in records {
                let (limit, fitted) = (r.ks[0].distance, r.ks[1].distance);
                checks.push(Check {
                    name: format!("non-gaussian-n{}", r.n),
                    passed: fitted > limit,
                    detail: format!("fitted-normal {fitted:.5} vs limit-law {limit:.5}"),
                });
            }
        }
        ExperimentKind::LemmaSums if records.len() > 1 => {
            for name in ["sum_i_over_v_n", "sum_ii_over_v_n", "sum_iii_over_v_n"] {
                let v: Vec<f64> = records
                    .iter()
                    .filter_map(|r| r.estimates.iter().find(|e| e.name == name).map(|e| e.value))
                    .collect();
                checks.push(Check {
                    name: format!("{name}-decreasing"),
                    passed: v.len() == records.len() && v.windows(2).all(|w| w[1] < w[0]),
                    detail: format!("{v:?}"),
                });
            }
        }
        ExperimentKind::TruncatedMoments => {
            for r in records {
                let m = r.m.unwrap_or(0);
                checks.push(Check {
                    name: format!("order-below-half-m-n{}", r.n),
                    passed: (config.moment_order as usize) * 2 < m,
                    detail: format!("m = {}, M = {m}", config.moment_order),
                });
            }
        }
        _ => {}
    }
    checks
}
