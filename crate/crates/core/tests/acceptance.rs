//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Seeds, sample counts and thresholds live in `acceptance.toml`. Numeric
//! arguments select criteria (`cargo test --test acceptance -- 2 5`); any
//! other filter skips the suite so a filtered `cargo test` stays fast.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use cue_pairstat::ensembles::{sample_cue, McmcParams, SamplerKind};
use cue_pairstat::exact::{a_matrix_norm, default_k_tail, lemma21_sums, r_operator_norm};
use cue_pairstat::limit::exp_sum_mgf;
use cue_pairstat::montecarlo::{
    ks_distance, ks_two_sample, map_samples, run_experiment, ExperimentConfig, ExperimentKind, MonteCarloSummary,
};
use cue_pairstat::spectral::{make_family, mn_schedule, FamilySpec, TestFunction};
use cue_pairstat::statistics::{pair_statistic_direct, pair_statistic_spectral, power_traces};
use cue_pairstat::stream::{purpose, RootSeed};
use rand::Rng;
use serde::Deserialize;

#[derive(Deserialize)]
struct Manifest {
    expected_fail: Vec<u32>,
    identity: Identity,
    variance: Variance,
    traces: Traces,
    clt: Clt,
    limit: Limit,
    lemma: Lemma,
    operators: Operators,
    mgf: Mgf,
    samplers: Samplers,
    truncated: Truncated,
}

#[derive(Deserialize)]
struct Identity {
    seed: u64,
    configurations: usize,
    n: usize,
    k: usize,
    tolerance: f64,
}

#[derive(Deserialize)]
struct Variance {
    seed: u64,
    cos_n: usize,
    cos_samples: usize,
    power_n: usize,
    power_k: usize,
    power_samples: usize,
    se_band: f64,
}

#[derive(Deserialize)]
struct Traces {
    seed: u64,
    n: usize,
    samples: usize,
    abs_sq_ks: Vec<i64>,
    moment_ks: Vec<i64>,
    cumulant_ks: Vec<i64>,
    se_band: f64,
    cumulant_se_band: f64,
}

#[derive(Deserialize)]
struct Clt {
    seed: u64,
    fhat: String,
    n: Vec<usize>,
    samples: Vec<usize>,
    ks_threshold: f64,
}

#[derive(Deserialize)]
struct Limit {
    seed: u64,
    fhat: String,
    n: usize,
    samples: usize,
    limit_samples: usize,
    ks_threshold: f64,
}

#[derive(Deserialize)]
struct Lemma {
    fhat: String,
    n: Vec<usize>,
}

#[derive(Deserialize)]
struct Operators {
    a_max_n: usize,
    a_bound: f64,
    r_n: Vec<usize>,
    r_max_j: usize,
}

#[derive(Deserialize)]
struct Mgf {
    t: Vec<f64>,
    k: Vec<usize>,
    final_t: f64,
    final_gap: f64,
}

#[derive(Deserialize)]
struct Samplers {
    seed: u64,
    n: usize,
    samples: usize,
    two_sample_threshold: f64,
    uniform_threshold: f64,
}

#[derive(Deserialize)]
struct Truncated {
    seed: u64,
    fhat: String,
    n: usize,
    delta: f64,
    moment_order: u32,
    samples: usize,
    limit_samples: usize,
    se_band: f64,
}

type Outcome = Result<(bool, String), String>;

type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn family(spec: &str) -> Result<TestFunction, String> {
    spec.parse::<FamilySpec>().and_then(|s| make_family(&s)).map_err(|e| e.to_string())
}

fn run(config: &ExperimentConfig) -> Result<MonteCarloSummary, String> {
    run_experiment(config).map_err(|e| e.to_string())
}

/// `|value - reference| <= band * stderr` for a named estimate.
fn banded(summary: &MonteCarloSummary, n: usize, name: &str, band: f64) -> Result<(bool, String), String> {
    let e = summary.estimate(n, name).ok_or_else(|| format!("no estimate {name} at N = {n}"))?;
    let reference = e.reference.ok_or_else(|| format!("{name} has no reference"))?;
    let err = match e.value_im {
        Some(im) => (e.value - reference).hypot(im),
        None => (e.value - reference).abs(),
    };
    let ok = err <= band * e.stderr;
    Ok((ok, format!("{name} {:.5} vs {reference:.5} ({:.2} SE)", e.value, err / e.stderr)))
}

fn identity(m: &Identity) -> Outcome {
    let root = RootSeed(m.seed);
    let mut worst: f64 = 0.0;
    for i in 0..m.configurations as u64 {
        let mut rng = root.stream(purpose::SYNTHETIC, m.n, i);
        let sample = sample_cue(m.n, &mut rng).map_err(|e| e.to_string())?;
        let f = if i % 2 == 0 {
            family("power:1.5")?
        } else {
            let a: Vec<f64> = (0..m.k).map(|_| rng.random_range(-1.0..1.0)).collect();
            make_family(&FamilySpec::CosList(a)).map_err(|e| e.to_string())?
        };
        let direct = pair_statistic_direct(&sample, &f, m.k);
        let spectral =
            pair_statistic_spectral(&power_traces(&sample, m.k), &f, m.k).map_err(|e| e.to_string())?;
        worst = worst.max((direct - spectral).abs() / (1.0 + direct.abs()));
    }
    Ok((
        worst <= m.tolerance,
        format!("{} configurations at N = K = {}: max relative gap {worst:.2e}", m.configurations, m.n),
    ))
}

fn variance(m: &Variance) -> Outcome {
    let cos = run(&ExperimentConfig::new(
        ExperimentKind::VarianceCheck,
        vec![m.cos_n],
        "coslist:1",
        m.cos_samples,
        m.seed,
    ))?;
    let (ok_cos, cos_detail) = banded(&cos, m.cos_n, "variance", m.se_band)?;
    let mut config =
        ExperimentConfig::new(ExperimentKind::VarianceCheck, vec![m.power_n], "power:1.5", m.power_samples, m.seed);
    config.k = Some(m.power_k);
    let power = run(&config)?;
    let (ok_power, power_detail) = banded(&power, m.power_n, "variance", m.se_band)?;
    Ok((ok_cos && ok_power, format!("cos N={}: {cos_detail}; power:1.5 N={}: {power_detail}", m.cos_n, m.power_n)))
}

fn traces(m: &Traces) -> Outcome {
    let mut config = ExperimentConfig::new(ExperimentKind::CumulantCheck, vec![m.n], "coslist:1", m.samples, m.seed);
    config.ks = m.abs_sq_ks.clone();
    let abs_sq = run(&config)?;
    let mut ok = true;
    let mut details = Vec::new();
    for k in &m.abs_sq_ks {
        let (pass, detail) = banded(&abs_sq, m.n, &format!("mean_abs_sq_t{}", k.unsigned_abs()), m.se_band)?;
        ok &= pass;
        details.push(detail);
    }
    config.kind = ExperimentKind::MomentIdentity;
    config.ks = m.moment_ks.clone();
    let (pass, detail) = banded(&run(&config)?, m.n, "moment", m.se_band)?;
    ok &= pass;
    details.push(detail);
    config.kind = ExperimentKind::CumulantCheck;
    config.ks = m.cumulant_ks.clone();
    let (pass, detail) = banded(&run(&config)?, m.n, "joint_cumulant", m.cumulant_se_band)?;
    ok &= pass;
    details.push(detail);
    Ok((ok, details.join("; ")))
}

fn clt(m: &Clt) -> Outcome {
    let mut distances = Vec::new();
    for (&n, &samples) in m.n.iter().zip(&m.samples) {
        let summary = run(&ExperimentConfig::new(ExperimentKind::Clt, vec![n], &m.fhat, samples, m.seed))?;
        let entry = summary.ks_entry(n, "standard-normal").ok_or("no KS entry")?;
        distances.push(entry.distance);
    }
    let monotone = distances.windows(2).all(|w| w[1] <= w[0]);
    let last = *distances.last().ok_or("empty N sweep")?;
    let listed: Vec<String> = m.n.iter().zip(&distances).map(|(n, d)| format!("N={n}: {d:.4}")).collect();
    Ok((
        monotone && last < m.ks_threshold,
        format!(
            "KS {} ({}non-increasing, last {} {})",
            listed.join(", "),
            if monotone { "" } else { "not " },
            if last < m.ks_threshold { "<" } else { ">=" },
            m.ks_threshold
        ),
    ))
}

fn limit(m: &Limit) -> Outcome {
    let mut config = ExperimentConfig::new(ExperimentKind::LimitCompare, vec![m.n], &m.fhat, m.samples, m.seed);
    config.limit_samples = Some(m.limit_samples);
    let summary = run(&config)?;
    let law = summary.ks_entry(m.n, "limit-law").ok_or("no limit-law KS")?.distance;
    let normal = summary.ks_entry(m.n, "fitted-normal").ok_or("no fitted-normal KS")?.distance;
    Ok((
        law < m.ks_threshold && normal > law,
        format!("two-sample KS to limit law {law:.4} (< {}), KS to fitted normal {normal:.4}", m.ks_threshold),
    ))
}

fn lemma(m: &Lemma) -> Outcome {
    let f = family(&m.fhat)?;
    let mut ratios: Vec<[f64; 3]> = Vec::new();
    for &n in &m.n {
        let s = lemma21_sums(&f, n, default_k_tail(n)).map_err(|e| e.to_string())?;
        let v = f.v_n(n);
        ratios.push([s.first / v, s.second / v, s.third / v]);
    }
    let decreasing = (0..3).all(|i| ratios.windows(2).all(|w| w[1][i] < w[0][i]));
    let first = ratios.first().ok_or("empty N sweep")?;
    let last = ratios.last().ok_or("empty N sweep")?;
    Ok((
        decreasing,
        format!(
            "ratios to V_N from N={} to N={}: (i) {:.4} -> {:.4}, (ii) {:.4} -> {:.4}, (iii) {:.4} -> {:.4}",
            m.n[0],
            m.n[m.n.len() - 1],
            first[0],
            last[0],
            first[1],
            last[1],
            first[2],
            last[2]
        ),
    ))
}

fn operators(m: &Operators) -> Outcome {
    let mut largest: f64 = 0.0;
    for n in 1..=m.a_max_n {
        largest = largest.max(a_matrix_norm(n).map_err(|e| e.to_string())?);
    }
    let mut ok = largest <= m.a_bound;
    let mut worst_hs: f64 = 0.0;
    for &n in &m.r_n {
        for j in 1..=m.r_max_j {
            let r = r_operator_norm(n, j).map_err(|e| e.to_string())?;
            ok &= r.hs <= 1.0 / j as f64 && r.op <= r.hs;
            worst_hs = worst_hs.max(r.hs * j as f64);
        }
    }
    Ok((
        ok,
        format!("max ||A_N|| over N<={} is {largest:.6}; max j*HS(R_N,j) is {worst_hs:.6}", m.a_max_n),
    ))
}

fn mgf(m: &Mgf) -> Outcome {
    let mut ok = true;
    let mut final_gap = f64::NAN;
    for &t in &m.t {
        let target = (t * t / 2.0).exp();
        let mut gaps = Vec::new();
        for &k in &m.k {
            gaps.push((exp_sum_mgf(&vec![1.0; k], t).map_err(|e| e.to_string())? - target).abs());
        }
        ok &= gaps.windows(2).all(|w| w[1] < w[0]);
        if t == m.final_t {
            final_gap = *gaps.last().ok_or("empty K sweep")?;
        }
    }
    ok &= final_gap < m.final_gap;
    Ok((ok, format!("gaps shrink over K = {:?}; final gap at t = {} is {final_gap:.5}", m.k, m.final_t)))
}

fn samplers(m: &Samplers) -> Outcome {
    let abs_sq_t1 = |config: &ExperimentConfig| {
        map_samples(config, m.n, |s| Ok(power_traces(s, 1).abs_sq(1))).map_err(|e| e.to_string())
    };
    let mut config = ExperimentConfig::new(ExperimentKind::VarianceCheck, vec![m.n], "coslist:1", m.samples, m.seed);
    let dpp = abs_sq_t1(&config)?;
    config.sampler = SamplerKind::Mcmc;
    config.mcmc = Some(McmcParams::defaults(m.n));
    let mcmc = abs_sq_t1(&config)?;
    let cross = ks_two_sample(&dpp, &mcmc).map_err(|e| e.to_string())?;
    config.beta = 0.0;
    let angles: Vec<f64> = map_samples(&config, m.n, |s| Ok(s.angles().to_vec()))
        .map_err(|e| e.to_string())?
        .into_iter()
        .flatten()
        .collect();
    let two_pi = std::f64::consts::TAU;
    let uniform = ks_distance(&angles, |x| (x / two_pi).clamp(0.0, 1.0)).map_err(|e| e.to_string())?;
    Ok((
        cross < m.two_sample_threshold && uniform < m.uniform_threshold,
        format!(
            "DPP vs MCMC KS on |t_1|^2 {cross:.4} (< {}); beta=0 angles vs uniform KS {uniform:.4} (< {})",
            m.two_sample_threshold, m.uniform_threshold
        ),
    ))
}

fn truncated(m: &Truncated) -> Outcome {
    let f = family(&m.fhat)?;
    let schedule = mn_schedule(&f, m.n, m.delta).map_err(|e| e.to_string())?;
    let order = m.moment_order as usize;
    let precondition = 2 * order < schedule;
    let mut config = ExperimentConfig::new(ExperimentKind::TruncatedMoments, vec![m.n], &m.fhat, m.samples, m.seed);
    config.delta = m.delta;
    config.moment_order = m.moment_order;
    config.limit_samples = Some(m.limit_samples);
    config.se_band = m.se_band;
    let summary = run(&config)?;
    let (matched, detail) = banded(&summary, m.n, "moment_difference", m.se_band)?;
    Ok((
        precondition && matched,
        format!(
            "M = {schedule}, cutoff {}: m = {order} < M/2 {}; {detail}",
            m.n / schedule,
            if precondition { "holds" } else { "does not hold" }
        ),
    ))
}

fn main() -> ExitCode {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/acceptance.toml");
    let manifest: Manifest = match std::fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|text| {
        toml::from_str(&text).map_err(|e| e.to_string())
    }) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("cannot load {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    };

    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    if !args.is_empty() && selected.is_empty() {
        println!("acceptance: skipped (filter {args:?} names no criterion)");
        return ExitCode::SUCCESS;
    }

    let m = &manifest;
    let criteria: [Criterion; 10] = [
        (1, "direct and spectral pair statistics agree", Box::new(|| identity(&m.identity))),
        (2, "sampled variance matches the exact formula", Box::new(|| variance(&m.variance))),
        (3, "trace moments and cumulants", Box::new(|| traces(&m.traces))),
        (4, "CLT for power:1.5", Box::new(|| clt(&m.clt))),
        (5, "non-Gaussian limit for convergent V_N", Box::new(|| limit(&m.limit))),
        (6, "off-diagonal sums are o(V_N)", Box::new(|| lemma(&m.lemma))),
        (7, "operator norm bounds", Box::new(|| operators(&m.operators))),
        (8, "exponential-sum MGF tends to Gaussian", Box::new(|| mgf(&m.mgf))),
        (9, "sampler cross-validation", Box::new(|| samplers(&m.samplers))),
        (10, "truncated third moments match", Box::new(|| truncated(&m.truncated))),
    ];

    let mut unexpected = 0;
    let mut passed = 0;
    let mut ran = 0;
    for (id, title, check) in &criteria {
        if !selected.is_empty() && !selected.contains(id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (ok, detail) = match check() {
            Ok(outcome) => outcome,
            Err(e) => (false, format!("error: {e}")),
        };
        let expected_fail = m.expected_fail.contains(id);
        let note = match (ok, expected_fail) {
            (false, true) => " [expected]",
            (true, true) => " [unexpected pass]",
            _ => "",
        };
        if ok != !expected_fail {
            unexpected += 1;
        }
        passed += usize::from(ok);
        println!(
            "criterion {id:>2} {}{note}  {title}: {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{ran} passed, {unexpected} unexpected");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
