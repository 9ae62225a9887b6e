//! Statistical checks of the samplers and estimators against known laws.

use cue_pairstat::ensembles::{McmcParams, SamplerKind};
use cue_pairstat::exact::joint_cumulant_exact;
use cue_pairstat::montecarlo::{
    chi_square_uniform, empirical_joint_cumulant, ks_distance, map_samples, mean_with_se, ExperimentConfig,
    ExperimentKind,
};
use cue_pairstat::spectral::make_family;
use cue_pairstat::statistics::{expected_pair_statistic, pair_statistic_direct, power_traces, PowerTraces};

const TAU: f64 = std::f64::consts::TAU;

fn config(n: usize, samples: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(ExperimentKind::VarianceCheck, vec![n], "coslist:1", samples, seed)
}

fn within(values: &[f64], reference: f64, band: f64) -> (bool, f64, f64) {
    let (mean, se) = mean_with_se(values).unwrap();
    ((mean - reference).abs() <= band * se, mean, se)
}

#[test]
fn single_angle_is_uniform() {
    let angles = map_samples(&config(1, 100_000, 101), 1, |s| Ok(s.angles()[0])).unwrap();
    let d = ks_distance(&angles, |x| (x / TAU).clamp(0.0, 1.0)).unwrap();
    assert!(d < 0.005, "KS {d}");
}

#[test]
fn mean_abs_sq_trace() {
    let values = map_samples(&config(5, 100_000, 102), 5, |s| Ok(power_traces(s, 3).abs_sq(3))).unwrap();
    let (ok, mean, se) = within(&values, 3.0, 3.0);
    assert!(ok, "{mean} +- {se}");
}

#[test]
fn cosine_pair_mean() {
    let f = make_family(&"coslist:1".parse().unwrap()).unwrap();
    let values = map_samples(&config(2, 100_000, 103), 2, |s| Ok(pair_statistic_direct(s, &f, 1))).unwrap();
    let (ok, mean, se) = within(&values, -1.0, 3.0);
    assert!(ok, "{mean} +- {se}");
}

#[test]
fn power_family_mean_matches_expectation() {
    let f = make_family(&"power:1.5".parse().unwrap()).unwrap();
    let values = map_samples(&config(8, 100_000, 104), 8, |s| Ok(pair_statistic_direct(s, &f, 8))).unwrap();
    let (ok, mean, se) = within(&values, expected_pair_statistic(&f, 8, 8), 3.0);
    assert!(ok, "{mean} +- {se}");
}

#[test]
fn pooled_angles_pass_chi_square() {
    let angles: Vec<f64> =
        map_samples(&config(8, 20_000, 105), 8, |s| Ok(s.angles().to_vec())).unwrap().into_iter().flatten().collect();
    let (_, p) = chi_square_uniform(&angles, 64).unwrap();
    assert!(p > 1e-4, "p = {p}");
}

#[test]
fn mcmc_second_trace() {
    let mut c = config(8, 4000, 106);
    c.sampler = SamplerKind::Mcmc;
    c.mcmc = Some(McmcParams::defaults(8));
    let values = map_samples(&c, 8, |s| Ok(power_traces(s, 2).abs_sq(2))).unwrap();
    let (ok, mean, se) = within(&values, 2.0, 3.0);
    assert!(ok, "{mean} +- {se}");
}

#[test]
fn mcmc_at_beta_zero_is_uniform() {
    let mut c = config(6, 4000, 107);
    c.sampler = SamplerKind::Mcmc;
    c.beta = 0.0;
    let angles: Vec<f64> =
        map_samples(&c, 6, |s| Ok(s.angles().to_vec())).unwrap().into_iter().flatten().collect();
    let d = ks_distance(&angles, |x| (x / TAU).clamp(0.0, 1.0)).unwrap();
    assert!(d < 0.01, "KS {d}");
}

fn traces(n: usize, k_max: usize, samples: usize, seed: u64) -> Vec<PowerTraces> {
    map_samples(&config(n, samples, seed), n, |s| Ok(power_traces(s, k_max))).unwrap()
}

#[test]
fn joint_cumulant_examples() {
    for (ks, n, seed) in [(vec![1i64, -1], 5usize, 108u64), (vec![1, 1], 5, 109), (vec![1, 2, -3], 8, 110)] {
        let t = traces(n, 3, 50_000, seed);
        let (z, se) = empirical_joint_cumulant(&t, &ks).unwrap();
        let reference = joint_cumulant_exact(&ks, n).unwrap().unwrap();
        assert!((z - reference).norm() <= 4.0 * se, "{ks:?}: {z} vs {reference} (se {se})");
    }
}

#[test]
fn joint_cumulant_needs_enough_samples() {
    let t = traces(4, 2, 100, 111);
    assert!(empirical_joint_cumulant(&t, &[1, -1]).is_err());
    let t = traces(4, 2, 2000, 111);
    assert!(empirical_joint_cumulant(&t, &[1, 1, 1, 1, 1]).is_err());
}
