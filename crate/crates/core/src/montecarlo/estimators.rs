//! Estimators with standard errors: k-statistics (jackknife), central
//! moments (delta method), joint cumulants of traces (batch means), and
//! Kolmogorov-Smirnov / chi-square goodness of fit.

use rustfft::num_complex::Complex64;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::statistics::PowerTraces;
use crate::summation::{pairwise_sum, pairwise_sum_complex};

/// Batches used for joint-cumulant standard errors.
pub const JOINT_CUMULANT_BATCHES: usize = 32;
/// Fewest trace samples accepted by [`empirical_joint_cumulant`].
pub const JOINT_CUMULANT_MIN_SAMPLES: usize = 1000;

/// Sample mean and its standard error.
pub fn mean_with_se(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 1, got: samples.len() });
    }
    let (k2, _) = k_statistic(samples, 2)?;
    let mean = pairwise_sum(samples) / samples.len() as f64;
    Ok((mean, (k2.max(0.0) / samples.len() as f64).sqrt()))
}

/// Unbiased k-statistic `k_m` (`m <= 4`) with a jackknife standard error.
pub fn empirical_cumulant(samples: &[f64], m: u32) -> Result<(f64, f64)> {
    k_statistic(samples, m)
}

fn k_statistic(samples: &[f64], m: u32) -> Result<(f64, f64)> {
    if !(1..=4).contains(&m) {
        return Err(Error::InvalidParameter(format!("cumulant order must be in 1..=4, got {m}")));
    }
    let n = samples.len();
    if n <= m as usize {
        return Err(Error::InsufficientSamples { needed: m as usize, got: n });
    }
    // k-statistics of order >= 2 are shift invariant; centering keeps the
    // power sums well conditioned.
    let shift = pairwise_sum(samples) / n as f64;
    let centered: Vec<f64> = samples.iter().map(|x| x - shift).collect();
    let sums = PowerSums::of(&centered);
    let offset = if m == 1 { shift } else { 0.0 };
    let full = sums.k(m, n as f64) + offset;

    // Jackknife from power sums with one observation removed.
    let leave_out: Vec<f64> = centered.iter().map(|&x| sums.without(x).k(m, (n - 1) as f64)).collect();
    let mean_lo = pairwise_sum(&leave_out) / n as f64;
    let spread = pairwise_sum(&leave_out.iter().map(|v| (v - mean_lo).powi(2)).collect::<Vec<_>>());
    let se = ((n - 1) as f64 / n as f64 * spread).sqrt();
    Ok((full, se))
}

#[derive(Debug, Clone, Copy)]
struct PowerSums([f64; 4]);

impl PowerSums {
    fn of(x: &[f64]) -> Self {
        let mut s = [0.0; 4];
        for (r, slot) in s.iter_mut().enumerate() {
            let powers: Vec<f64> = x.iter().map(|v| v.powi(r as i32 + 1)).collect();
            *slot = pairwise_sum(&powers);
        }
        Self(s)
    }

    fn without(&self, x: f64) -> Self {
        let [s1, s2, s3, s4] = self.0;
        let x2 = x * x;
        Self([s1 - x, s2 - x2, s3 - x2 * x, s4 - x2 * x2])
    }

    fn k(&self, m: u32, n: f64) -> f64 {
        let [s1, s2, s3, s4] = self.0;
        match m {
            1 => s1 / n,
            2 => (n * s2 - s1 * s1) / (n * (n - 1.0)),
            3 => (2.0 * s1.powi(3) - 3.0 * n * s1 * s2 + n * n * s3) / (n * (n - 1.0) * (n - 2.0)),
            _ => {
                (-6.0 * s1.powi(4) + 12.0 * n * s1 * s1 * s2 - 3.0 * n * (n - 1.0) * s2 * s2
                    - 4.0 * n * (n + 1.0) * s1 * s3
                    + n * n * (n + 1.0) * s4)
                    / (n * (n - 1.0) * (n - 2.0) * (n - 3.0))
            }
        }
    }
}

/// `m`-th central moment with a delta-method standard error.
pub fn central_moment(samples: &[f64], m: u32) -> Result<(f64, f64)> {
    if m == 0 {
        return Err(Error::InvalidParameter("moment order must be >= 1".into()));
    }
    let n = samples.len();
    if n <= m as usize {
        return Err(Error::InsufficientSamples { needed: m as usize, got: n });
    }
    let mean = pairwise_sum(samples) / n as f64;
    let mu = |r: u32| -> f64 {
        if r == 0 {
            return 1.0;
        }
        pairwise_sum(&samples.iter().map(|x| (x - mean).powi(r as i32)).collect::<Vec<_>>()) / n as f64
    };
    let mf = m as f64;
    let (mu_m, mu_2m, mu_lo, mu_hi, mu_2) = (mu(m), mu(2 * m), mu(m - 1), mu(m + 1), mu(2));
    let var = mu_2m - mu_m * mu_m - 2.0 * mf * mu_lo * mu_hi + mf * mf * mu_2 * mu_lo * mu_lo;
    Ok((mu_m, (var.max(0.0) / n as f64).sqrt()))
}

/// Joint cumulant `kappa(t_{k_1}, ..., t_{k_n})` (`n <= 4`) by Moebius
/// inversion of plug-in moments over set partitions, with a standard error
/// from [`JOINT_CUMULANT_BATCHES`] batch means.
pub fn empirical_joint_cumulant(traces: &[PowerTraces], ks: &[i64]) -> Result<(Complex64, f64)> {
    if ks.is_empty() || ks.len() > 4 {
        return Err(Error::InvalidParameter(format!("joint cumulants of 1..=4 traces, got {}", ks.len())));
    }
    if traces.len() < JOINT_CUMULANT_MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: JOINT_CUMULANT_MIN_SAMPLES - 1, got: traces.len() });
    }
    let columns: Vec<Vec<Complex64>> = ks
        .iter()
        .map(|&k| {
            traces
                .iter()
                .map(|t| t.get(k).ok_or(Error::TraceRange { available: t.k_max(), required: k.unsigned_abs() as usize }))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let partitions = set_partitions(ks.len());
    let estimate = |range: std::ops::Range<usize>| -> Complex64 {
        let block_moment = |block: &[usize]| -> Complex64 {
            let products: Vec<Complex64> =
                range.clone().map(|i| block.iter().map(|&j| columns[j][i]).product()).collect();
            pairwise_sum_complex(&products) / range.len() as f64
        };
        partitions
            .iter()
            .map(|p| {
                let b = p.len();
                let weight = if b % 2 == 1 { 1.0 } else { -1.0 } * (1..b).map(|v| v as f64).product::<f64>();
                p.iter().map(|block| block_moment(block)).product::<Complex64>() * weight
            })
            .sum()
    };
    let total = traces.len();
    let full = estimate(0..total);
    let batches: Vec<Complex64> = (0..JOINT_CUMULANT_BATCHES)
        .map(|b| estimate(b * total / JOINT_CUMULANT_BATCHES..(b + 1) * total / JOINT_CUMULANT_BATCHES))
        .collect();
    let count = JOINT_CUMULANT_BATCHES as f64;
    let mean: Complex64 = batches.iter().sum::<Complex64>() / count;
    let spread: f64 = batches.iter().map(|z| (z - mean).norm_sqr()).sum();
    Ok((full, (spread / (count * (count - 1.0))).sqrt()))
}

/// All set partitions of `{0, ..., n-1}`.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![Vec::new()];
    for item in 0..n {
        let mut next = Vec::new();
        for p in &out {
            for b in 0..p.len() {
                let mut q: Vec<Vec<usize>> = p.clone();
                q[b].push(item);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![item]);
            next.push(q);
        }
        out = next;
    }
    out
}

/// `sup_x |F_n(x) - F(x)|`, checking both sides of every jump.
pub fn ks_distance<F>(samples: &[f64], cdf: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 0, got: 0 });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs())
    }))
}

/// Two-sample statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSamples { needed: 0, got: 0 });
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// KS distance to the normal law with the sample's own mean and standard deviation.
pub fn ks_to_fitted_normal(samples: &[f64]) -> Result<f64> {
    let (mean, _) = mean_with_se(samples)?;
    let (var, _) = k_statistic(samples, 2)?;
    let normal = Normal::new(mean, var.sqrt()).map_err(|e| Error::Degenerate(e.to_string()))?;
    ks_distance(samples, |x| normal.cdf(x))
}

/// Pearson chi-square test of uniformity on `[0, 2 pi)` with `bins` equal
/// bins. Returns `(statistic, p-value)`.
pub fn chi_square_uniform(angles: &[f64], bins: usize) -> Result<(f64, f64)> {
    if bins < 2 || angles.is_empty() {
        return Err(Error::InvalidParameter("chi-square needs >= 2 bins and some data".into()));
    }
    let mut counts = vec![0u64; bins];
    for &a in angles {
        let b = ((a / std::f64::consts::TAU) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let expected = angles.len() as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((bins - 1) as f64).map_err(|e| Error::Degenerate(e.to_string()))?;
    Ok((stat, dist.sf(stat)))
}
