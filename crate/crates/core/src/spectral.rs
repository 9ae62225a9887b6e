//! Even real test functions on the circle, described by their Fourier
//! coefficients `fhat(k) = fhat(-k)`.
//!
//! Every statistic in the crate is evaluated against the truncated cosine
//! series
//!
//! ```text
//! f_K(x) = fhat(0) + 2 * sum_{k=1}^{K} fhat(k) cos(k x)
//! ```
//!
//! so identities between the direct and spectral routes hold exactly up to
//! rounding at every `K`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::summation::{pairwise_sum, sum_range};

/// A coefficient family, parsed from strings such as `power:1.5`,
/// `powerlog:1.5,0.5`, `coslist:1,0.5` or `file:coeffs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    /// `fhat(k) = |k|^-p` for `k != 0`, `fhat(0) = 0`.
    Power { p: f64 },
    /// `fhat(k) = |k|^-p * log(|k| + 1)^-q` for `k != 0`, `fhat(0) = 0`.
    PowerLog { p: f64, q: f64 },
    /// `f(x) = sum_k a_k cos(k x)`, i.e. `fhat(+-k) = a_k / 2`.
    CosList(Vec<f64>),
    /// CSV rows `k,fhat` with `k >= 0`.
    File(PathBuf),
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let fail = |reason: &str| Error::FamilySpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (name, args) = spec.split_once(':').ok_or_else(|| fail("expected `family:args`"))?;
        let numbers = || -> Result<Vec<f64>> {
            args.split(',')
                .map(|a| {
                    let v: f64 = a.trim().parse().map_err(|_| fail(&format!("`{a}` is not a number")))?;
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(fail("non-finite parameter"))
                    }
                })
                .collect()
        };
        match name.trim() {
            "power" => match numbers()?[..] {
                [p] if p >= 0.0 => Ok(Self::Power { p }),
                [_] => Err(fail("exponent must be >= 0")),
                _ => Err(fail("power takes exactly one exponent")),
            },
            "powerlog" => match numbers()?[..] {
                [p, q] if p >= 0.0 && q >= 0.0 => Ok(Self::PowerLog { p, q }),
                [_, _] => Err(fail("exponents must be >= 0")),
                _ => Err(fail("powerlog takes exactly two exponents")),
            },
            "coslist" => {
                let coeffs = numbers()?;
                if coeffs.is_empty() {
                    return Err(fail("coslist needs at least one coefficient"));
                }
                Ok(Self::CosList(coeffs))
            }
            "file" if !args.trim().is_empty() => Ok(Self::File(PathBuf::from(args.trim()))),
            "file" => Err(fail("missing path")),
            other => Err(fail(&format!("unknown family `{other}`"))),
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { p } => write!(f, "power:{p}"),
            Self::PowerLog { p, q } => write!(f, "powerlog:{p},{q}"),
            Self::CosList(a) => {
                let parts: Vec<String> = a.iter().map(|v| v.to_string()).collect();
                write!(f, "coslist:{}", parts.join(","))
            }
            Self::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Coefficients {
    Power { p: f64 },
    PowerLog { p: f64, q: f64 },
    /// `fhat(k)` for `k = 0..len`; zero beyond.
    Table(Vec<f64>),
}

/// An even real function on the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    coefficients: Coefficients,
    label: String,
}

/// Builds the test function described by `spec`.
pub fn make_family(spec: &FamilySpec) -> Result<TestFunction> {
    let coefficients = match spec {
        FamilySpec::Power { p } => Coefficients::Power { p: *p },
        FamilySpec::PowerLog { p, q } => Coefficients::PowerLog { p: *p, q: *q },
        FamilySpec::CosList(a) => {
            let mut table = Vec::with_capacity(a.len() + 1);
            table.push(0.0);
            table.extend(a.iter().map(|v| v / 2.0));
            Coefficients::Table(table)
        }
        FamilySpec::File(path) => Coefficients::Table(read_coefficient_file(path)?),
    };
    Ok(TestFunction { coefficients, label: spec.to_string() })
}

/// Reads `k,fhat` rows. A leading header row is skipped when its first field
/// is not an integer.
pub fn read_coefficient_file(path: &Path) -> Result<Vec<f64>> {
    let fail = |reason: String| Error::CoefficientFile { path: path.to_path_buf(), reason };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        if record.len() != 2 {
            return Err(fail(format!("row {}: expected 2 fields, found {}", line + 1, record.len())));
        }
        let k: i64 = match record[0].parse() {
            Ok(k) => k,
            Err(_) if line == 0 => continue,
            Err(_) => return Err(fail(format!("row {}: bad index `{}`", line + 1, &record[0]))),
        };
        if k < 0 {
            return Err(fail(format!("row {}: negative index {k}", line + 1)));
        }
        let value: f64 = record[1]
            .parse()
            .map_err(|_| fail(format!("row {}: bad coefficient `{}`", line + 1, &record[1])))?;
        if !value.is_finite() {
            return Err(fail(format!("row {}: non-finite coefficient", line + 1)));
        }
        rows.push((k as usize, value));
    }
    if rows.is_empty() {
        return Err(fail("no coefficient rows".into()));
    }
    let len = rows.iter().map(|&(k, _)| k).max().unwrap_or(0) + 1;
    let mut table = vec![0.0; len];
    let mut seen = vec![false; len];
    for (k, value) in rows {
        if std::mem::replace(&mut seen[k], true) {
            return Err(fail(format!("duplicate index {k}")));
        }
        table[k] = value;
    }
    Ok(table)
}

impl TestFunction {
    /// Finite coefficient table `fhat(0), fhat(1), ...`; zero beyond its end.
    pub fn from_coefficients(table: Vec<f64>) -> Result<Self> {
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        let label = format!("table[{}]", table.len());
        Ok(Self { coefficients: Coefficients::Table(table), label })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `fhat(k)`, with evenness applied.
    pub fn fourier_coeff(&self, k: i64) -> f64 {
        let k = k.unsigned_abs();
        match &self.coefficients {
            Coefficients::Power { p } => {
                if k == 0 {
                    0.0
                } else {
                    (k as f64).powf(-p)
                }
            }
            Coefficients::PowerLog { p, q } => {
                if k == 0 {
                    0.0
                } else {
                    let k = k as f64;
                    k.powf(-p) * (k + 1.0).ln().powf(-q)
                }
            }
            Coefficients::Table(t) => t.get(k as usize).copied().unwrap_or(0.0),
        }
    }

    /// `fhat(k)` for a nonnegative index.
    #[inline]
    pub fn fhat(&self, k: usize) -> f64 {
        self.fourier_coeff(k as i64)
    }

    /// Coefficients `fhat(0..=k_max)`.
    pub fn coefficients_up_to(&self, k_max: usize) -> Vec<f64> {
        (0..=k_max).map(|k| self.fhat(k)).collect()
    }

    /// Largest index with a possibly nonzero coefficient; `None` for
    /// infinite families.
    pub fn support(&self) -> Option<usize> {
        match &self.coefficients {
            Coefficients::Table(t) => Some(t.iter().rposition(|&v| v != 0.0).unwrap_or(0)),
            _ => None,
        }
    }

    /// The built-in closed-form families are nonnegative and non-increasing.
    pub fn is_monotone_family(&self) -> bool {
        !matches!(self.coefficients, Coefficients::Table(_))
    }

    /// The truncated function `f_K` as a finite table.
    pub fn truncated(&self, k: usize) -> TestFunction {
        TestFunction {
            coefficients: Coefficients::Table(self.coefficients_up_to(k)),
            label: format!("{}|K={k}", self.label),
        }
    }

    /// Truncated evaluation `f_K(x)`.
    pub fn evaluate(&self, x: f64, k: usize) -> f64 {
        let term = |j: usize| {
            if j == 0 {
                self.fhat(0)
            } else {
                2.0 * self.fhat(j) * (j as f64 * x).cos()
            }
        };
        sum_range(0..=k, term)
    }

    /// `f_K(0) = fhat(0) + 2 sum_{k<=K} fhat(k)`.
    pub fn value_at_zero(&self, k: usize) -> f64 {
        sum_range(0..=k, |j| if j == 0 { self.fhat(0) } else { 2.0 * self.fhat(j) })
    }

    /// `V_N = sum_{|k|<=N} k^2 fhat(k)^2 = 2 sum_{k=1}^N k^2 fhat(k)^2`.
    pub fn v_n(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        2.0 * sum_range(1..=n, |k| {
            let a = k as f64 * self.fhat(k);
            a * a
        })
    }

    /// Upper bound on `sum_{k>K} |fhat(k)|`, or `None` when no finite bound
    /// is available for the family.
    pub fn tail_abs_bound(&self, k: usize) -> Option<f64> {
        let k = k.max(1) as f64;
        match &self.coefficients {
            Coefficients::Power { p } if *p > 1.0 => Some(k.powf(1.0 - p) / (p - 1.0)),
            Coefficients::PowerLog { p, q } if *p > 1.0 => {
                Some((k + 2.0).ln().powf(-q) * k.powf(1.0 - p) / (p - 1.0))
            }
            Coefficients::Table(t) => {
                let start = (k as usize + 1).min(t.len());
                Some(pairwise_sum(&t[start..].iter().map(|v| v.abs()).collect::<Vec<_>>()))
            }
            _ => None,
        }
    }

    /// Upper bound on `sum_{k>K} fhat(k)^2`.
    pub fn tail_sq_bound(&self, k: usize) -> Option<f64> {
        let k = k.max(1) as f64;
        match &self.coefficients {
            Coefficients::Power { p } if *p > 0.5 => Some(k.powf(1.0 - 2.0 * p) / (2.0 * p - 1.0)),
            Coefficients::PowerLog { p, q } if *p > 0.5 => {
                Some((k + 2.0).ln().powf(-2.0 * q) * k.powf(1.0 - 2.0 * p) / (2.0 * p - 1.0))
            }
            Coefficients::Table(t) => {
                let start = (k as usize + 1).min(t.len());
                Some(pairwise_sum(&t[start..].iter().map(|v| v * v).collect::<Vec<_>>()))
            }
            _ => None,
        }
    }
}

/// `V_{floor(lambda N)} / V_N`. A diagnostic for slow variation, not a test.
pub fn karamata_ratio(f: &TestFunction, n: usize, lambda: f64) -> Result<f64> {
    if n == 0 || !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("need N >= 1 and lambda > 0, got N = {n}, lambda = {lambda}")));
    }
    let scaled = (lambda * n as f64).floor();
    if scaled < 1.0 {
        return Err(Error::InvalidParameter(format!("floor(lambda * N) = {scaled} < 1")));
    }
    let v_n = f.v_n(n);
    if v_n == 0.0 {
        return Err(Error::ZeroVariance(n));
    }
    Ok(f.v_n(scaled as usize) / v_n)
}

/// Smallest integer `c` with `c^4 >= n`.
pub fn fourth_root_ceil(n: usize) -> usize {
    let mut c = (n as f64).powf(0.25).floor() as usize;
    while c.pow(4) < n {
        c += 1;
    }
    while c > 1 && (c - 1).pow(4) >= n {
        c -= 1;
    }
    c.max(1)
}

/// The slowly growing split parameter `M_N`: the largest `M` in
/// `[2, ceil(N^{1/4})]` with `V_{NM} <= (1+delta) V_N` and
/// `V_N <= (1+delta) V_{floor(N/M)}`, or 2 when none qualifies.
pub fn mn_schedule(f: &TestFunction, n: usize, delta: f64) -> Result<usize> {
    if n < 4 || !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("need N >= 4 and delta > 0, got N = {n}, delta = {delta}")));
    }
    let cap = fourth_root_ceil(n).max(2);
    let v_n = f.v_n(n);
    let qualifies = |m: usize| f.v_n(n * m) <= (1.0 + delta) * v_n && v_n <= (1.0 + delta) * f.v_n(n / m);
    Ok((2..=cap).rev().find(|&m| qualifies(m)).unwrap_or(2))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::io::Write;

    use proptest::prelude::*;

    use super::*;

    fn family(spec: &str) -> TestFunction {
        make_family(&spec.parse().unwrap()).unwrap()
    }

    #[test]
    fn coslist_one_is_cosine() {
        let f = family("coslist:1");
        assert_eq!(f.fourier_coeff(1), 0.5);
        assert_eq!(f.fourier_coeff(-1), 0.5);
        assert_eq!(f.fourier_coeff(0), 0.0);
        assert_eq!(f.fourier_coeff(2), 0.0);
        assert!((f.evaluate(PI, 1) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn power_family_values() {
        let f = family("power:1.5");
        assert!((f.fourier_coeff(3) - 0.192_450_089_7).abs() < 1e-10);
        assert_eq!(f.fourier_coeff(4), 0.125);
        assert_eq!(f.fourier_coeff(0), 0.0);
    }

    #[test]
    fn powerlog_family_values() {
        let f = family("powerlog:2,1");
        assert!((f.fhat(3) - 1.0 / (9.0 * 4f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn file_source_matches_coslist() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "k,fhat\n0,0\n1,0.5").unwrap();
        let from_file = make_family(&FamilySpec::File(file.path().to_path_buf())).unwrap();
        let from_list = family("coslist:1");
        for k in -5..=5 {
            assert_eq!(from_file.fourier_coeff(k), from_list.fourier_coeff(k));
        }
        assert_eq!(from_file.evaluate(0.7, 3), from_list.evaluate(0.7, 3));
    }

    #[test]
    fn file_errors() {
        let write = |body: &str| {
            let mut file = tempfile::NamedTempFile::new().unwrap();
            write!(file, "{body}").unwrap();
            file
        };
        for body in ["0,0\n-1,0.5\n", "0,0\n1,inf\n", "0,0\n1,x\n", "0,1\n0,2\n", "", "0,1,2\n"] {
            let file = write(body);
            let err = make_family(&FamilySpec::File(file.path().to_path_buf()));
            assert!(matches!(err, Err(Error::CoefficientFile { .. })), "{body:?} -> {err:?}");
        }
        let missing = make_family(&FamilySpec::File("/nonexistent/coeffs.csv".into()));
        assert!(matches!(missing, Err(Error::CoefficientFile { .. })));
    }

    #[test]
    fn malformed_specs_rejected() {
        for spec in ["power", "power:", "power:a", "power:1,2", "power:-1", "powerlog:1", "coslist:", "file:", "gauss:1", "power:nan"] {
            assert!(spec.parse::<FamilySpec>().is_err(), "{spec}");
        }
    }

    #[test]
    fn spec_display_round_trips() {
        for spec in ["power:1.5", "powerlog:1.5,2", "coslist:1,0.5,-2", "file:a/b.csv"] {
            let parsed: FamilySpec = spec.parse().unwrap();
            assert_eq!(parsed.to_string(), spec);
            assert_eq!(parsed.to_string().parse::<FamilySpec>().unwrap(), parsed);
        }
    }

    #[test]
    fn evaluate_with_no_terms_is_constant_coefficient() {
        let f = TestFunction::from_coefficients(vec![0.25, 3.0]).unwrap();
        assert_eq!(f.evaluate(1.3, 0), 0.25);
    }

    #[test]
    fn evaluate_power_two_at_zero_is_partial_zeta() {
        let f = family("power:2");
        // Euler-Maclaurin partial sum of zeta(2) up to 10^4.
        let n = 1e4_f64;
        let partial = PI * PI / 6.0 - 1.0 / n + 1.0 / (2.0 * n * n) - 1.0 / (6.0 * n.powi(3));
        let value = f.evaluate(0.0, 10_000);
        assert!((value - 2.0 * partial).abs() < 1e-12, "{value}");
        assert!((value - 3.2896).abs() < 1e-4);
    }

    #[test]
    fn quadrature_recovers_coefficients() {
        let f = family("power:1.5");
        let k_trunc = 40;
        let nodes = 1 << 14;
        let values: Vec<f64> = (0..nodes)
            .map(|j| f.evaluate(2.0 * PI * j as f64 / nodes as f64, k_trunc))
            .collect();
        for k in [0_i64, 1, 2, 7, 40, 41] {
            let terms: Vec<f64> = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * (k as f64 * 2.0 * PI * j as f64 / nodes as f64).cos())
                .collect();
            let integral = pairwise_sum(&terms) / nodes as f64;
            let expected = if k.unsigned_abs() as usize <= k_trunc { f.fourier_coeff(k) } else { 0.0 };
            assert!((integral - expected).abs() < 1e-10, "k = {k}: {integral} vs {expected}");
        }
    }

    #[test]
    fn v_n_examples() {
        assert_eq!(family("coslist:2").v_n(5), 2.0);
        let h4 = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        assert!((family("power:1.5").v_n(4) - 2.0 * h4).abs() < 1e-14);
        assert!((family("power:1.5").v_n(4) - 25.0 / 6.0).abs() < 1e-14);
        assert_eq!(family("power:1").v_n(1000), 2000.0);
        assert_eq!(family("power:1.5").v_n(0), 0.0);
    }

    fn harmonic(n: f64) -> f64 {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        n.ln() + EULER_GAMMA + 1.0 / (2.0 * n) - 1.0 / (12.0 * n * n)
    }

    #[test]
    fn karamata_examples() {
        let f = family("power:1.5");
        assert_eq!(karamata_ratio(&f, 100, 1.0).unwrap(), 1.0);
        let n = 1usize << 20;
        let ratio = karamata_ratio(&f, n, 2.0).unwrap();
        let oracle = harmonic(2.0 * n as f64) / harmonic(n as f64);
        assert!((ratio - oracle).abs() < 1e-9, "{ratio} vs {oracle}");
        assert!((ratio - 1.048).abs() < 1e-3);
        let linear = karamata_ratio(&family("power:1"), n, 2.0).unwrap();
        assert_eq!(linear, 2.0);
    }

    #[test]
    fn karamata_errors() {
        let constant = TestFunction::from_coefficients(vec![1.0]).unwrap();
        assert!(matches!(karamata_ratio(&constant, 10, 2.0), Err(Error::ZeroVariance(10))));
        let f = family("power:1.5");
        assert!(karamata_ratio(&f, 10, 0.05).is_err());
        assert!(karamata_ratio(&f, 0, 1.0).is_err());
        assert!(karamata_ratio(&f, 10, -1.0).is_err());
    }

    #[test]
    fn fourth_root_ceiling() {
        assert_eq!(fourth_root_ceil(4), 2);
        assert_eq!(fourth_root_ceil(16), 2);
        assert_eq!(fourth_root_ceil(17), 3);
        assert_eq!(fourth_root_ceil(81), 3);
        assert_eq!(fourth_root_ceil(256), 4);
        assert_eq!(fourth_root_ceil(1 << 16), 16);
    }

    #[test]
    fn mn_schedule_examples() {
        let cosine = family("coslist:1");
        for n in [4, 17, 256, 10_000] {
            assert_eq!(mn_schedule(&cosine, n, 0.05).unwrap(), fourth_root_ceil(n).max(2));
        }
        assert_eq!(mn_schedule(&family("power:1"), 1 << 12, 0.05).unwrap(), 2);

        let f = family("power:1.5");
        let n = 1 << 16;
        let m = mn_schedule(&f, n, 0.05).unwrap();
        assert!((2..=fourth_root_ceil(n)).contains(&m));
        if m > 2 {
            assert!(f.v_n(n * m) <= 1.05 * f.v_n(n));
            assert!(f.v_n(n) <= 1.05 * f.v_n(n / m));
        }
        assert!(mn_schedule(&f, 3, 0.05).is_err());
    }

    #[test]
    fn tail_bounds_dominate_partial_tails() {
        let f = family("power:1.5");
        let k = 100;
        let tail_abs: f64 = (k + 1..2_000_000).map(|j| f.fhat(j)).sum();
        let tail_sq: f64 = (k + 1..2_000_000).map(|j| f.fhat(j).powi(2)).sum();
        assert!(tail_abs <= f.tail_abs_bound(k).unwrap());
        assert!(tail_sq <= f.tail_sq_bound(k).unwrap());
        assert_eq!(family("power:1").tail_abs_bound(k), None);
        assert_eq!(family("coslist:1,2,3").tail_abs_bound(2), Some(1.5));
        assert_eq!(family("coslist:1,2,3").tail_sq_bound(3), Some(0.0));
    }

    fn any_family() -> impl Strategy<Value = TestFunction> {
        prop_oneof![
            (0.5f64..3.0).prop_map(|p| make_family(&FamilySpec::Power { p }).unwrap()),
            (0.5f64..3.0, 0.0f64..2.0).prop_map(|(p, q)| make_family(&FamilySpec::PowerLog { p, q }).unwrap()),
            proptest::collection::vec(-2.0f64..2.0, 1..12)
                .prop_map(|a| make_family(&FamilySpec::CosList(a)).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn evenness(f in any_family(), k in -500i64..500) {
            prop_assert_eq!(f.fourier_coeff(k), f.fourier_coeff(-k));
        }

        #[test]
        fn v_n_monotone(f in any_family(), n in 0usize..300) {
            let (a, b) = (f.v_n(n), f.v_n(n + 1));
            prop_assert!(b >= a);
            prop_assert_eq!(a == b, f.fhat(n + 1) == 0.0);
        }

        #[test]
        fn truncation_step(f in any_family(), x in 0.0f64..(2.0 * PI), k in 1usize..200) {
            let step = f.evaluate(x, k) - f.evaluate(x, k - 1);
            let term = 2.0 * f.fhat(k) * (k as f64 * x).cos();
            prop_assert!((step - term).abs() <= 1e-12 * (1.0 + f.evaluate(x, k).abs()));
        }

        #[test]
        fn karamata_unit_lambda(f in any_family(), n in 1usize..1000) {
            if f.v_n(n) > 0.0 {
                prop_assert_eq!(karamata_ratio(&f, n, 1.0).unwrap(), 1.0);
            }
        }

        #[test]
        fn mn_schedule_satisfies_its_inequalities(f in any_family(), n in 4usize..5000) {
            let m = mn_schedule(&f, n, 0.05).unwrap();
            prop_assert!(m >= 2 && m <= fourth_root_ceil(n).max(2));
            let ok = f.v_n(n * m) <= 1.05 * f.v_n(n) && f.v_n(n) <= 1.05 * f.v_n(n / m);
            // M = 2 is also the fallback when nothing qualifies.
            prop_assert!(ok || m == 2);
        }

        #[test]
        fn built_in_families_non_increasing(p in 0.0f64..3.0, q in 0.0f64..2.0, k in 1usize..10_000) {
            let f = make_family(&FamilySpec::PowerLog { p, q }).unwrap();
            prop_assert!(f.fhat(k + 1) <= f.fhat(k));
            prop_assert!(f.fhat(k).is_finite());
        }
    }
}
