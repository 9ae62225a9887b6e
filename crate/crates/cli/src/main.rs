//! `pairstat`: sampling, exact formulas and Monte Carlo experiments for
//! pair-counting statistics of circular ensembles.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 an experiment ran and
//! was flagged FAIL.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cue_pairstat::ensembles::{sample_cbe_mcmc, sample_cue, EnsembleParams, McmcParams, SamplerKind};
use cue_pairstat::exact::{
    a_matrix_norm, default_k_tail, joint_cumulant_exact, lemma21_sums, moment_identity_rhs, r_operator_norm,
    variance_exact, variance_tail_exact,
};
use cue_pairstat::limit::LimitLawSpec;
use cue_pairstat::montecarlo::{
    empirical_cumulant, run_experiment_with_samples, ExperimentConfig, ExperimentKind,
};
use cue_pairstat::spectral::{karamata_ratio, make_family, mn_schedule, FamilySpec, TestFunction};
use cue_pairstat::statistics::expected_pair_statistic;
use cue_pairstat::stream::{purpose, RootSeed};
use cue_pairstat::Error;
use serde::Serialize;

const OUT_DIR_ENV: &str = "PAIRSTAT_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "pairstat", version, about = "Pair-counting statistics of circular random-matrix ensembles")]
struct Cli {
    /// Directory for emitted files.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw eigenvalue configurations and write them as CSV.
    Sample(SampleArgs),
    /// Exact expectation, variance, cumulant and moment queries.
    Exact(ExactArgs),
    /// Run a Monte Carlo experiment; writes summary JSON and per-sample CSV.
    Experiment(Box<ExperimentArgs>),
    /// Off-diagonal sums and operator norms as sweeps over N.
    Lemma(LemmaArgs),
    /// Draw from the exponential-sum limit law and tabulate its cumulants.
    Limit(LimitArgs),
    /// Sweep V_N, the slow-variation ratio and the M_N schedule.
    Karamata(KaramataArgs),
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    /// Number of eigenangles.
    #[arg(long)]
    n: usize,
    /// Ensemble parameter; the dpp sampler requires 2.
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Sampler.
    #[arg(long, value_enum, default_value_t = SamplerArg::Dpp)]
    sampler: SamplerArg,
    /// Root seed.
    #[arg(long)]
    seed: u64,
    /// Number of configurations.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[command(flatten)]
    mcmc: McmcArgs,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "samples.csv")]
    file: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SamplerArg {
    Dpp,
    Mcmc,
}

impl From<SamplerArg> for SamplerKind {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Dpp => SamplerKind::Dpp,
            SamplerArg::Mcmc => SamplerKind::Mcmc,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct McmcArgs {
    /// MCMC proposal half-width in radians [default: min(2 pi / N, pi)].
    #[arg(long)]
    proposal_width: Option<f64>,
    /// MCMC burn-in sweeps [default: 100 N].
    #[arg(long)]
    burn_in: Option<usize>,
    /// MCMC sweeps between retained configurations [default: 1].
    #[arg(long)]
    thinning: Option<usize>,
}

impl McmcArgs {
    fn any(&self) -> bool {
        self.proposal_width.is_some() || self.burn_in.is_some() || self.thinning.is_some()
    }

    fn resolve(&self, n: usize) -> McmcParams {
        let d = McmcParams::defaults(n);
        McmcParams {
            proposal_width: self.proposal_width.unwrap_or(d.proposal_width),
            burn_in_sweeps: self.burn_in.unwrap_or(d.burn_in_sweeps),
            thinning: self.thinning.unwrap_or(d.thinning),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExactWhat {
    /// The four-term variance breakdown of S_N(f_K).
    Variance,
    /// E S_N(f_K).
    Expectation,
    /// V_N.
    Vn,
    /// Variance of the modes above floor(N/M).
    TailVariance,
    /// Joint cumulant of the traces listed in --ks.
    Cumulant,
    /// E prod |t_k|^2 for the positive indices in --ks.
    Moment,
}

#[derive(Debug, Args)]
struct ExactArgs {
    /// Test-function family: power:p, powerlog:p,q, coslist:a1,a2,..., file:PATH.
    #[arg(long)]
    fhat: Option<String>,
    /// Matrix size N.
    #[arg(long)]
    n: usize,
    /// Quantity to compute.
    #[arg(long, value_enum)]
    what: ExactWhat,
    /// Truncation K of f [default: N].
    #[arg(long)]
    k: Option<usize>,
    /// Trace indices for cumulant and moment queries, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    ks: Vec<i64>,
    /// Split parameter M for tail-variance [default: the M_N schedule].
    #[arg(long)]
    m: Option<usize>,
    /// Tolerance of the M_N schedule.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON experiment config; replaces every other experiment flag.
    #[arg(long, conflicts_with_all = ["kind", "n", "samples", "seed"])]
    config: Option<PathBuf>,
    /// Experiment kind.
    #[arg(long, required_unless_present = "config")]
    kind: Option<KindArg>,
    /// Matrix sizes, comma separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "config")]
    n: Vec<usize>,
    /// Test-function family.
    #[arg(long, default_value = "power:1.5")]
    fhat: String,
    /// Truncation K of f [default: N].
    #[arg(long)]
    k: Option<usize>,
    /// Samples per N.
    #[arg(long, required_unless_present = "config")]
    samples: Option<usize>,
    /// Root seed.
    #[arg(long, required_unless_present = "config")]
    seed: Option<u64>,
    /// Ensemble parameter.
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Sampler.
    #[arg(long, value_enum, default_value_t = SamplerArg::Dpp)]
    sampler: SamplerArg,
    #[command(flatten)]
    mcmc: McmcArgs,
    /// Trace indices for moment-identity and cumulant-check, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    ks: Vec<i64>,
    /// Draws of the exponential-sum law [default: 10 x samples].
    #[arg(long)]
    limit_samples: Option<usize>,
    /// Tolerance of the M_N schedule.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Moment order for truncated-moments.
    #[arg(long, default_value_t = 3)]
    moment_order: u32,
    /// Fixed M for truncated-moments instead of the schedule.
    #[arg(long)]
    m_override: Option<usize>,
    /// Truncation of infinite tails in exact sums [default: 32 N].
    #[arg(long)]
    k_tail: Option<usize>,
    /// Acceptance band in standard errors.
    #[arg(long, default_value_t = 4.0)]
    se_band: f64,
    /// Largest acceptable KS distance.
    #[arg(long)]
    ks_threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Clt,
    LimitCompare,
    VarianceCheck,
    MomentIdentity,
    CumulantCheck,
    LemmaSums,
    TruncatedMoments,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Clt => ExperimentKind::Clt,
            KindArg::LimitCompare => ExperimentKind::LimitCompare,
            KindArg::VarianceCheck => ExperimentKind::VarianceCheck,
            KindArg::MomentIdentity => ExperimentKind::MomentIdentity,
            KindArg::CumulantCheck => ExperimentKind::CumulantCheck,
            KindArg::LemmaSums => ExperimentKind::LemmaSums,
            KindArg::TruncatedMoments => ExperimentKind::TruncatedMoments,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum LemmaWhat {
    /// The three off-diagonal sums, ratio against V_N.
    Sums,
    /// ||A_N||_op, ratio against the bound 3.
    ANorm,
    /// Operator and Hilbert-Schmidt norms of R_{N,j}.
    RNorm,
}

#[derive(Debug, Args, Serialize)]
struct LemmaArgs {
    /// Quantity to sweep.
    #[arg(long, value_enum, default_value_t = LemmaWhat::Sums)]
    what: LemmaWhat,
    /// Test-function family (sums only).
    #[arg(long, default_value = "power:1.5")]
    fhat: String,
    /// Matrix sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Block indices j for r-norm, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    j: Vec<usize>,
    /// Truncation of the infinite sum (iii) [default: 32 N].
    #[arg(long)]
    k_tail: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct LimitArgs {
    /// Test-function family.
    #[arg(long, default_value = "power:2")]
    fhat: String,
    /// Number of exponential terms K.
    #[arg(long)]
    k: usize,
    /// Number of draws.
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    /// Root seed.
    #[arg(long)]
    seed: u64,
    /// Ensemble parameter; the prefactor is 4 / beta.
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Also write the draws to this file inside the output directory.
    #[arg(long)]
    file: Option<String>,
}

#[derive(Debug, Args, Serialize)]
struct KaramataArgs {
    /// Test-function family.
    #[arg(long, default_value = "power:1.5")]
    fhat: String,
    /// Matrix sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Scale factor lambda in V_{floor(lambda N)} / V_N.
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    /// Tolerance of the M_N schedule.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

enum Outcome {
    Done,
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Sample(args) => sample(&cli.out_dir, &args),
        Command::Exact(args) => exact(&args),
        Command::Experiment(args) => experiment(&cli.out_dir, &args),
        Command::Lemma(args) => lemma(&cli.out_dir, &args),
        Command::Limit(args) => limit(&cli.out_dir, &args),
        Command::Karamata(args) => karamata(&cli.out_dir, &args),
    }
}

fn family(spec: Option<&str>) -> Result<TestFunction, Error> {
    let spec = spec.ok_or_else(|| Error::InvalidParameter("--fhat is required for this query".into()))?;
    make_family(&spec.parse::<FamilySpec>()?)
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// `# command` and `# config` header lines shared by every emitted CSV.
fn header(command: &str, config: &impl Serialize) -> Result<String, Error> {
    Ok(format!("# command: {command}\n# config: {}\n", serde_json::to_string(config)?))
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn sample(out: &Path, args: &SampleArgs) -> Result<Outcome, Error> {
    let params = EnsembleParams::new(args.n, args.beta)?;
    if args.sampler == SamplerArg::Dpp && !params.is_cue() {
        return Err(Error::InvalidParameter("the dpp sampler draws beta = 2 only".into()));
    }
    let mcmc = args.mcmc.resolve(args.n);
    mcmc.validate()?;
    create_dir(out)?;
    let root = RootSeed(args.seed);
    let mut text = header("sample", args)?;
    text.push_str("index");
    for j in 1..=args.n {
        write!(text, ",theta_{j}").expect("writing to a String");
    }
    text.push('\n');
    for i in 0..args.count as u64 {
        let mut rng = root.stream(purpose::ENSEMBLE, args.n, i);
        let s = match args.sampler {
            SamplerArg::Dpp => sample_cue(args.n, &mut rng),
            SamplerArg::Mcmc => sample_cbe_mcmc(&params, &mcmc, &mut rng),
        }
        .map_err(|e| Error::Sample { index: i, source: Box::new(e) })?;
        write!(text, "{i}").expect("writing to a String");
        for a in s.angles() {
            write!(text, ",{a:.16e}").expect("writing to a String");
        }
        text.push('\n');
    }
    write_file(&out.join(&args.file), &text)?;
    Ok(Outcome::Done)
}

fn exact(args: &ExactArgs) -> Result<Outcome, Error> {
    let n = args.n;
    let k = args.k.unwrap_or(n);
    let mut rows: Vec<(String, String)> = Vec::new();
    let num = |v: f64| format!("{v:?}");
    match args.what {
        ExactWhat::Variance => {
            let f = family(args.fhat.as_deref())?.truncated(k);
            let v = variance_exact(&f, n, k.max(n))?;
            rows.push(("term1".into(), num(v.term1)));
            rows.push(("term2".into(), num(v.term2)));
            rows.push(("term3".into(), num(v.term3)));
            rows.push(("term4".into(), num(v.term4)));
            rows.push(("total".into(), num(v.total)));
        }
        ExactWhat::Expectation => {
            let f = family(args.fhat.as_deref())?;
            rows.push(("expectation".into(), num(expected_pair_statistic(&f, n, k))));
        }
        ExactWhat::Vn => {
            let f = family(args.fhat.as_deref())?;
            rows.push(("v_n".into(), num(f.v_n(n))));
        }
        ExactWhat::TailVariance => {
            let f = family(args.fhat.as_deref())?;
            let m = match args.m {
                Some(m) => m,
                None => mn_schedule(&f, n, args.delta)?,
            };
            let k_tail = args.k.unwrap_or(default_k_tail(n));
            rows.push(("m".into(), m.to_string()));
            rows.push(("tail_variance".into(), num(variance_tail_exact(&f, n, m, k_tail)?)));
            rows.push(("v_n".into(), num(f.v_n(n))));
        }
        ExactWhat::Cumulant => {
            let value = joint_cumulant_exact(&args.ks, n)?;
            rows.push(("cumulant".into(), value.map(num).unwrap_or_else(|| "undetermined".into())));
        }
        ExactWhat::Moment => {
            let ks = args
                .ks
                .iter()
                .map(|&k| u64::try_from(k).map_err(|_| Error::InvalidParameter("moment indices must be positive".into())))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(("moment".into(), num(moment_identity_rhs(&ks, n)?)));
        }
    }
    let width = rows.iter().map(|(name, _)| name.len()).max().unwrap_or(0);
    for (name, value) in rows {
        println!("{name:<width$} = {value}");
    }
    Ok(Outcome::Done)
}

fn experiment(out: &Path, args: &ExperimentArgs) -> Result<Outcome, Error> {
    let config = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => {
            let mut c = ExperimentConfig::new(
                args.kind.expect("required by clap").into(),
                args.n.clone(),
                &args.fhat,
                args.samples.expect("required by clap"),
                args.seed.expect("required by clap"),
            );
            c.k = args.k;
            c.beta = args.beta;
            c.sampler = args.sampler.into();
            c.mcmc = args.mcmc.any().then(|| args.mcmc.resolve(*args.n.iter().max().unwrap_or(&1)));
            c.ks = args.ks.clone();
            c.limit_samples = args.limit_samples;
            c.delta = args.delta;
            c.moment_order = args.moment_order;
            c.m_override = args.m_override;
            c.k_tail = args.k_tail;
            c.se_band = args.se_band;
            c.ks_threshold = args.ks_threshold;
            c
        }
    };
    let (summary, table) = run_experiment_with_samples(&config)?;
    create_dir(out)?;
    let summary_path = config
        .outputs
        .summary
        .clone()
        .unwrap_or_else(|| out.join(format!("{}_summary.json", config.kind)));
    let csv_path = config
        .outputs
        .samples_csv
        .clone()
        .unwrap_or_else(|| out.join(format!("{}_samples.csv", config.kind)));
    summary.write_json(&summary_path)?;
    println!("wrote {}", summary_path.display());
    if !table.rows.is_empty() {
        table.write_csv(&csv_path, &config)?;
        println!("wrote {}", csv_path.display());
    }
    for record in &summary.records {
        for e in &record.estimates {
            let reference = e.reference.map(|r| format!("{r:.6}")).unwrap_or_else(|| "-".into());
            let flag = match e.within {
                Some(true) => "ok",
                Some(false) => "OUT",
                None => "",
            };
            println!("n={:<6} {:<24} {:>14.6} +- {:<10.3e} ref {:>12} {flag}", record.n, e.name, e.value, e.stderr, reference);
        }
        for k in &record.ks {
            println!("n={:<6} ks {:<21} {:>14.6}", record.n, k.name, k.distance);
        }
        for note in &record.notes {
            println!("n={:<6} note: {note}", record.n);
        }
    }
    for c in &summary.checks {
        println!("check {} {}: {}", c.name, if c.passed { "ok" } else { "FAILED" }, c.detail);
    }
    println!("status {}", summary.status);
    Ok(if summary.status.is_pass() { Outcome::Done } else { Outcome::Failed })
}

/// `(n, value, stderr, reference, ratio)`.
type SweepRow = (usize, f64, Option<f64>, Option<f64>, Option<f64>);

/// One `n,value,stderr,reference,ratio` sweep table.
#[derive(Default)]
struct Sweep {
    rows: Vec<SweepRow>,
}

impl Sweep {
    fn push(&mut self, n: usize, value: f64, reference: Option<f64>, ratio: Option<f64>) {
        self.rows.push((n, value, None, reference, ratio));
    }

    fn render(&self, head: &str) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut text = format!("{head}n,value,stderr,reference,ratio\n");
        for (n, value, stderr, reference, ratio) in &self.rows {
            writeln!(text, "{n},{value:e},{},{},{}", opt(*stderr), opt(*reference), opt(*ratio)).expect("writing to a String");
        }
        text
    }
}

fn lemma(out: &Path, args: &LemmaArgs) -> Result<Outcome, Error> {
    create_dir(out)?;
    let head = header("lemma", args)?;
    match args.what {
        LemmaWhat::Sums => {
            let f = family(Some(&args.fhat))?;
            let mut sweeps: [Sweep; 3] = Default::default();
            for &n in &args.n {
                let s = lemma21_sums(&f, n, args.k_tail.unwrap_or(default_k_tail(n)))?;
                let v = f.v_n(n);
                for (sweep, value) in sweeps.iter_mut().zip([s.first, s.second, s.third]) {
                    sweep.push(n, value, None, (v > 0.0).then(|| value / v));
                }
                println!("n={n:<8} (i) {:.6e}  (ii) {:.6e}  (iii) {:.6e}  V_N {v:.6e}", s.first, s.second, s.third);
            }
            for (sweep, name) in sweeps.iter().zip(["i", "ii", "iii"]) {
                write_file(&out.join(format!("lemma_sum_{name}.csv")), &sweep.render(&head))?;
            }
        }
        LemmaWhat::ANorm => {
            let mut sweep = Sweep::default();
            for &n in &args.n {
                let v = a_matrix_norm(n)?;
                sweep.push(n, v, Some(3.0), Some(v / 3.0));
                println!("n={n:<8} ||A_N||_op {v:.10}");
            }
            write_file(&out.join("a_norm.csv"), &sweep.render(&head))?;
        }
        LemmaWhat::RNorm => {
            for &j in &args.j {
                let (mut op, mut hs) = (Sweep::default(), Sweep::default());
                for &n in &args.n {
                    let r = r_operator_norm(n, j)?;
                    op.push(n, r.op, Some(r.hs), Some(r.op / r.hs));
                    hs.push(n, r.hs, Some(1.0 / j as f64), Some(r.hs * j as f64));
                    println!("n={n:<8} j={j:<4} op {:.10}  hs {:.10}  1/j {:.10}", r.op, r.hs, 1.0 / j as f64);
                }
                write_file(&out.join(format!("r_op_j{j}.csv")), &op.render(&head))?;
                write_file(&out.join(format!("r_hs_j{j}.csv")), &hs.render(&head))?;
            }
        }
    }
    Ok(Outcome::Done)
}

fn limit(out: &Path, args: &LimitArgs) -> Result<Outcome, Error> {
    let f = family(Some(&args.fhat))?;
    let spec = LimitLawSpec::with_beta(&f, args.k, args.beta)?;
    let root = RootSeed(args.seed);
    let draws: Vec<f64> =
        (0..args.draws as u64).map(|i| spec.sample(&mut root.stream(purpose::LIMIT_LAW, args.k, i))).collect();
    println!("{:<3} {:>16} {:>16} {:>12}", "m", "exact", "empirical", "stderr");
    for m in 1..=4 {
        let exact = spec.cumulant(m)?;
        match empirical_cumulant(&draws, m) {
            Ok((est, se)) => println!("{m:<3} {exact:>16.8} {est:>16.8} {se:>12.3e}"),
            Err(_) => println!("{m:<3} {exact:>16.8} {:>16} {:>12}", "-", "-"),
        }
    }
    if let Some(file) = &args.file {
        create_dir(out)?;
        let mut text = header("limit", args)?;
        text.push_str("index,value\n");
        for (i, v) in draws.iter().enumerate() {
            writeln!(text, "{i},{v:e}").expect("writing to a String");
        }
        write_file(&out.join(file), &text)?;
    }
    Ok(Outcome::Done)
}

fn karamata(out: &Path, args: &KaramataArgs) -> Result<Outcome, Error> {
    let f = family(Some(&args.fhat))?;
    create_dir(out)?;
    let mut sweep = Sweep::default();
    println!("{:<10} {:>16} {:>14} {:>6}", "n", "V_N", "ratio", "M_N");
    for &n in &args.n {
        let v = f.v_n(n);
        let ratio = karamata_ratio(&f, n, args.lambda)?;
        let m = if n >= 4 { mn_schedule(&f, n, args.delta)?.to_string() } else { "-".into() };
        sweep.push(n, v, None, Some(ratio));
        println!("{n:<10} {v:>16.8} {ratio:>14.8} {m:>6}");
    }
    write_file(&out.join("karamata.csv"), &sweep.render(&header("karamata", args)?))?;
    Ok(Outcome::Done)
}
