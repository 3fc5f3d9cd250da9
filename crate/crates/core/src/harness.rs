//! Seeded experiment runs, reports and audits behind the command-line tool.
//!
//! Every trial owns one oracle session seeded from `(master_seed, trial)`.
//! Generated universes are rebuilt per trial from the first draw of that
//! stream, so random generators vary across trials while a run stays a pure
//! function of its configuration. Rows are collected in trial order; running
//! trials in parallel never changes the bytes written.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracles::{exact_pmf, trial_rng, CondModel, OracleSession, QueryStats};
use crate::stats::{chi_square_gof, mean_and_stderr, ChiSquareResult};
use crate::sum_estimators::{
    estimate_sum_monotone, estimate_sum_unimodal, test_uniformity_amplified, valley_query_bound, SumParams,
    Verdict,
};
use crate::support_estimators::{estimate_support_size, SupportParams, SupportVariant};
use crate::universe::{exact_tv_distance, generate, GeneratorSpec, Interval, Universe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    SumMonotone,
    SumUnimodal,
    SupportSize,
    TestUniformity,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::SumMonotone => "sum-monotone",
            Algorithm::SumUnimodal => "sum-unimodal",
            Algorithm::SupportSize => "support-size",
            Algorithm::TestUniformity => "test-uniformity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniverseSource {
    Generator(#[serde(serialize_with = "display")] GeneratorSpec),
    File(PathBuf),
}

fn display<T: fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Optional replacements for the estimator constants.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Overrides {
    pub c_t: Option<f64>,
    pub c_u: Option<f64>,
    pub c_s: Option<f64>,
    pub c_r: Option<f64>,
    pub amplification: Option<usize>,
}

impl Overrides {
    pub fn sum_params(&self, epsilon: f64) -> Result<SumParams> {
        let p = SumParams::with_constants(
            epsilon,
            self.c_t.unwrap_or(crate::sum_estimators::DEFAULT_C_T),
            self.c_u.unwrap_or(crate::sum_estimators::DEFAULT_C_U),
        )?;
        match self.amplification {
            Some(r) => p.with_amplification(r),
            None => Ok(p),
        }
    }

    pub fn support_params(&self, epsilon: f64, n: usize, variant: SupportVariant) -> Result<SupportParams> {
        SupportParams::with_constants(epsilon, n, self.c_s.unwrap_or(1.0), self.c_r.unwrap_or(1.0), variant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub source: UniverseSource,
    /// Required with a generator; must match the file when given with one.
    pub n: Option<usize>,
    pub epsilon: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub variant: SupportVariant,
    pub overrides: Overrides,
    #[serde(skip)]
    pub parallel: bool,
    /// Fill `wall_ms`. Off by default because timings break byte-identical reports.
    #[serde(skip)]
    pub timing: bool,
}

impl RunConfig {
    pub fn new(
        algorithm: Algorithm,
        source: UniverseSource,
        n: Option<usize>,
        epsilon: f64,
        master_seed: u64,
    ) -> Self {
        RunConfig {
            algorithm,
            source,
            n,
            epsilon,
            trials: 1,
            master_seed,
            variant: SupportVariant::Union,
            overrides: Overrides::default(),
            parallel: false,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidEpsilon(self.epsilon));
        }
        if let UniverseSource::Generator(_) = self.source {
            match self.n {
                None => return Err(Error::Config("--n is required with a generator".into())),
                Some(0) => return Err(Error::Config("n must be at least 1".into())),
                Some(_) => {}
            }
        }
        match self.algorithm {
            Algorithm::SumMonotone | Algorithm::SumUnimodal | Algorithm::TestUniformity => {
                self.overrides.sum_params(self.epsilon)?;
            }
            Algorithm::SupportSize => {
                self.overrides.support_params(self.epsilon, self.n.unwrap_or(1), self.variant)?;
            }
        }
        Ok(())
    }

    /// Stable identifier of the configuration, shared by every row of a run.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a(canonical.as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// One line of a run report. Field order is the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub run_id: String,
    pub algorithm: String,
    pub variant: String,
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub estimate: f64,
    pub exact: f64,
    pub relative_error: Option<f64>,
    pub branch: String,
    pub weighted_cond_queries: u64,
    pub uniform_cond_queries: u64,
    pub eval_queries: u64,
    pub weighted_full_queries: u64,
    pub uniform_full_queries: u64,
    pub zero_mass_fallbacks: u64,
    pub wall_ms: Option<f64>,
}

pub const REPORT_HEADER: [&str; 17] = [
    "run_id",
    "algorithm",
    "variant",
    "n",
    "epsilon",
    "seed",
    "estimate",
    "exact",
    "relative_error",
    "branch",
    "weighted_cond_queries",
    "uniform_cond_queries",
    "eval_queries",
    "weighted_full_queries",
    "uniform_full_queries",
    "zero_mass_fallbacks",
    "wall_ms",
];

impl ReportRow {
    pub fn stats(&self) -> QueryStats {
        QueryStats {
            weighted_cond: self.weighted_cond_queries,
            uniform_cond: self.uniform_cond_queries,
            eval: self.eval_queries,
            weighted_full: self.weighted_full_queries,
            uniform_full: self.uniform_full_queries,
            zero_mass_fallbacks: self.zero_mass_fallbacks,
        }
    }
}

/// A report row plus checks that need more than the row itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub row: ReportRow,
    /// Query counters equal the closed-form budget of the estimator (for the
    /// unimodal search, stay within it).
    pub within_budget: bool,
    /// Estimate of the main loop alone, for the sum estimators.
    pub main_loop_value: Option<f64>,
}

pub fn run_trials(cfg: &RunConfig) -> Result<Vec<Trial>> {
    cfg.validate()?;
    let file_universe = match &cfg.source {
        UniverseSource::File(path) => {
            let u = Universe::load(path)?;
            if let Some(n) = cfg.n {
                if n != u.n() {
                    return Err(Error::Config(format!(
                        "--n {n} does not match universe file size {}",
                        u.n()
                    )));
                }
            }
            Some(u)
        }
        UniverseSource::Generator(_) => None,
    };
    let run_id = cfg.config_hash();
    let one = |t: usize| run_trial(cfg, &run_id, t, file_universe.as_ref());
    if cfg.parallel {
        (0..cfg.trials).into_par_iter().map(one).collect()
    } else {
        (0..cfg.trials).map(one).collect()
    }
}

fn run_trial(cfg: &RunConfig, run_id: &str, t: usize, file: Option<&Universe>) -> Result<Trial> {
    let mut rng = trial_rng(cfg.master_seed, t as u64);
    let owned;
    let u = match (file, &cfg.source) {
        (Some(u), _) => u,
        (None, UniverseSource::Generator(spec)) => {
            owned = generate(spec, cfg.n.expect("validated"), rng.gen())?;
            &owned
        }
        (None, UniverseSource::File(_)) => unreachable!("file universes are loaded up front"),
    };
    let start = Instant::now();
    let mut s = OracleSession::from_rng(u, rng);

    let (estimate, exact, branch, within_budget, main_loop_value) = match cfg.algorithm {
        Algorithm::SumMonotone => {
            let params = cfg.overrides.sum_params(cfg.epsilon)?;
            let e = estimate_sum_monotone(&mut s, &params)?;
            let ok = e.stats.conditional() == e.expected_conditional_queries()
                && e.stats.eval + e.stats.weighted_full + e.stats.uniform_full == 0;
            (e.value, u.exact_sum(), e.branch.to_string(), ok, Some(e.main_loop_value))
        }
        Algorithm::SumUnimodal => {
            let params = cfg.overrides.sum_params(cfg.epsilon)?;
            let e = estimate_sum_unimodal(&mut s, &params)?;
            let expected = e.left.expected_conditional_queries()
                + e.right.as_ref().map_or(0, |r| r.expected_conditional_queries());
            let ok = e.stats.conditional() == expected && e.stats.eval <= valley_query_bound(u.n());
            (e.value, u.exact_sum(), e.branch_label(), ok, Some(e.main_loop_value))
        }
        Algorithm::SupportSize => {
            let params = cfg.overrides.support_params(cfg.epsilon, u.n(), cfg.variant)?;
            let e = estimate_support_size(&mut s, &params)?;
            let ok = (e.stats.weighted_full, e.stats.uniform_full) == params.expected_queries()
                && e.stats.conditional() + e.stats.eval == 0;
            let branch = match cfg.variant {
                SupportVariant::Union => "cover-union",
                SupportVariant::Literal => "per-center-sum",
            };
            (e.value, u.exact_support() as f64, branch.to_string(), ok, None)
        }
        Algorithm::TestUniformity => {
            let params = cfg.overrides.sum_params(cfg.epsilon)?;
            let reps = params.amplification.unwrap_or(1);
            let v = test_uniformity_amplified(&mut s, u.full(), cfg.epsilon, params.t1, params.t2, reps)?;
            let stats = s.stats();
            let ok = stats.weighted_cond == (reps * params.t1) as u64
                && stats.uniform_cond == (reps * params.t2) as u64;
            let uniform = vec![1.0 / u.n() as f64; u.n()];
            let tv = exact_tv_distance(&u.distribution(), &uniform)?;
            let (est, branch) = match v {
                Verdict::Reject => (1.0, "reject"),
                Verdict::Accept => (0.0, "accept"),
            };
            (est, tv, branch.to_string(), ok, None)
        }
    };
    let wall_ms = cfg.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let stats = s.stats();
    let variant = match cfg.algorithm {
        Algorithm::SupportSize => cfg.variant.to_string(),
        _ => "none".to_string(),
    };
    let relative_error = match cfg.algorithm {
        Algorithm::TestUniformity => None,
        _ if exact > 0.0 => Some((estimate - exact).abs() / exact),
        _ => None,
    };
    let row = ReportRow {
        run_id: format!("{run_id}-{t}"),
        algorithm: cfg.algorithm.to_string(),
        variant,
        n: u.n(),
        epsilon: cfg.epsilon,
        seed: cfg.master_seed,
        estimate,
        exact,
        relative_error,
        branch,
        weighted_cond_queries: stats.weighted_cond,
        uniform_cond_queries: stats.uniform_cond,
        eval_queries: stats.eval,
        weighted_full_queries: stats.weighted_full,
        uniform_full_queries: stats.uniform_full,
        zero_mass_fallbacks: stats.zero_mass_fallbacks,
        wall_ms,
    };
    Ok(Trial { row, within_budget, main_loop_value })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandReport {
    pub name: String,
    pub lower: String,
    pub upper: String,
    pub hits: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub run_id: String,
    pub algorithm: Algorithm,
    pub source: UniverseSource,
    pub epsilon: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub mean_estimate: f64,
    pub stderr_estimate: f64,
    pub mean_exact: f64,
    pub mean_relative_error: Option<f64>,
    pub max_relative_error: Option<f64>,
    pub mean_conditional_queries: f64,
    pub bands: Vec<BandReport>,
    /// Fraction of trials that rejected, for the uniformity tester.
    pub reject_rate: Option<f64>,
    pub within_budget: usize,
}

impl Summary {
    pub fn band(&self, name: &str) -> Option<&BandReport> {
        self.bands.iter().find(|b| b.name == name)
    }
}

fn band(
    name: &str,
    lower: &str,
    upper: &str,
    rows: &[ReportRow],
    hit: impl Fn(&ReportRow) -> bool,
) -> BandReport {
    let hits = rows.iter().filter(|r| hit(r)).count();
    BandReport {
        name: name.into(),
        lower: lower.into(),
        upper: upper.into(),
        hits,
        rate: hits as f64 / rows.len() as f64,
    }
}

pub fn summarize(cfg: &RunConfig, trials: &[Trial]) -> Summary {
    let rows: Vec<ReportRow> = trials.iter().map(|t| t.row.clone()).collect();
    let estimates: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
    let (mean_estimate, stderr_estimate) = mean_and_stderr(&estimates);
    let mean_exact = rows.iter().map(|r| r.exact).sum::<f64>() / rows.len() as f64;
    let rel: Vec<f64> = rows.iter().filter_map(|r| r.relative_error).collect();
    let (mean_relative_error, max_relative_error) = if rel.is_empty() {
        (None, None)
    } else {
        (Some(rel.iter().sum::<f64>() / rel.len() as f64), Some(rel.iter().copied().fold(0.0, f64::max)))
    };
    let mean_conditional_queries =
        rows.iter().map(|r| r.stats().conditional() as f64).sum::<f64>() / rows.len() as f64;
    let e = cfg.epsilon;
    let bands = match cfg.algorithm {
        Algorithm::SumMonotone | Algorithm::SumUnimodal => vec![
            band("accuracy", "(1-2e)W <", "< (1+e)W", &rows, |r| {
                (1.0 - 2.0 * e) * r.exact < r.estimate && r.estimate < (1.0 + e) * r.exact
            }),
            band("shifted", "(1-2e)W <=", "<= (1-e)W", &rows, |r| {
                (1.0 - 2.0 * e) * r.exact <= r.estimate && r.estimate <= (1.0 - e) * r.exact
            }),
        ],
        Algorithm::SupportSize => vec![band("support", "k-2en <=", "<= k+en", &rows, |r| {
            let n = r.n as f64;
            r.exact - 2.0 * e * n <= r.estimate && r.estimate <= r.exact + e * n
        })],
        Algorithm::TestUniformity => Vec::new(),
    };
    let reject_rate = (cfg.algorithm == Algorithm::TestUniformity).then_some(mean_estimate);
    Summary {
        run_id: cfg.config_hash(),
        algorithm: cfg.algorithm,
        source: cfg.source.clone(),
        epsilon: e,
        trials: rows.len(),
        master_seed: cfg.master_seed,
        mean_estimate,
        stderr_estimate,
        mean_exact,
        mean_relative_error,
        max_relative_error,
        mean_conditional_queries,
        bands,
        reject_rate,
        within_budget: trials.iter().filter(|t| t.within_budget).count(),
    }
}

/// Writes `rows` to `out`, or to standard output when `out` is `None`.
pub fn write_rows<'a>(
    rows: impl IntoIterator<Item = &'a ReportRow>,
    out: Option<&Path>,
    format: Format,
) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    write_rows_to(rows, sink, format)
}

pub fn write_rows_to<'a, W: Write>(
    rows: impl IntoIterator<Item = &'a ReportRow>,
    sink: W,
    format: Format,
) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
            w.write_record(REPORT_HEADER)?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let rows: Vec<&ReportRow> = rows.into_iter().collect();
            let mut sink = sink;
            serde_json::to_writer_pretty(&mut sink, &rows)?;
            writeln!(sink)?;
            sink.flush()?;
        }
    }
    Ok(())
}

/// Path of the summary written next to a report: `<out>.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.json");
    PathBuf::from(s)
}

pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs `cfg` and writes rows plus the sidecar summary. Without `out` the rows
/// go to standard output and the summary to standard error.
pub fn run_and_report(cfg: &RunConfig, out: Option<&Path>, format: Format) -> Result<Summary> {
    let trials = run_trials(cfg)?;
    let summary = summarize(cfg, &trials);
    write_rows(trials.iter().map(|t| &t.row), out, format)?;
    match out {
        Some(p) => write_json(&summary, Some(&summary_path(p)))?,
        None => eprintln!("{}", serde_json::to_string_pretty(&summary)?),
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub grid_n: Vec<usize>,
    pub grid_epsilon: Vec<f64>,
    pub generator: GeneratorSpec,
    pub master_seed: u64,
    /// Run the unimodal estimator and check the valley search budget.
    pub unimodal: bool,
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditPoint {
    pub n: usize,
    pub epsilon: f64,
    pub conditional_queries: u64,
    pub expected_conditional_queries: u64,
    /// `(1/ε³) ln n`.
    pub log_term: f64,
    /// `1/ε⁶`.
    pub poly_term: f64,
    pub fitted: f64,
    pub ratio: f64,
    pub flagged: bool,
    pub eval_queries: u64,
    pub eval_bound: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub generator: String,
    pub a: f64,
    pub b: f64,
    pub points: Vec<AuditPoint>,
    pub flagged: usize,
    pub budgets_match: bool,
    pub eval_within_bound: Option<bool>,
}

pub const RATIO_RANGE: (f64, f64) = (0.5, 2.0);

/// Fits conditional-query counts over an `(n, ε)` grid to
/// `a·(1/ε³)·ln n + b·(1/ε⁶)`, minimising squared relative residuals, and
/// flags points whose measured/fitted ratio leaves `[0.5, 2]`.
pub fn audit_query_scaling(cfg: &AuditConfig) -> Result<AuditReport> {
    let mut ns = cfg.grid_n.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::Config(format!(
            "query audit needs at least 3 distinct n values, got {}",
            ns.len()
        )));
    }
    if cfg.grid_epsilon.is_empty() {
        return Err(Error::Config("query audit needs at least one epsilon".into()));
    }
    let mut raw = Vec::new();
    let mut budgets_match = true;
    let mut evals_ok = true;
    for (gi, &n) in cfg.grid_n.iter().enumerate() {
        for (gj, &eps) in cfg.grid_epsilon.iter().enumerate() {
            let params = cfg.overrides.sum_params(eps)?;
            let mut rng = trial_rng(cfg.master_seed, (gi * cfg.grid_epsilon.len() + gj) as u64);
            let u = generate(&cfg.generator, n, rng.gen())?;
            let mut s = OracleSession::from_rng(&u, rng);
            let (stats, expected, bound) = if cfg.unimodal {
                let e = estimate_sum_unimodal(&mut s, &params)?;
                let expected = e.left.expected_conditional_queries()
                    + e.right.as_ref().map_or(0, |r| r.expected_conditional_queries());
                (e.stats, expected, Some(valley_query_bound(n)))
            } else {
                let e = estimate_sum_monotone(&mut s, &params)?;
                (e.stats, e.expected_conditional_queries(), None)
            };
            budgets_match &= stats.conditional() == expected;
            if let Some(b) = bound {
                evals_ok &= stats.eval <= b;
            }
            let log_term = (n as f64).ln() / eps.powi(3);
            let poly_term = 1.0 / eps.powi(6);
            raw.push((n, eps, stats, expected, log_term, poly_term, bound));
        }
    }

    // Normal equations of min Σ (1 − (a·x + b·y)/q)².
    let (mut sxx, mut sxy, mut syy, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(_, _, stats, _, x, y, _) in &raw {
        let q = stats.conditional() as f64;
        let (x, y) = (x / q, y / q);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sx += x;
        sy += y;
    }
    let det = sxx * syy - sxy * sxy;
    if det.abs() <= f64::EPSILON * sxx * syy {
        return Err(Error::Config("query audit grid does not separate the two terms; vary epsilon".into()));
    }
    let a = (sx * syy - sy * sxy) / det;
    let b = (sy * sxx - sx * sxy) / det;

    let points: Vec<AuditPoint> = raw
        .into_iter()
        .map(|(n, epsilon, stats, expected, log_term, poly_term, eval_bound)| {
            let fitted = a * log_term + b * poly_term;
            let ratio = stats.conditional() as f64 / fitted;
            AuditPoint {
                n,
                epsilon,
                conditional_queries: stats.conditional(),
                expected_conditional_queries: expected,
                log_term,
                poly_term,
                fitted,
                ratio,
                flagged: !(RATIO_RANGE.0..=RATIO_RANGE.1).contains(&ratio),
                eval_queries: stats.eval,
                eval_bound,
            }
        })
        .collect();
    Ok(AuditReport {
        generator: cfg.generator.to_string(),
        a,
        b,
        flagged: points.iter().filter(|p| p.flagged).count(),
        points,
        budgets_match,
        eval_within_bound: cfg.unimodal.then_some(evals_ok),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheckConfig {
    /// Largest universe size; each universe draws its size from `2..=n`.
    pub n: usize,
    pub samples: usize,
    pub master_seed: u64,
    pub universes: usize,
    pub intervals: usize,
    pub significance: f64,
    pub allowed_failures: usize,
}

impl OracleCheckConfig {
    pub fn new(n: usize, samples: usize, master_seed: u64) -> Self {
        OracleCheckConfig {
            n,
            samples,
            master_seed,
            universes: 20,
            intervals: 5,
            significance: 0.01,
            allowed_failures: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccessModel {
    WeightedCond,
    UniformCond,
    WeightedFull,
    UniformFull,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub universe: usize,
    pub model: AccessModel,
    pub lo: usize,
    pub hi: usize,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub tests: usize,
    pub failures: usize,
    pub allowed_failures: usize,
    pub passed: bool,
    pub checks: Vec<OracleCheck>,
}

/// Chi-square test of `samples` draws from `draw` (indices within `iv`)
/// against `pmf` over `iv`.
pub fn check_sampler(
    iv: Interval,
    pmf: &[f64],
    samples: usize,
    mut draw: impl FnMut() -> usize,
) -> ChiSquareResult {
    let mut counts = vec![0u64; iv.len()];
    for _ in 0..samples {
        let i = draw();
        assert!(iv.contains(i), "sampler returned {i} outside {iv}");
        counts[i - iv.lo()] += 1;
    }
    chi_square_gof(&counts, pmf)
}

/// Random universe of 2 to `max_n` elements (1 when `max_n` is 1) for oracle
/// checks; about a fifth of the weights are zero.
fn check_universe(max_n: usize, rng: &mut impl Rng) -> Universe {
    let n = rng.gen_range(max_n.min(2)..=max_n);
    loop {
        let w: Vec<f64> =
            (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.1..10.0) }).collect();
        if let Ok(u) = Universe::new(w) {
            return u;
        }
    }
}

/// Tests all four access models on random universes and intervals.
pub fn verify_oracles(cfg: &OracleCheckConfig) -> Result<OracleSummary> {
    if cfg.n == 0 || cfg.samples == 0 || cfg.universes == 0 || cfg.intervals == 0 {
        return Err(Error::Config("oracle check needs positive n, samples, universes and intervals".into()));
    }
    let mut checks = Vec::new();
    for k in 0..cfg.universes {
        let mut rng = trial_rng(cfg.master_seed, k as u64);
        let u = check_universe(cfg.n, &mut rng);
        let full = u.full();
        let full_weighted = exact_pmf(&u, full, CondModel::WeightedCond)?;
        let full_uniform = exact_pmf(&u, full, CondModel::UniformCond)?;
        let mut s = OracleSession::new(&u, rng.gen());
        for _ in 0..cfg.intervals {
            let (a, b) = (rng.gen_range(1..=u.n()), rng.gen_range(1..=u.n()));
            let iv = Interval::span(a.min(b), a.max(b))?;
            let runs: [(AccessModel, Interval, &[f64]); 4] = [
                (AccessModel::WeightedCond, iv, &exact_pmf(&u, iv, CondModel::WeightedCond)?),
                (AccessModel::UniformCond, iv, &exact_pmf(&u, iv, CondModel::UniformCond)?),
                (AccessModel::WeightedFull, full, &full_weighted),
                (AccessModel::UniformFull, full, &full_uniform),
            ];
            for (model, set, pmf) in runs {
                let r = check_sampler(set, pmf, cfg.samples, || match model {
                    AccessModel::WeightedCond => s.weighted_cond_sample(set).expect("valid interval").index,
                    AccessModel::UniformCond => s.uniform_cond_sample(set).expect("valid interval").index,
                    AccessModel::WeightedFull => s.weighted_full_sample().index,
                    AccessModel::UniformFull => s.uniform_full_sample().index,
                });
                checks.push(OracleCheck {
                    universe: k,
                    model,
                    lo: set.lo(),
                    hi: set.hi(),
                    statistic: r.statistic,
                    df: r.df,
                    p_value: r.p_value,
                    passed: r.passes(cfg.significance),
                });
            }
        }
    }
    let failures = checks.iter().filter(|c| !c.passed).count();
    Ok(OracleSummary {
        tests: checks.len(),
        failures,
        allowed_failures: cfg.allowed_failures,
        passed: failures <= cfg.allowed_failures,
        checks,
    })
}
