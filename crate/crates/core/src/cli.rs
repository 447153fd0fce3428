//! Command-line front end: corpus analysis, coverage simulation, IID checks and
//! model comparison.
//!
//! Settings resolve as command-line flags over a TOML config file over the
//! default [`Schedule`].

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{
    extended_lb, frequency_ub, prior_lb_best, sampling_lb, BoundPoint, BoundsError, GuessingCurve, Kind, Method,
    ModelCurve, ModelGuessList, Target,
};
use crate::corpus::{load_corpus, Corpus, CorpusError, CorpusFormat, FrequencyEncoding};
use crate::meshlp::{check_iid_consistency, IidVerdict, LpBounder, MeshLpError, MicroLpSolver, SolverOptions};
use crate::oracle::{
    binomial_threshold, make_uniform, make_zipf, run_coverage, CoverageConfig, CoverageReport, OracleError,
};
use crate::schedule::{AuditEntry, Schedule, ScheduleError};

pub use crate::schedule::default_schedule;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "GUESSBOUND_THREADS";
pub const CSV_HEADER: [&str; 7] = ["g", "value", "raw_value", "kind", "method", "delta", "target"];

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    /// The sample is inconsistent with independent draws, or a coverage check failed.
    pub const NEGATIVE: i32 = 2;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Lp(#[from] MeshLpError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Config(String),
    #[error("cannot read config {path}: {message}")]
    ConfigFile { path: String, message: String },
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed curve CSV: {0}")]
    Csv(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Lp(MeshLpError::AllInfeasible { .. }) => exit::NEGATIVE,
            _ => exit::ERROR,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "guessbound", version, about = "High-confidence bounds on password guessing curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound the guessing curve of a password corpus over a grid of guess budgets.
    Analyze(AnalyzeArgs),
    /// Measure bound coverage on samples from a known distribution.
    Simulate(SimulateArgs),
    /// Test whether a corpus is consistent with independent sampling (exit 0 yes, 2 no).
    CheckIid(CheckIidArgs),
    /// Compare a cracking model's guess list with the sampling bounds.
    CompareModel(CompareModelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Distribution,
    Sample,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Distribution => Target::DistributionLambda,
            TargetArg::Sample => Target::SampleLambda,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Corpus file.
    #[arg(long)]
    pub input: PathBuf,
    /// plain (one password per line), counted (count TAB password) or counts_only.
    #[arg(long, default_value = "plain")]
    pub format: CorpusFormat,
}

/// Overrides of the default schedule.
#[derive(Debug, Clone, Default, Args)]
pub struct ScheduleArgs {
    /// TOML file with run settings and a `[schedule]` table.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mesh ratio.
    #[arg(long)]
    pub q: Option<f64>,
    /// Size of the held-out split.
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long, alias = "delta-1")]
    pub delta1: Option<f64>,
    #[arg(long, alias = "delta-3")]
    pub delta3: Option<f64>,
    /// Comma-separated band error probabilities, one per band.
    #[arg(long, alias = "delta-4", value_delimiter = ',')]
    pub delta4: Option<Vec<f64>>,
    /// Comma-separated x̂·N multipliers, one per band.
    #[arg(long, value_delimiter = ',')]
    pub xhat: Option<Vec<f64>>,
    /// Largest j tried by the prior bound.
    #[arg(long)]
    pub prior_j_max: Option<u64>,
    /// Largest accepted LP row violation.
    #[arg(long)]
    pub solver_tol: Option<f64>,
    /// Random seed for the sample split.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub out_format: OutFormat,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated methods: frequency_ub, sampling_lb, prior_lb, extended_lb, lp_lb, lp_ub.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Comma-separated guess budgets; defaults to powers of two up to 10⁴·N.
    #[arg(long)]
    pub g_grid: Option<String>,
    /// Guess list for extended_lb.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "distribution")]
    pub target: TargetArg,
    /// Write every LP instance to this directory.
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// `uniform:K` or `zipf:K:S`.
    #[arg(long)]
    pub dist: String,
    /// Sample size per trial.
    #[arg(long, default_value_t = 10_000)]
    pub n: u64,
    #[arg(long, default_value_t = 300)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "frequency_ub,sampling_lb,prior_lb")]
    pub methods: Vec<Method>,
    /// Guess budgets for the elementary bounds; defaults to powers of two up to 2¹⁸.
    #[arg(long)]
    pub g_grid: Option<String>,
    /// Guess budgets for the LP bounds; defaults to the main grid.
    #[arg(long)]
    pub lp_g_grid: Option<String>,
    /// Multipliers L for the prior bound at G = ceil(n·L).
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub prior_l: Vec<f64>,
    /// Per-trial bound values as CSV.
    #[arg(long)]
    pub traces: Option<PathBuf>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// JSON report; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckIidArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// JSON verdict; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareModelArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Guess list, one guess per line in guess order.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub g_grid: Option<String>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Settings that may come from a TOML config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub methods: Option<Vec<Method>>,
    pub g_grid: Option<Vec<u64>>,
    pub solver_tol: Option<f64>,
    pub schedule: Option<Schedule>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let err = |message: String| CliError::ConfigFile { path: path.display().to_string(), message };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        toml::from_str(&text).map_err(|e| err(e.to_string()))
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schedule: Schedule,
    pub seed: u64,
    pub methods: Option<Vec<Method>>,
    pub g_grid: Option<Vec<u64>>,
    pub solver: SolverOptions,
}

impl ScheduleArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let mut s = file.schedule.unwrap_or_default();
        if let Some(q) = self.q {
            s.q = q;
        }
        if let Some(d) = self.d {
            s.d = d;
        }
        if let Some(v) = self.delta1 {
            s.delta1 = v;
        }
        if let Some(v) = self.delta3 {
            s.delta3 = v;
        }
        if let Some(v) = &self.delta4 {
            s.delta4 = v.clone();
            s.i_max = v.len().saturating_sub(1);
        }
        if let Some(v) = &self.xhat {
            s.xhat3_multipliers = v.clone();
        }
        if let Some(j) = self.prior_j_max {
            s.prior_j_range.1 = j;
        }
        s.validate()?;
        let mut solver = SolverOptions::default();
        if let Some(tol) = self.solver_tol.or(file.solver_tol) {
            if !(tol > 0.0) {
                return Err(CliError::Config(format!("solver tolerance must be positive, got {tol}")));
            }
            solver.feasibility_tol = tol;
        }
        if let Some(grid) = &file.g_grid {
            check_grid(grid)?;
        }
        if file.methods.as_ref().is_some_and(|m| m.is_empty()) {
            return Err(CliError::Config("method list is empty".into()));
        }
        Ok(RunConfig {
            schedule: s,
            seed: self.seed.or(file.seed).unwrap_or(0),
            methods: file.methods,
            g_grid: file.g_grid,
            solver,
        })
    }
}

fn check_grid(grid: &[u64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::Config("guess grid is empty".into()));
    }
    if let Some(w) = grid.windows(2).find(|w| w[0] >= w[1]) {
        return Err(CliError::Config(format!("guess grid must be strictly increasing, got {} then {}", w[0], w[1])));
    }
    Ok(())
}

/// Parses `"1,10,1e6"`; the values must be integers and strictly increasing.
pub fn parse_grid(spec: &str) -> Result<Vec<u64>, CliError> {
    let grid = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u64>().or_else(|_| {
                let v: f64 = s.parse().map_err(|_| CliError::Config(format!("bad guess budget {s:?}")))?;
                if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
                    Ok(v as u64)
                } else {
                    Err(CliError::Config(format!("guess budget {s:?} is not a non-negative integer")))
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_grid(&grid)?;
    Ok(grid)
}

/// Powers of two from 1 up to `limit`.
pub fn pow2_grid(limit: u64) -> Vec<u64> {
    (0..64).map(|k| 1u64 << k).take_while(|&g| g <= limit.max(1)).collect()
}

/// Powers of two up to 10⁴·N, the reach of the mesh floor.
pub fn default_grid(n: u64) -> Vec<u64> {
    pow2_grid(n.saturating_mul(10_000))
}

/// Applies [`THREADS_ENV`] to the global thread pool. Later calls are no-ops.
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Entry point shared by the binary and the tests. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::ERROR } else { exit::OK };
        }
    };
    init_threads();
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::CheckIid(a) => cmd_check_iid(&a),
        Command::CompareModel(a) => cmd_compare_model(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Everything `analyze` writes in JSON mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisOutput {
    pub input: String,
    pub n: u64,
    pub distinct: u64,
    pub unique: u64,
    pub seed: u64,
    pub schedule: Schedule,
    pub audit: Vec<AuditEntry>,
    pub curves: Vec<GuessingCurve<f64>>,
}

fn print_audit(audit: &[AuditEntry], methods: &[Method]) {
    for e in audit.iter().filter(|e| methods.contains(&e.method)) {
        eprintln!("delta audit: {:<12} {:<19} {:.6}", e.method.as_str(), e.target.as_str(), e.delta);
    }
}

fn curve(
    kind: Kind,
    method: Method,
    target: Target,
    points: Vec<BoundPoint<f64>>,
    params: &[(&str, f64)],
) -> Result<GuessingCurve<f64>, CliError> {
    let parameters = params.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    Ok(GuessingCurve::new(kind, method, target, points, parameters)?)
}

/// Everything needed to evaluate the bounds of one corpus.
struct Analysis<'a> {
    corpus: &'a Corpus,
    enc: FrequencyEncoding,
    n: u64,
    schedule: &'a Schedule,
    seed: u64,
    target: Target,
    eps1: f64,
}

impl Analysis<'_> {
    fn retarget(&self, p: BoundPoint<f64>) -> BoundPoint<f64> {
        if p.target == self.target {
            p
        } else {
            p.widened(self.eps1, self.schedule.delta1, self.target)
        }
    }

    fn frequency(&self, grid: &[u64]) -> Result<GuessingCurve<f64>, CliError> {
        let table = self.corpus.frequency_table();
        let points = grid
            .par_iter()
            .map(|&g| frequency_ub(&table, g, self.schedule.delta1, self.target))
            .collect::<Result<Vec<_>, _>>()?;
        curve(Kind::Upper, Method::FrequencyUb, self.target, points, &[])
    }

    fn split(&self, grid: &[u64], model: Option<&ModelGuessList>) -> Result<GuessingCurve<f64>, CliError> {
        let params = self.schedule.split_params::<f64>(self.n)?;
        let part = self.corpus.partition(params.d, self.seed)?;
        let (method, points) = match model {
            None => (
                Method::SamplingLb,
                grid.par_iter()
                    .map(|&g| sampling_lb(&part, g, &params, self.target, self.schedule.delta1))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Some(model) => {
                let eval = crate::bounds::ExtendedEvaluator::new(&part, model);
                (
                    Method::ExtendedLb,
                    grid.iter()
                        .map(|&g| eval.bound(g, &params, self.target, self.schedule.delta1))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
        };
        curve(
            Kind::Lower,
            method,
            self.target,
            points,
            &[("d", params.d as f64), ("t", params.t), ("seed", self.seed as f64)],
        )
    }

    fn prior(&self, grid: &[u64]) -> Result<Option<GuessingCurve<f64>>, CliError> {
        let (lo, hi) = self.schedule.prior_j_range;
        let points = grid
            .par_iter()
            .filter(|&&g| g >= self.n)
            .map(|&g| {
                let l = g as f64 / self.n as f64;
                prior_lb_best(&self.enc, l, lo..=hi, self.schedule.prior_policy(), self.target, self.schedule.delta1)
            })
            .collect::<Result<Vec<_>, _>>()?;
        if points.is_empty() {
            eprintln!("note: prior_lb needs G >= N = {}; no grid point qualifies", self.n);
            return Ok(None);
        }
        Ok(Some(curve(Kind::Lower, Method::PriorLb, self.target, points, &[])?))
    }

    fn lp(
        &self,
        grid: &[u64],
        want_lower: bool,
        want_upper: bool,
        solver: &MicroLpSolver,
        dump: Option<PathBuf>,
    ) -> Result<Vec<GuessingCurve<f64>>, CliError> {
        let mesh = self.schedule.mesh::<f64>(self.n)?;
        let params = self.schedule.lp_params::<f64>(self.n)?;
        let bounder = LpBounder::new(&mesh, &self.enc, &params)?.with_dump_dir(dump);
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for &g in grid {
            if want_lower {
                lower.push(self.retarget(bounder.lower(g, solver)?));
            }
            if want_upper {
                upper.push(self.retarget(bounder.upper(g, solver)?));
            }
        }
        let info = [("q", self.schedule.q), ("l", mesh.l() as f64)];
        let mut out = Vec::new();
        if want_lower {
            out.push(curve(Kind::Lower, Method::LpLb, self.target, lower, &info)?);
        }
        if want_upper {
            out.push(curve(Kind::Upper, Method::LpUb, self.target, upper, &info)?);
        }
        Ok(out)
    }
}

/// Per-budget envelope: the largest lower bound and the smallest upper bound.
///
/// The envelope holds when every contributing bound holds, so its δ is the sum of theirs.
pub fn best_envelope(
    curves: &[GuessingCurve<f64>],
    grid: &[u64],
    target: Target,
) -> Result<Vec<GuessingCurve<f64>>, CliError> {
    let mut out = Vec::new();
    for kind in [Kind::Lower, Kind::Upper] {
        let members: Vec<&GuessingCurve<f64>> =
            curves.iter().filter(|c| c.kind == kind && c.method != Method::Best).collect();
        if members.is_empty() {
            continue;
        }
        let points = grid
            .iter()
            .filter_map(|&g| {
                let at_g: Vec<&BoundPoint<f64>> = members
                    .iter()
                    .filter_map(|c| c.points.binary_search_by_key(&g, |p| p.g).ok().map(|i| &c.points[i]))
                    .collect();
                let winner = at_g.iter().copied().reduce(|a, b| {
                    let better = if kind == Kind::Lower { b.value > a.value } else { b.value < a.value };
                    if better {
                        b
                    } else {
                        a
                    }
                })?;
                let delta = members.iter().map(|c| c.points.first().map_or(0.0, |p| p.delta)).sum();
                let p = BoundPoint::new(g, winner.value, kind, Method::Best, delta, target)
                    .with(&format!("from_{}", winner.method), 1.0);
                Some(p)
            })
            .collect();
        out.push(curve(kind, Method::Best, target, points, &[])?);
    }
    Ok(out)
}

fn default_methods(corpus: &Corpus, has_model: bool) -> Vec<Method> {
    let mut m = vec![Method::FrequencyUb, Method::SamplingLb, Method::PriorLb, Method::LpLb, Method::LpUb];
    if has_model && corpus.has_real_tokens() {
        m.push(Method::ExtendedLb);
    }
    m
}

/// Computes every requested curve plus the envelope.
pub fn analyze_corpus(
    corpus: &Corpus,
    methods: &[Method],
    grid: &[u64],
    config: &RunConfig,
    target: Target,
    model: Option<&ModelGuessList>,
    dump_lp: Option<PathBuf>,
) -> Result<Vec<GuessingCurve<f64>>, CliError> {
    if methods.is_empty() {
        return Err(CliError::Config("method list is empty".into()));
    }
    check_grid(grid)?;
    let n = corpus.n();
    if n < 2 {
        return Err(CliError::Config(format!("corpus has {n} samples; need at least 2")));
    }
    if methods.contains(&Method::ExtendedLb) {
        if !corpus.has_real_tokens() {
            return Err(CliError::Config(
                "extended_lb needs the passwords themselves to match model guesses; counts_only input has none".into(),
            ));
        }
        if model.is_none() {
            return Err(CliError::Config("extended_lb needs a guess list (--model)".into()));
        }
    }
    let schedule = &config.schedule;
    let analysis = Analysis {
        corpus,
        enc: corpus.frequency_table().frequency_encoding(),
        n,
        schedule,
        seed: config.seed,
        target,
        eps1: schedule.eps1::<f64>(n)?,
    };
    let mut curves = Vec::new();
    for &m in methods {
        match m {
            Method::FrequencyUb => curves.push(analysis.frequency(grid)?),
            Method::SamplingLb => curves.push(analysis.split(grid, None)?),
            Method::ExtendedLb => curves.push(analysis.split(grid, model)?),
            Method::PriorLb => curves.extend(analysis.prior(grid)?),
            Method::LpLb | Method::LpUb => {}
            Method::Best | Method::Model => {
                return Err(CliError::Config(format!("{m} is derived, not requested directly")));
            }
        }
    }
    let (lo, hi) = (methods.contains(&Method::LpLb), methods.contains(&Method::LpUb));
    if lo || hi {
        let solver = MicroLpSolver::new(config.solver);
        curves.extend(analysis.lp(grid, lo, hi, &solver, dump_lp)?);
    }
    let best = best_envelope(&curves, grid, target)?;
    curves.extend(best);
    Ok(curves)
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<i32, CliError> {
    let config = args.schedule.resolve()?;
    let corpus = load_corpus(&args.input.input, args.input.format)?;
    let model = args.model.as_ref().map(ModelGuessList::load).transpose()?;
    let methods = args
        .methods
        .clone()
        .or_else(|| config.methods.clone())
        .unwrap_or_else(|| default_methods(&corpus, model.is_some()));
    let grid = match (&args.g_grid, &config.g_grid) {
        (Some(spec), _) => parse_grid(spec)?,
        (None, Some(g)) => g.clone(),
        (None, None) => default_grid(corpus.n()),
    };
    let target = Target::from(args.target);
    let audit: Vec<AuditEntry> = config.schedule.audit().into_iter().filter(|e| e.target == target).collect();
    print_audit(&audit, &methods);
    let curves = analyze_corpus(&corpus, &methods, &grid, &config, target, model.as_ref(), args.dump_lp.clone())?;
    let table = corpus.frequency_table();
    let enc = table.frequency_encoding();
    let doc = AnalysisOutput {
        input: args.input.input.display().to_string(),
        n: enc.n(),
        distinct: enc.distinct(),
        unique: enc.unique(),
        seed: config.seed,
        schedule: config.schedule.clone(),
        audit: config.schedule.audit(),
        curves,
    };
    emit(&args.output, |w, fmt| match fmt {
        OutFormat::Csv => write_curves_csv(&doc.curves, w),
        OutFormat::Json => write_json(&doc, w),
    })?;
    Ok(exit::OK)
}

/// Parses `uniform:K` or `zipf:K:S`.
pub fn parse_dist(spec: &str) -> Result<crate::oracle::KnownDistribution<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Config(format!("unknown distribution {spec:?}; use uniform:K or zipf:K:S"));
    let k = |s: &str| s.parse::<u64>().map_err(|_| bad());
    Ok(match parts.as_slice() {
        ["uniform", kk] => make_uniform(k(kk)?)?,
        ["zipf", kk, s] => make_zipf(k(kk)?, s.parse().map_err(|_| bad())?)?,
        _ => return Err(bad()),
    })
}

/// One PASS/FAIL line per checked quantity.
pub fn coverage_verdicts(report: &CoverageReport) -> Vec<(String, f64, f64, bool)> {
    let mut out = Vec::new();
    for m in &report.methods {
        let thr = binomial_threshold(report.budget, report.trials);
        out.push((m.method.to_string(), m.max_rate, thr, m.max_rate <= thr));
    }
    if !report.lp_bracket.is_empty() {
        let thr = binomial_threshold(2.0 * report.budget, report.trials);
        let rate = report.lp_bracket_max_rate();
        out.push(("lp_bracket".to_string(), rate, thr, rate <= thr));
    }
    out
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32, CliError> {
    if args.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    if args.methods.is_empty() {
        return Err(CliError::Config("method list is empty".into()));
    }
    let config = args.schedule.resolve()?;
    let dist = parse_dist(&args.dist)?;
    let g_grid = match &args.g_grid {
        Some(s) => parse_grid(s)?,
        None => config.g_grid.clone().unwrap_or_else(|| pow2_grid(1 << 18)),
    };
    let lp_g_grid = match &args.lp_g_grid {
        Some(s) => parse_grid(s)?,
        None => g_grid.clone(),
    };
    let cov = CoverageConfig {
        n: args.n,
        g_grid,
        lp_g_grid,
        prior_l: args.prior_l.clone(),
        methods: args.methods.clone(),
        trials: args.trials,
        base_seed: config.seed,
        schedule: config.schedule.clone(),
        solver: config.solver,
    };
    let run = run_coverage(&dist, &cov)?;
    if let Some(path) = &args.traces {
        let file =
            File::create(path).map_err(|source| CliError::Output { path: path.display().to_string(), source })?;
        run.write_traces_csv(BufWriter::new(file))?;
    }
    let out = OutputArgs { out: args.out.clone(), out_format: OutFormat::Json };
    emit(&out, |w, _| write_json(&run.report, w))?;
    let verdicts = coverage_verdicts(&run.report);
    let mut all_pass = true;
    for (name, rate, thr, pass) in &verdicts {
        all_pass &= pass;
        eprintln!("{} {name}: max violation rate {rate:.4} (threshold {thr:.4})", if *pass { "PASS" } else { "FAIL" });
    }
    Ok(if all_pass { exit::OK } else { exit::NEGATIVE })
}

fn cmd_check_iid(args: &CheckIidArgs) -> Result<i32, CliError> {
    let config = args.schedule.resolve()?;
    let corpus = load_corpus(&args.input.input, args.input.format)?;
    let enc = corpus.frequency_table().frequency_encoding();
    let verdict = check_iid(&enc, &config)?;
    let out = OutputArgs { out: args.out.clone(), out_format: OutFormat::Json };
    emit(&out, |w, _| write_json(&verdict, w))?;
    Ok(match verdict {
        IidVerdict::Consistent => exit::OK,
        IidVerdict::Inconsistent(report) => {
            eprintln!(
                "sample is inconsistent with independent draws; implicated rows: {}",
                report.implicated_rows.join(", ")
            );
            exit::NEGATIVE
        }
    })
}

/// IID verdict for a frequency encoding under a resolved configuration.
pub fn check_iid(enc: &FrequencyEncoding, config: &RunConfig) -> Result<IidVerdict, CliError> {
    let n = enc.n();
    let mesh = config.schedule.mesh::<f64>(n)?;
    let params = config.schedule.lp_params::<f64>(n)?;
    Ok(check_iid_consistency(&enc.clone(), &mesh, &params, &MicroLpSolver::new(config.solver))?)
}

fn cmd_compare_model(args: &CompareModelArgs) -> Result<i32, CliError> {
    let config = args.schedule.resolve()?;
    let corpus = load_corpus(&args.input.input, args.input.format)?;
    let model = ModelGuessList::load(&args.model)?;
    let grid = match (&args.g_grid, &config.g_grid) {
        (Some(spec), _) => parse_grid(spec)?,
        (None, Some(g)) => g.clone(),
        (None, None) => pow2_grid((model.len() as u64).max(corpus.n()).saturating_mul(2)),
    };
    let curves = compare_model(&corpus, &model, &grid, &config)?;
    emit(&args.output, |w, fmt| match fmt {
        OutFormat::Csv => write_curves_csv(&curves, w),
        OutFormat::Json => write_json(&curves, w),
    })?;
    Ok(exit::OK)
}

/// The model's empirical curve on D₂ next to the sampling and extended bounds.
pub fn compare_model(
    corpus: &Corpus,
    model: &ModelGuessList,
    grid: &[u64],
    config: &RunConfig,
) -> Result<Vec<GuessingCurve<f64>>, CliError> {
    if !corpus.has_real_tokens() {
        return Err(CliError::Config(
            "model comparison needs the passwords themselves; counts_only input has none".into(),
        ));
    }
    check_grid(grid)?;
    let n = corpus.n();
    let params = config.schedule.split_params::<f64>(n)?;
    let part = corpus.partition(params.d, config.seed)?;
    let model_curve = ModelCurve::new(part.d2(), model);
    let target = Target::SampleLambda;
    let curve_points: Vec<BoundPoint<f64>> = grid.iter().map(|&g| model_curve.point(g)).collect();
    let mut curves =
        vec![curve(Kind::Estimate, Method::Model, target, curve_points, &[("guesses", model.len() as f64)])?];
    let dist = Target::DistributionLambda;
    let delta1 = config.schedule.delta1;
    let sampling = grid.iter().map(|&g| sampling_lb(&part, g, &params, dist, delta1)).collect::<Result<Vec<_>, _>>()?;
    let extended =
        grid.iter().map(|&g| extended_lb(&part, model, g, &params, dist, delta1)).collect::<Result<Vec<_>, _>>()?;
    let info = [("d", params.d as f64), ("t", params.t), ("seed", config.seed as f64)];
    curves.push(curve(Kind::Lower, Method::SamplingLb, dist, sampling, &info)?);
    curves.push(curve(Kind::Lower, Method::ExtendedLb, dist, extended, &info)?);
    Ok(curves)
}

fn emit<F>(out: &OutputArgs, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write, OutFormat) -> Result<(), CliError>,
{
    let name = out.out.as_ref().map_or("<stdout>".to_string(), |p| p.display().to_string());
    let io_err = |source| CliError::Output { path: name.clone(), source };
    match &out.out {
        Some(path) => {
            let file = File::create(path).map_err(io_err)?;
            let mut w = BufWriter::new(file);
            write(&mut w, out.out_format)?;
            w.flush().map_err(io_err)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w, out.out_format)?;
            w.flush().map_err(io_err)
        }
    }
}

fn write_json<T: Serialize>(value: &T, w: &mut dyn Write) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Output { path: "<json>".into(), source: e };
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| io_err(io::Error::other(e)))?;
    writeln!(w).map_err(io_err)
}

/// Writes one row per point under [`CSV_HEADER`].
pub fn write_curves_csv(curves: &[GuessingCurve<f64>], w: &mut dyn Write) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::Output { path: "<csv>".into(), source: io::Error::other(e) };
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER).map_err(csv_err)?;
    for c in curves {
        for p in &c.points {
            wr.write_record([
                p.g.to_string(),
                p.value.to_string(),
                p.raw_value.to_string(),
                p.kind.to_string(),
                p.method.to_string(),
                p.delta.to_string(),
                p.target.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    wr.flush().map_err(|e| CliError::Output { path: "<csv>".into(), source: e })
}

/// Reads curves written by [`write_curves_csv`]. Provenance and parameters are not
/// part of the CSV and come back empty.
pub fn read_curves_csv<R: Read>(r: R) -> Result<Vec<GuessingCurve<f64>>, CliError> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(|e| CliError::Csv(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(CliError::Csv(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    type Labels = (Kind, Method, Target);
    let mut groups: Vec<(Labels, Vec<BoundPoint<f64>>)> = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Csv(e.to_string()))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| CliError::Csv(format!("row {} is short", line + 2)));
        let num = |i: usize| {
            field(i).and_then(|s| {
                f64::from_str(s).map_err(|_| CliError::Csv(format!("row {}: bad number {s:?}", line + 2)))
            })
        };
        let g = field(0)?.parse::<u64>().map_err(|_| CliError::Csv(format!("row {}: bad g", line + 2)))?;
        let kind: Kind = field(3)?.parse()?;
        let method: Method = field(4)?.parse()?;
        let target: Target = field(6)?.parse()?;
        let point = BoundPoint {
            g,
            value: num(1)?,
            raw_value: num(2)?,
            kind,
            method,
            delta: num(5)?,
            target,
            provenance: BTreeMap::new(),
        };
        let key = (kind, method, target);
        match groups.last_mut() {
            Some((k, pts)) if *k == key => pts.push(point),
            _ => groups.push((key, vec![point])),
        }
    }
    groups
        .into_iter()
        .map(|((kind, method, target), points)| Ok(GuessingCurve::new(kind, method, target, points, BTreeMap::new())?))
        .collect()
}
