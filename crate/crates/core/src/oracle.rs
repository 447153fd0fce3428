//! Synthetic distributions with known guessing curves, and a coverage harness
//! that measures how often each bound is violated over repeated samples.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{frequency_ub, prior_lb_best, sampling_lb, BoundsError, Kind, Method, Target};
use crate::corpus::{CorpusError, SampleCorpus, TokenId, Vocabulary};
use crate::meshlp::{LpBounder, LpProblem, Mesh, MeshLpError, MicroLpSolver, SolverOptions};
use crate::scalar::{compensated_sum, Scalar};
use crate::schedule::{Schedule, ScheduleError};

/// Allowed deviation of a general distribution's total mass from 1.
pub const SUM_TOL: f64 = 1e-12;
/// Allowed deviation for mesh-aligned distributions, whose mass can only be matched to within `x_l`.
pub const MESH_SUM_TOL: f64 = 1e-9;
/// A bound counts as violated only when it misses λ_G by more than this.
pub const VIOLATION_TOL: f64 = 1e-9;
/// ChaCha stream used for drawing samples; partitions use stream 0 of the same seed.
const SAMPLE_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Lp(#[from] MeshLpError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("cannot write traces: {0}")]
    Io(#[from] std::io::Error),
}

/// A distribution over passwords `pw1, pw2, …` listed by non-increasing probability.
#[derive(Debug, Clone)]
pub struct KnownDistribution<F> {
    label: String,
    probs: Vec<F>,
    /// `cumulative[g] = p_1 + … + p_g`, with `cumulative[0] = 0`.
    cumulative: Vec<F>,
    /// Histogram over the mesh when built by [`make_mesh_aligned`].
    mesh_histogram: Option<Vec<u64>>,
    alias: OnceLock<Arc<WeightedAliasIndex<f64>>>,
}

impl<F: Scalar> KnownDistribution<F> {
    /// Validates that `probs` is non-increasing, positive and sums to 1 within [`SUM_TOL`].
    pub fn from_probs(label: impl Into<String>, probs: Vec<f64>) -> Result<Self, OracleError> {
        Self::build(label.into(), probs, SUM_TOL, None)
    }

    fn build(label: String, probs: Vec<f64>, tol: f64, mesh_histogram: Option<Vec<u64>>) -> Result<Self, OracleError> {
        if probs.is_empty() {
            return Err(OracleError::InvalidDistribution("no outcomes".into()));
        }
        if let Some(i) = probs.iter().position(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(OracleError::InvalidDistribution(format!("p[{i}] = {} is not in (0, 1]", probs[i])));
        }
        if let Some(i) = probs.windows(2).position(|w| w[1] > w[0]) {
            return Err(OracleError::InvalidDistribution(format!(
                "probabilities must be non-increasing, p[{}] = {} < p[{}] = {}",
                i,
                probs[i],
                i + 1,
                probs[i + 1]
            )));
        }
        let total: f64 = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > tol {
            return Err(OracleError::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        let mut cumulative = Vec::with_capacity(probs.len() + 1);
        cumulative.push(F::zero());
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for &p in &probs {
            let t = sum + p;
            comp += if sum.abs() >= p.abs() { (sum - t) + p } else { (p - t) + sum };
            sum = t;
            cumulative.push(F::lit(sum + comp));
        }
        Ok(Self {
            label,
            probs: probs.into_iter().map(F::lit).collect(),
            cumulative,
            mesh_histogram,
            alias: OnceLock::new(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    /// Number of outcomes with positive probability.
    pub fn support(&self) -> u64 {
        self.probs.len() as u64
    }

    /// Histogram `h_j` over the mesh it was built on, if mesh-aligned.
    pub fn mesh_histogram(&self) -> Option<&[u64]> {
        self.mesh_histogram.as_deref()
    }

    /// λ_G: total probability of the `g` most likely passwords.
    pub fn exact_lambda(&self, g: u64) -> F {
        if g >= self.support() {
            return F::one();
        }
        self.cumulative[g as usize]
    }

    fn alias(&self) -> Arc<WeightedAliasIndex<f64>> {
        self.alias
            .get_or_init(|| {
                let w: Vec<f64> = self.probs.iter().map(|p| p.to_f64_lossy()).collect();
                Arc::new(WeightedAliasIndex::new(w).expect("validated weights"))
            })
            .clone()
    }

    /// `n` independent draws; the same seed always gives the same sample.
    pub fn sample(&self, n: u64, seed: u64) -> SampleCorpus {
        let alias = self.alias();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SAMPLE_STREAM);
        let mut vocab = Vocabulary::new();
        let mut ids: HashMap<usize, TokenId> = HashMap::new();
        let mut samples = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let k = alias.sample(&mut rng);
            let id = *ids.entry(k).or_insert_with(|| {
                vocab.intern(format!("pw{}", k + 1).as_bytes()).expect("support fits the token id space")
            });
            samples.push(id);
        }
        SampleCorpus::from_ids(Arc::new(vocab), samples)
    }

    /// Rounds every probability onto `mesh`, down or up; mass below `x_l` goes to the tail.
    pub fn rounded_histogram(&self, mesh: &Mesh<F>, direction: Rounding) -> RoundedHistogram {
        let l = mesh.l();
        let mut h = vec![0.0; l];
        let mut tail = 0.0;
        for &p in &self.probs {
            match mesh.floor_index(p) {
                None => tail += p.to_f64_lossy(),
                Some(j) => {
                    let j = if direction == Rounding::Up && mesh.x(j) < p && j > 1 { j - 1 } else { j };
                    h[j - 1] += 1.0;
                }
            }
        }
        RoundedHistogram { h, tail }
    }
}

/// Uniform distribution over `k` passwords.
pub fn make_uniform<F: Scalar>(k: u64) -> Result<KnownDistribution<F>, OracleError> {
    if k == 0 {
        return Err(OracleError::InvalidDistribution("uniform over zero outcomes".into()));
    }
    KnownDistribution::from_probs(format!("uniform({k})"), vec![1.0 / k as f64; k as usize])
}

/// Zipf distribution `p_i ∝ i^(−s)` over `k` passwords.
pub fn make_zipf<F: Scalar>(k: u64, s: f64) -> Result<KnownDistribution<F>, OracleError> {
    if k == 0 || !(s >= 0.0) || !s.is_finite() {
        return Err(OracleError::InvalidDistribution(format!("zipf needs k >= 1 and s >= 0, got k = {k}, s = {s}")));
    }
    let w: Vec<f64> = (1..=k).map(|i| (i as f64).powf(-s)).collect();
    let z: f64 = compensated_sum(w.iter().copied());
    KnownDistribution::from_probs(format!("zipf({k}, {s})"), w.into_iter().map(|v| v / z).collect())
}

/// Distribution with `h[j−1]` passwords of probability `x_j`; the mass must be 1 within [`MESH_SUM_TOL`].
pub fn make_mesh_aligned<F: Scalar>(mesh: &Mesh<F>, h: &[u64]) -> Result<KnownDistribution<F>, OracleError> {
    if h.len() != mesh.l() {
        return Err(OracleError::InvalidDistribution(format!(
            "histogram has {} entries for a mesh of {} points",
            h.len(),
            mesh.l()
        )));
    }
    let probs: Vec<f64> =
        h.iter().zip(mesh.values()).flat_map(|(&c, x)| std::iter::repeat_n(x.to_f64_lossy(), c as usize)).collect();
    let label = format!("mesh_aligned(l = {}, support = {})", mesh.l(), probs.len());
    KnownDistribution::build(label, probs, MESH_SUM_TOL, Some(h.to_vec()))
}

/// Rounds `dist` down onto `mesh` and then tops the mass back up greedily from the
/// largest mesh value, so the result sums to 1 within `x_l`.
///
/// Returns the histogram and the remaining deficit.
pub fn round_to_mesh<F: Scalar>(mesh: &Mesh<F>, dist: &KnownDistribution<F>) -> (Vec<u64>, f64) {
    let x: Vec<f64> = mesh.values().iter().map(|v| v.to_f64_lossy()).collect();
    let mut h = vec![0u64; x.len()];
    for &p in dist.probs() {
        if let Some(j) = mesh.floor_index(p) {
            h[j - 1] += 1;
        }
    }
    let mass = |h: &[u64]| compensated_sum(h.iter().zip(&x).map(|(&c, &xj)| c as f64 * xj));
    let mut deficit = 1.0 - mass(&h);
    for (j, &xj) in x.iter().enumerate() {
        if deficit < xj {
            continue;
        }
        let add = (deficit / xj).floor() as u64;
        h[j] += add;
        deficit = 1.0 - mass(&h);
        // Guard against a rounding overshoot at this level.
        while deficit < 0.0 && h[j] > 0 {
            h[j] -= 1;
            deficit = 1.0 - mass(&h);
        }
    }
    (h, deficit)
}

/// `Σ_{i≤g} i^(−y) / Σ_{i≤r} i^(−y)`: λ_G of a Zipf distribution with exponent `y` over `r` passwords.
pub fn cdf_zipf<F: Scalar>(y: f64, r: u64, g: u64) -> F {
    let g = g.min(r);
    let num = compensated_sum((1..=g).map(|i| (i as f64).powf(-y)));
    let den = compensated_sum((1..=r).map(|i| (i as f64).powf(-y)));
    F::lit(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Down,
    Up,
}

/// A distribution expressed in LP variables: `h_j` counts per mesh point and tail mass `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedHistogram {
    pub h: Vec<f64>,
    pub tail: f64,
}

impl RoundedHistogram {
    /// Exact histogram of a mesh-aligned distribution.
    pub fn from_counts(h: &[u64]) -> Self {
        Self { h: h.iter().map(|&c| c as f64).collect(), tail: 0.0 }
    }

    /// Largest scaled violation of the band and mass rows of `pb` at this histogram.
    /// Guess-budget rows are ignored, since they constrain `c` rather than the distribution.
    pub fn max_violation(&self, pb: &LpProblem) -> f64 {
        let mut x = vec![0.0; pb.variables.len()];
        x[..self.h.len()].copy_from_slice(&self.h);
        if let Some(p) = pb.var_index("p") {
            x[p] = self.tail;
        }
        pb.rows
            .iter()
            .filter(|r| r.label.starts_with("band") || r.label.starts_with("mass"))
            .map(|r| {
                let a = pb.row_activity(r, &x);
                let v = (r.lower - a).max(a - r.upper).max(0.0);
                v * r.scale
            })
            .fold(0.0, f64::max)
    }
}

/// Settings of a coverage experiment.
#[derive(Debug, Clone)]
pub struct CoverageConfig {
    pub n: u64,
    /// Budgets for the frequency and sampling bounds.
    pub g_grid: Vec<u64>,
    /// Budgets for the LP bounds, which are far more expensive.
    pub lp_g_grid: Vec<u64>,
    /// Budgets `G = ceil(n·L)` for the prior bound.
    pub prior_l: Vec<f64>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub base_seed: u64,
    pub schedule: Schedule,
    pub solver: SolverOptions,
}

impl CoverageConfig {
    pub fn new(
        n: u64,
        g_grid: Vec<u64>,
        methods: Vec<Method>,
        trials: usize,
        base_seed: u64,
        schedule: Schedule,
    ) -> Self {
        Self {
            n,
            lp_g_grid: g_grid.clone(),
            g_grid,
            prior_l: vec![1.0, 2.0, 4.0],
            methods,
            trials,
            base_seed,
            schedule,
            solver: SolverOptions::default(),
        }
    }
}

/// One bound value of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub method: Method,
    pub g: u64,
    pub value: f64,
    pub truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub trial: usize,
    pub seed: u64,
    pub distinct: u64,
    pub unique: u64,
    /// `(hits in D₁ − t)/d`, the value the sampling bound levels off at.
    pub sampling_plateau: Option<f64>,
    pub points: Vec<TracePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GCoverage {
    pub g: u64,
    pub truth: f64,
    pub violations: u64,
    pub rate: f64,
    pub mean_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCoverage {
    pub method: Method,
    pub kind: Kind,
    /// Error probability of the method under the schedule.
    pub delta: f64,
    pub per_g: Vec<GCoverage>,
    /// Largest violation rate over the grid.
    pub max_rate: f64,
    /// Trials in which the bound failed at one or more budgets.
    pub trials_with_any_violation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GWidth {
    pub g: u64,
    /// Mean over trials of the tightest upper bound minus the tightest lower bound.
    pub mean_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub distribution: String,
    pub n: u64,
    pub trials: usize,
    pub base_seed: u64,
    pub budget: f64,
    pub methods: Vec<MethodCoverage>,
    /// Per-budget trials where the LP bounds failed to bracket λ_G.
    pub lp_bracket: Vec<GCoverage>,
    pub widths: Vec<GWidth>,
    /// Trials where the LP lower bound beyond the sample's distinct count exceeded the sampling plateau.
    pub lp_above_sampling_plateau: u64,
    /// Same, against the Good-Turing estimate `(n − unique)/n`.
    pub lp_above_good_turing: u64,
}

impl CoverageReport {
    pub fn method(&self, m: Method) -> Option<&MethodCoverage> {
        self.methods.iter().find(|c| c.method == m)
    }

    /// Largest violation rate of the LP bracket over its grid.
    pub fn lp_bracket_max_rate(&self) -> f64 {
        self.lp_bracket.iter().map(|c| c.rate).fold(0.0, f64::max)
    }
}

/// A coverage report together with the raw per-trial values.
#[derive(Debug, Clone)]
pub struct CoverageRun {
    pub report: CoverageReport,
    pub traces: Vec<TrialTrace>,
}

impl CoverageRun {
    /// Writes `trial,seed,method,g,value,truth` rows for plotting.
    pub fn write_traces_csv<W: Write>(&self, out: W) -> Result<(), OracleError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "seed", "method", "g", "value", "truth"]).map_err(std::io::Error::other)?;
        for t in &self.traces {
            for p in &t.points {
                w.write_record([
                    t.trial.to_string(),
                    t.seed.to_string(),
                    p.method.to_string(),
                    p.g.to_string(),
                    p.value.to_string(),
                    p.truth.to_string(),
                ])
                .map_err(std::io::Error::other)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `p + 3·sqrt(p(1−p)/trials)`: the largest violation rate consistent with a true rate of `p`.
pub fn binomial_threshold(p: f64, trials: usize) -> f64 {
    p + 3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Runs `trials` independent samples of size `n` and counts bound violations, using
/// seeds `base_seed + trial`.
pub fn coverage_trial<F: Scalar>(
    dist: &KnownDistribution<F>,
    n: u64,
    g_grid: &[u64],
    methods: &[Method],
    trials: usize,
    base_seed: u64,
    schedule: &Schedule,
) -> Result<CoverageRun, OracleError> {
    let config = CoverageConfig::new(n, g_grid.to_vec(), methods.to_vec(), trials, base_seed, schedule.clone());
    run_coverage(dist, &config)
}

/// Coverage experiment with separate grids per method family.
pub fn run_coverage<F: Scalar>(
    dist: &KnownDistribution<F>,
    config: &CoverageConfig,
) -> Result<CoverageRun, OracleError> {
    for m in &config.methods {
        if matches!(m, Method::ExtendedLb | Method::Best | Method::Model) {
            return Err(OracleError::Unsupported(format!("coverage of {m} is not supported")));
        }
    }
    if config.trials == 0 {
        return Err(OracleError::Unsupported("coverage needs at least one trial".into()));
    }
    let schedule = &config.schedule;
    schedule.validate()?;
    let uses_lp = config.methods.iter().any(|m| matches!(m, Method::LpLb | Method::LpUb));
    let lp = if uses_lp { Some((schedule.mesh::<F>(config.n)?, schedule.lp_params::<F>(config.n)?)) } else { None };
    let solver = MicroLpSolver::new(config.solver);
    let traces = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_one(dist, config, trial, lp.as_ref(), &solver))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CoverageRun { report: summarize(dist, config, &traces), traces })
}

fn run_one<F: Scalar>(
    dist: &KnownDistribution<F>,
    config: &CoverageConfig,
    trial: usize,
    lp: Option<&(Mesh<F>, crate::meshlp::LpParams<F>)>,
    solver: &MicroLpSolver,
) -> Result<TrialTrace, OracleError> {
    let schedule = &config.schedule;
    let seed = config.base_seed.wrapping_add(trial as u64);
    let sample = dist.sample(config.n, seed);
    let table = sample.frequency_table();
    let enc = table.frequency_encoding();
    let dist_target = Target::DistributionLambda;
    let delta1 = F::lit(schedule.delta1);
    let truth = |g: u64| dist.exact_lambda(g).to_f64_lossy();
    let mut points = Vec::new();
    let mut push = |method: Method, g: u64, value: F| {
        points.push(TracePoint { method, g, value: value.to_f64_lossy(), truth: truth(g) });
    };
    let mut sampling_plateau = None;
    for &method in &config.methods {
        match method {
            Method::FrequencyUb => {
                for &g in &config.g_grid {
                    push(method, g, frequency_ub(&table, g, delta1, dist_target)?.value);
                }
            }
            Method::SamplingLb => {
                let params = schedule.split_params::<F>(config.n)?;
                let part = sample.partition(params.d, seed)?;
                for &g in &config.g_grid {
                    push(method, g, sampling_lb(&part, g, &params, dist_target, delta1)?.value);
                }
                let plateau = sampling_lb(&part, u64::MAX, &params, dist_target, delta1)?;
                sampling_plateau = Some(plateau.raw_value.to_f64_lossy());
            }
            Method::PriorLb => {
                let (lo, hi) = schedule.prior_j_range;
                for &l in &config.prior_l {
                    let p = prior_lb_best(&enc, F::lit(l), lo..=hi, schedule.prior_policy(), dist_target, delta1)?;
                    push(method, p.g, p.value);
                }
            }
            Method::LpLb | Method::LpUb => {
                let (mesh, params) = lp.expect("LP parameters prepared");
                let bounder = LpBounder::new(mesh, &enc, params)?;
                for &g in &config.lp_g_grid {
                    let p =
                        if method == Method::LpLb { bounder.lower(g, solver)? } else { bounder.upper(g, solver)? };
                    push(method, g, p.value);
                }
            }
            Method::ExtendedLb | Method::Best | Method::Model => unreachable!("rejected above"),
        }
    }
    Ok(TrialTrace { trial, seed, distinct: enc.distinct(), unique: enc.unique(), sampling_plateau, points })
}

fn violated(kind: Kind, value: f64, truth: f64) -> bool {
    match kind {
        Kind::Lower => value > truth + VIOLATION_TOL,
        Kind::Upper => value < truth - VIOLATION_TOL,
        Kind::Estimate => false,
    }
}

fn summarize<F: Scalar>(dist: &KnownDistribution<F>, config: &CoverageConfig, traces: &[TrialTrace]) -> CoverageReport {
    let audit = config.schedule.audit();
    let trials = traces.len() as f64;
    let mut methods = Vec::new();
    for &method in &config.methods {
        let kind = method.kind();
        let delta = audit
            .iter()
            .find(|e| e.method == method && e.target == Target::DistributionLambda)
            .map_or(f64::NAN, |e| e.delta);
        let mut gs: Vec<u64> =
            traces.iter().flat_map(|t| t.points.iter().filter(|p| p.method == method).map(|p| p.g)).collect();
        gs.sort_unstable();
        gs.dedup();
        let per_g: Vec<GCoverage> = gs
            .iter()
            .map(|&g| {
                let vals: Vec<&TracePoint> = traces
                    .iter()
                    .flat_map(|t| t.points.iter().filter(move |p| p.method == method && p.g == g))
                    .collect();
                let violations = vals.iter().filter(|p| violated(kind, p.value, p.truth)).count() as u64;
                GCoverage {
                    g,
                    truth: dist.exact_lambda(g).to_f64_lossy(),
                    violations,
                    rate: violations as f64 / trials,
                    mean_value: vals.iter().map(|p| p.value).sum::<f64>() / vals.len().max(1) as f64,
                }
            })
            .collect();
        let trials_with_any_violation = traces
            .iter()
            .filter(|t| t.points.iter().any(|p| p.method == method && violated(kind, p.value, p.truth)))
            .count() as u64;
        methods.push(MethodCoverage {
            method,
            kind,
            delta,
            max_rate: per_g.iter().map(|c| c.rate).fold(0.0, f64::max),
            per_g,
            trials_with_any_violation,
        });
    }

    let value_of =
        |t: &TrialTrace, m: Method, g: u64| t.points.iter().find(|p| p.method == m && p.g == g).map(|p| p.value);
    let has_lp = config.methods.contains(&Method::LpLb) && config.methods.contains(&Method::LpUb);
    let lp_bracket = if has_lp {
        config
            .lp_g_grid
            .iter()
            .map(|&g| {
                let truth = dist.exact_lambda(g).to_f64_lossy();
                let mut violations = 0;
                let mut width = 0.0;
                for t in traces {
                    let lo = value_of(t, Method::LpLb, g).unwrap_or(0.0);
                    let hi = value_of(t, Method::LpUb, g).unwrap_or(1.0);
                    width += hi - lo;
                    if violated(Kind::Lower, lo, truth) || violated(Kind::Upper, hi, truth) {
                        violations += 1;
                    }
                }
                GCoverage { g, truth, violations, rate: violations as f64 / trials, mean_value: width / trials }
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut all_g: Vec<u64> = traces.iter().flat_map(|t| t.points.iter().map(|p| p.g)).collect();
    all_g.sort_unstable();
    all_g.dedup();
    let widths = all_g
        .into_iter()
        .filter_map(|g| {
            let mut total = 0.0;
            for t in traces {
                let at_g = t.points.iter().filter(|p| p.g == g);
                let lo = at_g
                    .clone()
                    .filter(|p| p.method.kind() == Kind::Lower)
                    .map(|p| p.value)
                    .fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))));
                let hi = at_g
                    .filter(|p| p.method.kind() == Kind::Upper)
                    .map(|p| p.value)
                    .fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.min(v))));
                total += hi? - lo?;
            }
            Some(GWidth { g, mean_width: total / trials })
        })
        .collect();

    let lp_peak = |t: &TrialTrace| {
        t.points
            .iter()
            .filter(|p| p.method == Method::LpLb && p.g > t.distinct)
            .map(|p| p.value)
            .fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))))
    };
    let lp_above_sampling_plateau =
        traces.iter().filter(|t| matches!((lp_peak(t), t.sampling_plateau), (Some(v), Some(s)) if v > s)).count()
            as u64;
    let lp_above_good_turing = traces
        .iter()
        .filter(|t| lp_peak(t).is_some_and(|v| v > (config.n - t.unique) as f64 / config.n as f64))
        .count() as u64;

    CoverageReport {
        distribution: dist.label().to_string(),
        n: config.n,
        trials: traces.len(),
        base_seed: config.base_seed,
        budget: config.schedule.budget(),
        methods,
        lp_bracket,
        widths,
        lp_above_sampling_plateau,
        lp_above_good_turing,
    }
}
