//! Elementary high-confidence bounds on the guessing curve.
//!
//! Every bound is reported as a [`BoundPoint`] carrying the clamped value, the raw
//! formula output, the error probability it holds with, and whether it bounds the
//! distribution curve λ_G or the sample quantity λ(S,G).
//!
//! The two targets differ by the bounded-differences shift `ε = sqrt(ln(1/δ)/(2N))`:
//! converting either way widens a bound by ε and adds δ to its error probability.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{FrequencyEncoding, FrequencyTable, Partition, SampleCorpus, TokenId};
use crate::meshlp::binomial::ln_gamma;
use crate::scalar::{clamp_unit, Scalar};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("{0}")]
    Domain(String),
    #[error("split parameters are for d = {params}, partition has d = {partition}")]
    SplitMismatch { params: u64, partition: u64 },
    #[error("guess list repeats {0:?}")]
    DuplicateGuess(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Upper,
    Lower,
    /// A point estimate with no confidence claim, such as a model's empirical curve.
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FrequencyUb,
    PriorLb,
    SamplingLb,
    ExtendedLb,
    LpLb,
    LpUb,
    /// Envelope of the other bounds.
    Best,
    /// Empirical success rate of an external guess list.
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The curve λ_G of the underlying distribution.
    DistributionLambda,
    /// The covered fraction λ(S,G) of the observed sample.
    SampleLambda,
}

macro_rules! snake_names {
    ($ty:ty { $($variant:ident => $name:literal),* $(,)? }) => {
        impl $ty {
            pub fn as_str(&self) -> &'static str {
                match self { $(Self::$variant => $name),* }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl std::str::FromStr for $ty {
            type Err = BoundsError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(Self::$variant),)*
                    other => Err(BoundsError::Domain(format!(
                        "unknown {} {other:?}", stringify!($ty).to_lowercase()
                    ))),
                }
            }
        }
    };
}

snake_names!(Kind { Upper => "upper", Lower => "lower", Estimate => "estimate" });
snake_names!(Method {
    FrequencyUb => "frequency_ub",
    PriorLb => "prior_lb",
    SamplingLb => "sampling_lb",
    ExtendedLb => "extended_lb",
    LpLb => "lp_lb",
    LpUb => "lp_ub",
    Best => "best",
    Model => "model",
});
snake_names!(Target { DistributionLambda => "distribution_lambda", SampleLambda => "sample_lambda" });

impl Method {
    pub fn kind(&self) -> Kind {
        match self {
            Self::FrequencyUb | Self::LpUb => Kind::Upper,
            Self::PriorLb | Self::SamplingLb | Self::ExtendedLb | Self::LpLb => Kind::Lower,
            Self::Best | Self::Model => Kind::Estimate,
        }
    }
}

/// One bound at one guessing number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct BoundPoint<F> {
    pub g: u64,
    /// `raw_value` clamped to `[0, 1]`.
    pub value: F,
    pub raw_value: F,
    pub kind: Kind,
    pub method: Method,
    pub delta: F,
    pub target: Target,
    /// Intermediate quantities (ε, t, winning j or idx, …).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, f64>,
}

impl<F: Scalar> BoundPoint<F> {
    pub fn new(g: u64, raw_value: F, kind: Kind, method: Method, delta: F, target: Target) -> Self {
        Self { g, value: clamp_unit(raw_value), raw_value, kind, method, delta, target, provenance: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.provenance.insert(key.to_string(), value);
        self
    }

    /// Moves the bound to the other target: lower bounds drop by ε, upper bounds rise by ε.
    pub fn widened(mut self, eps: F, delta_eps: F, target: Target) -> Self {
        match self.kind {
            Kind::Lower => self.raw_value = self.raw_value - eps,
            Kind::Upper => self.raw_value = self.raw_value + eps,
            Kind::Estimate => {}
        }
        self.value = clamp_unit(self.raw_value);
        self.delta = self.delta + delta_eps;
        self.target = target;
        self.with("eps", eps.to_f64_lossy()).with("delta_eps", delta_eps.to_f64_lossy())
    }
}

/// Points of one method over a grid of guessing numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct GuessingCurve<F> {
    pub kind: Kind,
    pub method: Method,
    pub target: Target,
    pub points: Vec<BoundPoint<F>>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

impl<F: Scalar> GuessingCurve<F> {
    pub fn new(
        kind: Kind,
        method: Method,
        target: Target,
        points: Vec<BoundPoint<F>>,
        parameters: BTreeMap<String, f64>,
    ) -> Result<Self, BoundsError> {
        for w in points.windows(2) {
            if w[0].g >= w[1].g {
                return Err(BoundsError::InvalidCurve(format!(
                    "guessing numbers not strictly increasing at {} -> {}",
                    w[0].g, w[1].g
                )));
            }
        }
        if let Some(p) = points.iter().find(|p| p.kind != kind || p.method != method || p.target != target) {
            return Err(BoundsError::InvalidCurve(format!(
                "point at g = {} is {} {} {}, curve is {kind} {method} {target}",
                p.g, p.kind, p.method, p.target
            )));
        }
        Ok(Self { kind, method, target, points, parameters })
    }

    pub fn value_at(&self, g: u64) -> Option<F> {
        self.points.binary_search_by_key(&g, |p| p.g).ok().map(|i| self.points[i].value)
    }
}

/// Guesses of an external cracking model, in guess order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelGuessList {
    guesses: Vec<Vec<u8>>,
    source_label: String,
}

impl ModelGuessList {
    /// Fails if any guess repeats.
    pub fn new(guesses: Vec<Vec<u8>>, source_label: impl Into<String>) -> Result<Self, BoundsError> {
        let mut seen = HashSet::with_capacity(guesses.len());
        for g in &guesses {
            if !seen.insert(g.as_slice()) {
                return Err(BoundsError::DuplicateGuess(String::from_utf8_lossy(g).into_owned()));
            }
        }
        Ok(Self { guesses, source_label: source_label.into() })
    }

    /// Reads one guess per line. A first line `# source: <label>` sets the label.
    /// Later repeats of a guess are dropped, since a repeated guess never cracks anything new.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, BoundsError> {
        let path = path.as_ref();
        let io_err = |source| BoundsError::Io { path: path.display().to_string(), source };
        let mut reader = BufReader::new(File::open(path).map_err(io_err)?);
        let mut label = String::new();
        let mut guesses = Vec::new();
        let mut seen = HashSet::new();
        let mut buf = Vec::new();
        let mut first = true;
        loop {
            buf.clear();
            if reader.read_until(b'\n', &mut buf).map_err(io_err)? == 0 {
                break;
            }
            let line = buf.strip_suffix(b"\n").unwrap_or(&buf);
            let line = line.strip_suffix(b"\r").unwrap_or(line);
            if first {
                first = false;
                if let Some(rest) = line.strip_prefix(b"# source:") {
                    label = String::from_utf8_lossy(rest).trim().to_string();
                    continue;
                }
            }
            if line.is_empty() {
                continue;
            }
            if seen.insert(line.to_vec()) {
                guesses.push(line.to_vec());
            }
        }
        Ok(Self { guesses, source_label: label })
    }

    pub fn guesses(&self) -> &[Vec<u8>] {
        &self.guesses
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn len(&self) -> usize {
        self.guesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.guesses.is_empty()
    }
}

/// Split size and slack for the sampling bounds, with the implied error probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct SplitBoundParams<F> {
    pub d: u64,
    pub t: F,
    /// `exp(−2t²/d)`.
    pub delta: F,
}

impl<F: Scalar> SplitBoundParams<F> {
    pub fn from_delta(d: u64, delta: F) -> Result<Self, BoundsError> {
        let t = slack_t(d, delta)?;
        Ok(Self { d, t, delta })
    }

    /// `t = 0` gives the plain plug-in estimate with `delta = 1`.
    pub fn from_slack(d: u64, t: F) -> Result<Self, BoundsError> {
        if d == 0 || !(t >= F::zero()) || !t.is_finite() {
            return Err(BoundsError::Domain(format!("split slack needs d >= 1 and finite t >= 0 (d = {d}, t = {t})")));
        }
        let delta = (-F::lit(2.0) * t * t / F::count(d)).exp();
        Ok(Self { d, t, delta })
    }
}

fn check_delta<F: Scalar>(delta: F) -> Result<(), BoundsError> {
    if delta > F::zero() && delta < F::one() {
        Ok(())
    } else {
        Err(BoundsError::Domain(format!("error probability must lie in (0, 1), got {delta}")))
    }
}

/// Shift ε with `exp(−2nε²) = δ`.
pub fn mcdiarmid_epsilon<F: Scalar>(n: u64, delta: F) -> Result<F, BoundsError> {
    check_delta(delta)?;
    if n == 0 {
        return Err(BoundsError::Domain("sample size must be at least 1".into()));
    }
    Ok((-delta.ln() / (F::lit(2.0) * F::count(n))).sqrt())
}

/// Slack t with `exp(−2t²/d) = δ`.
pub fn slack_t<F: Scalar>(d: u64, delta: F) -> Result<F, BoundsError> {
    check_delta(delta)?;
    if d == 0 {
        return Err(BoundsError::Domain("split size must be at least 1".into()));
    }
    Ok((F::count(d) / F::lit(2.0) * -delta.ln()).sqrt())
}

/// Upper bound from the empirical top-`g` mass.
///
/// For [`Target::SampleLambda`] the empirical mass bounds λ(S,G) deterministically, so
/// `delta` is ignored and recorded as 0.
pub fn frequency_ub<F: Scalar>(
    table: &FrequencyTable,
    g: u64,
    delta: F,
    target: Target,
) -> Result<BoundPoint<F>, BoundsError> {
    if table.is_empty() {
        return Err(BoundsError::Domain("empty frequency table".into()));
    }
    let mass: F = table.top_g_mass(g);
    let point = BoundPoint::new(g, mass, Kind::Upper, Method::FrequencyUb, F::zero(), Target::SampleLambda);
    match target {
        Target::SampleLambda => Ok(point),
        Target::DistributionLambda => {
            let eps = mcdiarmid_epsilon(table.n(), delta)?;
            Ok(point.widened(eps, delta, target))
        }
    }
}

/// Number of D₂ samples among the `g` most frequent tokens of D₁.
pub fn h_count(partition: &Partition, g: u64) -> u64 {
    partition.hits_within(g)
}

fn check_split<F>(partition: &Partition, params: &SplitBoundParams<F>) -> Result<(), BoundsError> {
    if params.d != partition.d() {
        return Err(BoundsError::SplitMismatch { params: params.d, partition: partition.d() });
    }
    Ok(())
}

fn split_point<F: Scalar>(
    partition: &Partition,
    g: u64,
    count: u64,
    method: Method,
    params: &SplitBoundParams<F>,
    target: Target,
    delta_eps: F,
) -> Result<BoundPoint<F>, BoundsError> {
    let d = F::count(params.d);
    let raw = (F::count(count) - params.t) / d;
    let point = BoundPoint::new(g, raw, Kind::Lower, method, params.delta, Target::DistributionLambda)
        .with("h", count as f64)
        .with("t", params.t.to_f64_lossy())
        .with("d", params.d as f64)
        .with("seed", partition.seed() as f64);
    match target {
        Target::DistributionLambda => Ok(point),
        Target::SampleLambda => {
            let eps = mcdiarmid_epsilon(partition.n_total(), delta_eps)?;
            Ok(point.widened(eps, delta_eps, target))
        }
    }
}

/// Lower bound `(h − t)/d` from the held-out half of a split.
///
/// `delta_eps` is only used for [`Target::SampleLambda`].
pub fn sampling_lb<F: Scalar>(
    partition: &Partition,
    g: u64,
    params: &SplitBoundParams<F>,
    target: Target,
    delta_eps: F,
) -> Result<BoundPoint<F>, BoundsError> {
    check_split(partition, params)?;
    let h = h_count(partition, g);
    split_point(partition, g, h, Method::SamplingLb, params, target, delta_eps)
}

/// `ceil(n·l)`, snapping products within float rounding of an integer.
fn guesses_for_factor(n: u64, l: f64) -> u64 {
    let gl = n as f64 * l;
    let r = gl.round();
    if (gl - r).abs() <= 1e-9 * gl.max(1.0) {
        r as u64
    } else {
        gl.ceil() as u64
    }
}

/// Lower bound at `G = ceil(N·L)` from tokens seen at least `j` times.
///
/// `t` is the slack; the bound fails with probability `exp(−2t²/(N·j²))`.
pub fn prior_lb<F: Scalar>(
    enc: &FrequencyEncoding,
    l_factor: F,
    j: u64,
    t: F,
    target: Target,
    delta_eps: F,
) -> Result<BoundPoint<F>, BoundsError> {
    check_prior(enc, l_factor)?;
    if j < 2 {
        return Err(BoundsError::Domain(format!("j must be at least 2, got {j}")));
    }
    let point = prior_point(enc, l_factor, j, enc.mass_at_least(j), t);
    finish_prior(enc, point, target, delta_eps)
}

fn check_prior<F: Scalar>(enc: &FrequencyEncoding, l_factor: F) -> Result<(), BoundsError> {
    if enc.is_empty() {
        return Err(BoundsError::Domain("empty frequency encoding".into()));
    }
    if !(l_factor >= F::one()) || !l_factor.is_finite() {
        return Err(BoundsError::Domain(format!("guess multiplier L must be finite and at least 1, got {l_factor}")));
    }
    Ok(())
}

fn prior_point<F: Scalar>(enc: &FrequencyEncoding, l_factor: F, j: u64, mass: u64, t: F) -> BoundPoint<F> {
    let n = F::count(enc.n());
    let jf = F::count(j);
    // N / ((j−1)! L^{j−1}) in log space.
    let log_term = n.ln() - (ln_gamma(jf) + (jf - F::one()) * l_factor.ln());
    let term = if log_term < F::lit(-700.0) { F::zero() } else { log_term.exp() };
    let raw = (F::count(mass) - term - t) / n;
    let delta_t = (-F::lit(2.0) * t * t / (n * jf * jf)).exp();
    let g = guesses_for_factor(enc.n(), l_factor.to_f64_lossy());
    BoundPoint::new(g, raw, Kind::Lower, Method::PriorLb, delta_t, Target::SampleLambda)
        .with("j", j as f64)
        .with("t", t.to_f64_lossy())
        .with("delta_t", delta_t.to_f64_lossy())
        .with("l_factor", l_factor.to_f64_lossy())
}

fn finish_prior<F: Scalar>(
    enc: &FrequencyEncoding,
    point: BoundPoint<F>,
    target: Target,
    delta_eps: F,
) -> Result<BoundPoint<F>, BoundsError> {
    match target {
        Target::SampleLambda => Ok(point),
        Target::DistributionLambda => {
            let eps = mcdiarmid_epsilon(enc.n(), delta_eps)?;
            Ok(point.widened(eps, delta_eps, target))
        }
    }
}

/// How the slack of the prior bound is chosen for each `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TPolicy<F> {
    /// Keep the failure probability fixed; `t = j·sqrt(N·ln(1/δ)/2)` grows with j.
    FixedDelta(F),
    /// Same slack for every j.
    FixedSlack(F),
}

impl<F: Scalar> TPolicy<F> {
    pub fn slack(&self, n: u64, j: u64) -> Result<F, BoundsError> {
        match *self {
            Self::FixedDelta(delta) => {
                check_delta(delta)?;
                Ok(F::count(j) * (F::count(n) * -delta.ln() / F::lit(2.0)).sqrt())
            }
            Self::FixedSlack(t) if t >= F::zero() => Ok(t),
            Self::FixedSlack(t) => Err(BoundsError::Domain(format!("negative slack {t}"))),
        }
    }
}

/// Default range of `j` for [`prior_lb_best`].
pub const PRIOR_J_RANGE: RangeInclusive<u64> = 2..=1000;

/// Best prior bound over `j` in `j_range`; the winning `j` is kept in the provenance.
pub fn prior_lb_best<F: Scalar>(
    enc: &FrequencyEncoding,
    l_factor: F,
    j_range: RangeInclusive<u64>,
    policy: TPolicy<F>,
    target: Target,
    delta_eps: F,
) -> Result<BoundPoint<F>, BoundsError> {
    check_prior(enc, l_factor)?;
    let (lo, hi) = (*j_range.start(), *j_range.end());
    if lo < 2 || hi < lo {
        return Err(BoundsError::Domain(format!("invalid j range {lo}..={hi}")));
    }
    let mut mass = enc.mass_at_least(lo);
    let mut best: Option<BoundPoint<F>> = None;
    for j in lo..=hi {
        let t = policy.slack(enc.n(), j)?;
        let p = prior_point(enc, l_factor, j, mass, t);
        if best.as_ref().is_none_or(|b| p.raw_value > b.raw_value) {
            best = Some(p);
        }
        mass -= j * enc.f(j);
    }
    finish_prior(enc, best.expect("non-empty j range"), target, delta_eps)
}

/// Evaluates the model-extended split bound over many guessing numbers.
///
/// The combined attacker first guesses all of D₁ in frequency order, then the
/// model's guesses that are not in D₁, in model order.
#[derive(Debug, Clone)]
pub struct ExtendedEvaluator<'a> {
    partition: &'a Partition,
    /// For D₂ samples outside D₁: zero-based position among the model guesses not in D₁.
    outside_ranks: Vec<u64>,
}

impl<'a> ExtendedEvaluator<'a> {
    pub fn new(partition: &'a Partition, model: &ModelGuessList) -> Self {
        let vocab = partition.d2().vocabulary();
        let d1 = partition.d1();
        let mut model_rank: HashMap<TokenId, u64> = HashMap::new();
        let mut r = 0u64;
        for guess in model.guesses() {
            match vocab.get(guess) {
                Some(id) if d1.rank_of_id(id).is_some() => continue,
                Some(id) => {
                    model_rank.insert(id, r);
                }
                None => {}
            }
            r += 1;
        }
        let mut outside_ranks: Vec<u64> = partition
            .d2()
            .ids()
            .iter()
            .filter(|&&id| d1.rank_of_id(id).is_none())
            .filter_map(|id| model_rank.get(id).copied())
            .collect();
        outside_ranks.sort_unstable();
        Self { partition, outside_ranks }
    }

    /// Number of D₂ samples cracked within `g` guesses of the combined attacker.
    pub fn count(&self, g: u64) -> u64 {
        let k = self.partition.d1().distinct();
        if g <= k {
            return self.partition.hits_within(g);
        }
        let extra = g - k;
        self.partition.hits_total() + self.outside_ranks.partition_point(|&r| r < extra) as u64
    }

    pub fn bound<F: Scalar>(
        &self,
        g: u64,
        params: &SplitBoundParams<F>,
        target: Target,
        delta_eps: F,
    ) -> Result<BoundPoint<F>, BoundsError> {
        check_split(self.partition, params)?;
        split_point(self.partition, g, self.count(g), Method::ExtendedLb, params, target, delta_eps)
    }
}

/// Split bound for the attacker that falls back to model guesses once D₁ is exhausted.
pub fn extended_lb<F: Scalar>(
    partition: &Partition,
    model: &ModelGuessList,
    g: u64,
    params: &SplitBoundParams<F>,
    target: Target,
    delta_eps: F,
) -> Result<BoundPoint<F>, BoundsError> {
    ExtendedEvaluator::new(partition, model).bound(g, params, target, delta_eps)
}

/// Empirical success rate of a guess list against held-out samples.
#[derive(Debug, Clone)]
pub struct ModelCurve {
    /// 1-based guess numbers of the samples the list cracks, sorted.
    guess_numbers: Vec<u64>,
    n: u64,
}

impl ModelCurve {
    pub fn new(samples: &SampleCorpus, model: &ModelGuessList) -> Self {
        let vocab = samples.vocabulary();
        let mut number: HashMap<TokenId, u64> = HashMap::new();
        for (pos, guess) in model.guesses().iter().enumerate() {
            if let Some(id) = vocab.get(guess) {
                number.entry(id).or_insert(pos as u64 + 1);
            }
        }
        let mut guess_numbers: Vec<u64> = samples.ids().iter().filter_map(|id| number.get(id).copied()).collect();
        guess_numbers.sort_unstable();
        Self { guess_numbers, n: samples.n() }
    }

    /// Fraction of samples cracked within `g` guesses.
    pub fn value<F: Scalar>(&self, g: u64) -> F {
        if self.n == 0 {
            return F::zero();
        }
        F::count(self.guess_numbers.partition_point(|&x| x <= g) as u64) / F::count(self.n)
    }

    pub fn point<F: Scalar>(&self, g: u64) -> BoundPoint<F> {
        BoundPoint::new(g, self.value(g), Kind::Estimate, Method::Model, F::zero(), Target::SampleLambda)
    }
}
