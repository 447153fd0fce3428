//! Password samples, frequency tables and the seeded split used by the sampling bounds.
//!
//! Tokens are opaque byte strings. They are interned once into a [`Vocabulary`]
//! and referred to by [`TokenId`] afterwards, so a corpus with 10⁸ samples keeps
//! one copy of each distinct password.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Interned token handle, stable within one [`Vocabulary`].
pub type TokenId = u32;

const NO_RANK: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },
    #[error("split size {d} must satisfy 0 < d < n (n = {n})")]
    SplitOutOfRange { d: u64, n: u64 },
    #[error("corpus is empty")]
    Empty,
    #[error("too many distinct tokens for 32-bit ids")]
    TooManyTokens,
    #[error("unknown corpus format {0:?} (expected plain, counted or counts_only)")]
    UnknownFormat(String),
}

/// On-disk corpus layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    /// One token per line.
    Plain,
    /// `count<TAB>token` per line.
    Counted,
    /// One positive count per line, tokens anonymous.
    CountsOnly,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(Self::Plain),
            "counted" => Ok(Self::Counted),
            "counts_only" | "counts-only" => Ok(Self::CountsOnly),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Plain => "plain",
            Self::Counted => "counted",
            Self::CountsOnly => "counts_only",
        })
    }
}

/// Token interner.
#[derive(Debug, Default)]
pub struct Vocabulary {
    tokens: Vec<Arc<[u8]>>,
    index: HashMap<Arc<[u8]>, TokenId>,
    synthetic: bool,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `token`, adding it if unseen.
    pub fn intern(&mut self, token: &[u8]) -> Result<TokenId, CorpusError> {
        if let Some(&id) = self.index.get(token) {
            return Ok(id);
        }
        let id =
            TokenId::try_from(self.tokens.len()).ok().filter(|&id| id != NO_RANK).ok_or(CorpusError::TooManyTokens)?;
        let key: Arc<[u8]> = Arc::from(token);
        self.tokens.push(key.clone());
        self.index.insert(key, id);
        Ok(id)
    }

    pub fn get(&self, token: &[u8]) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &[u8] {
        &self.tokens[id as usize]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// True when tokens were synthesized from an anonymous count list.
    pub fn is_synthetic(&self) -> bool {
        self.synthetic
    }
}

/// An ordered multiset of samples.
#[derive(Debug, Clone)]
pub struct SampleCorpus {
    vocab: Arc<Vocabulary>,
    samples: Vec<TokenId>,
}

impl SampleCorpus {
    pub fn from_tokens<I, T>(tokens: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        let mut vocab = Vocabulary::new();
        let samples = tokens.into_iter().map(|t| vocab.intern(t.as_ref())).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { vocab: Arc::new(vocab), samples })
    }

    pub fn from_ids(vocab: Arc<Vocabulary>, samples: Vec<TokenId>) -> Self {
        debug_assert!(samples.iter().all(|&id| (id as usize) < vocab.len()));
        Self { vocab, samples }
    }

    pub fn n(&self) -> u64 {
        self.samples.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.samples
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn tokens(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.samples.iter().map(|&id| self.vocab.token(id))
    }

    pub fn frequency_table(&self) -> FrequencyTable {
        let mut counts = vec![0u64; self.vocab.len()];
        for &id in &self.samples {
            counts[id as usize] += 1;
        }
        FrequencyTable::from_dense_counts(self.vocab.clone(), &counts)
    }

    /// Splits into (D₁, D₂) with `|D₂| = d`, uniformly without replacement.
    pub fn partition(&self, d: u64, seed: u64) -> Result<Partition, CorpusError> {
        let full = self.frequency_table();
        let picks = pick_positions(self.n(), d, seed)?;
        let d2: Vec<TokenId> = picks.into_iter().map(|pos| self.samples[pos]).collect();
        Ok(Partition::assemble(&full, d2, seed))
    }
}

/// Token counts ranked by descending count, ties broken by token bytes.
#[derive(Debug, Clone)]
pub struct FrequencyTable {
    vocab: Arc<Vocabulary>,
    ranked: Vec<(TokenId, u64)>,
    prefix: Vec<u64>,
    rank_of: Vec<u32>,
    n: u64,
}

impl FrequencyTable {
    /// Builds a table from `(token, count)` pairs. Repeated tokens are summed.
    pub fn from_pairs<I, T>(pairs: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (T, u64)>,
        T: AsRef<[u8]>,
    {
        let mut vocab = Vocabulary::new();
        let mut counts: Vec<u64> = Vec::new();
        for (pos, (token, count)) in pairs.into_iter().enumerate() {
            if count == 0 {
                return Err(CorpusError::Validation { line: pos as u64 + 1, message: "count must be positive".into() });
            }
            let id = vocab.intern(token.as_ref())? as usize;
            if id == counts.len() {
                counts.push(0);
            }
            counts[id] += count;
        }
        Ok(Self::from_dense_counts(Arc::new(vocab), &counts))
    }

    /// Builds a table over anonymous tokens `#0`, `#1`, … in descending-count order.
    pub fn from_anonymous_counts(counts: &[u64]) -> Result<Self, CorpusError> {
        if let Some(pos) = counts.iter().position(|&c| c == 0) {
            return Err(CorpusError::Validation { line: pos as u64 + 1, message: "count must be positive".into() });
        }
        let mut sorted = counts.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let mut vocab = Vocabulary::new();
        vocab.synthetic = true;
        let mut ranked = Vec::with_capacity(sorted.len());
        for (i, &c) in sorted.iter().enumerate() {
            let id = vocab.intern(format!("#{i}").as_bytes())?;
            ranked.push((id, c));
        }
        // "#10" sorts before "#2" bytewise, so the rank order is set explicitly here.
        Ok(Self::from_ranked(Arc::new(vocab), ranked))
    }

    /// `counts[id]` is the count of token `id`; zero entries are absent tokens.
    pub(crate) fn from_dense_counts(vocab: Arc<Vocabulary>, counts: &[u64]) -> Self {
        let mut ranked: Vec<(TokenId, u64)> =
            counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(id, &c)| (id as TokenId, c)).collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| vocab.token(a.0).cmp(vocab.token(b.0))));
        Self::from_ranked(vocab, ranked)
    }

    fn from_ranked(vocab: Arc<Vocabulary>, ranked: Vec<(TokenId, u64)>) -> Self {
        let mut prefix = Vec::with_capacity(ranked.len() + 1);
        let mut acc = 0u64;
        prefix.push(0);
        let mut rank_of = vec![NO_RANK; vocab.len()];
        for (r, &(id, c)) in ranked.iter().enumerate() {
            acc += c;
            prefix.push(acc);
            rank_of[id as usize] = r as u32;
        }
        Self { vocab, ranked, prefix, rank_of, n: acc }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn distinct(&self) -> u64 {
        self.ranked.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    /// `(token id, count)` in rank order.
    pub fn ranked(&self) -> &[(TokenId, u64)] {
        &self.ranked
    }

    /// Counts in rank order (non-increasing).
    pub fn ordered_counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.ranked.iter().map(|&(_, c)| c)
    }

    /// `(token, count)` in rank order.
    pub fn iter(&self) -> impl Iterator<Item = (&[u8], u64)> + '_ {
        self.ranked.iter().map(|&(id, c)| (self.vocab.token(id), c))
    }

    pub fn count_of(&self, token: &[u8]) -> u64 {
        self.vocab.get(token).and_then(|id| self.rank_of_id(id)).map_or(0, |r| self.ranked[r].1)
    }

    /// Zero-based rank of a token id, if present.
    pub fn rank_of_id(&self, id: TokenId) -> Option<usize> {
        match self.rank_of.get(id as usize) {
            Some(&r) if r != NO_RANK => Some(r as usize),
            _ => None,
        }
    }

    /// Sum of the `g` largest counts.
    pub fn top_g_count(&self, g: u64) -> u64 {
        self.prefix[g.min(self.distinct()) as usize]
    }

    /// Empirical λ̂_G: the fraction of samples covered by the `g` most frequent tokens.
    pub fn top_g_mass<F: Scalar>(&self, g: u64) -> F {
        if self.n == 0 {
            return F::zero();
        }
        if g >= self.distinct() {
            return F::one();
        }
        F::count(self.top_g_count(g)) / F::count(self.n)
    }

    /// The `g` most frequent tokens in rank order.
    pub fn top_g_set(&self, g: u64) -> Vec<&[u8]> {
        let g = g.min(self.distinct()) as usize;
        self.ranked[..g].iter().map(|&(id, _)| self.vocab.token(id)).collect()
    }

    pub fn frequency_encoding(&self) -> FrequencyEncoding {
        FrequencyEncoding::from_counts(self.ordered_counts())
    }

    /// Splits into (D₁, D₂) with `|D₂| = d`.
    ///
    /// Sample positions are laid out in rank order and `d` of them are drawn without
    /// replacement, which is a multivariate hypergeometric draw over the tokens.
    pub fn partition(&self, d: u64, seed: u64) -> Result<Partition, CorpusError> {
        let picks = pick_positions(self.n, d, seed)?;
        let d2 = picks
            .into_iter()
            .map(|pos| {
                let r = self.prefix.partition_point(|&p| p <= pos as u64) - 1;
                self.ranked[r].0
            })
            .collect();
        Ok(Partition::assemble(self, d2, seed))
    }

    /// Dense count vector indexed by token id.
    fn dense_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.vocab.len()];
        for &(id, c) in &self.ranked {
            counts[id as usize] = c;
        }
        counts
    }
}

/// Frequency-of-frequencies vector `F_i` with totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyEncoding {
    f_of_f: BTreeMap<u64, u64>,
    n: u64,
    distinct: u64,
    unique: u64,
}

impl FrequencyEncoding {
    /// Builds the encoding from per-token counts; zero counts are ignored.
    pub fn from_counts<I: IntoIterator<Item = u64>>(counts: I) -> Self {
        let mut f_of_f = BTreeMap::new();
        for c in counts.into_iter().filter(|&c| c > 0) {
            *f_of_f.entry(c).or_insert(0u64) += 1;
        }
        Self::from_map(f_of_f)
    }

    /// Builds the encoding from `i → F_i` pairs; zero entries are dropped.
    pub fn from_f_of_f<I: IntoIterator<Item = (u64, u64)>>(pairs: I) -> Self {
        let mut f_of_f = BTreeMap::new();
        for (i, f) in pairs.into_iter().filter(|&(i, f)| i > 0 && f > 0) {
            *f_of_f.entry(i).or_insert(0u64) += f;
        }
        Self::from_map(f_of_f)
    }

    fn from_map(f_of_f: BTreeMap<u64, u64>) -> Self {
        let n = f_of_f.iter().map(|(&i, &f)| i * f).sum();
        let distinct = f_of_f.values().sum();
        let unique = f_of_f.get(&1).copied().unwrap_or(0);
        Self { f_of_f, n, distinct, unique }
    }

    /// `F_i`, zero when absent.
    pub fn f(&self, i: u64) -> u64 {
        self.f_of_f.get(&i).copied().unwrap_or(0)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn distinct(&self) -> u64 {
        self.distinct
    }

    pub fn unique(&self) -> u64 {
        self.unique
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Non-zero `(i, F_i)` entries in increasing `i`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.f_of_f.iter().map(|(&i, &f)| (i, f))
    }

    /// Number of samples whose token occurs at least `j` times: Σ_{i≥j} i·F_i.
    pub fn mass_at_least(&self, j: u64) -> u64 {
        self.f_of_f.range(j..).map(|(&i, &f)| i * f).sum()
    }

    /// Encoding of the corpus in which every sample is repeated `factor` times.
    pub fn repeated(&self, factor: u64) -> Self {
        Self::from_f_of_f(self.iter().map(|(i, f)| (i * factor, f)))
    }
}

/// A loaded corpus: ordered samples, or counts only.
#[derive(Debug, Clone)]
pub enum Corpus {
    Samples(SampleCorpus),
    Table(FrequencyTable),
}

impl Corpus {
    pub fn n(&self) -> u64 {
        match self {
            Self::Samples(s) => s.n(),
            Self::Table(t) => t.n(),
        }
    }

    pub fn frequency_table(&self) -> FrequencyTable {
        match self {
            Self::Samples(s) => s.frequency_table(),
            Self::Table(t) => t.clone(),
        }
    }

    pub fn partition(&self, d: u64, seed: u64) -> Result<Partition, CorpusError> {
        match self {
            Self::Samples(s) => s.partition(d, seed),
            Self::Table(t) => t.partition(d, seed),
        }
    }

    /// False for anonymous count lists, whose tokens cannot match external guesses.
    pub fn has_real_tokens(&self) -> bool {
        let vocab = match self {
            Self::Samples(s) => s.vocabulary(),
            Self::Table(t) => t.vocabulary(),
        };
        !vocab.is_synthetic()
    }
}

/// A random split S → (D₁, D₂).
#[derive(Debug, Clone)]
pub struct Partition {
    d1: FrequencyTable,
    d2: SampleCorpus,
    d: u64,
    seed: u64,
    /// Ranks in D₁ of the D₂ samples that occur in D₁, sorted.
    d2_ranks: Vec<u32>,
}

impl Partition {
    fn assemble(full: &FrequencyTable, d2: Vec<TokenId>, seed: u64) -> Self {
        let mut counts = full.dense_counts();
        for &id in &d2 {
            counts[id as usize] -= 1;
        }
        let d1 = FrequencyTable::from_dense_counts(full.vocab.clone(), &counts);
        let mut d2_ranks: Vec<u32> = d2.iter().filter_map(|&id| d1.rank_of_id(id).map(|r| r as u32)).collect();
        d2_ranks.sort_unstable();
        let d = d2.len() as u64;
        Self { d1, d2: SampleCorpus::from_ids(full.vocab.clone(), d2), d, seed, d2_ranks }
    }

    pub fn d1(&self) -> &FrequencyTable {
        &self.d1
    }

    pub fn d2(&self) -> &SampleCorpus {
        &self.d2
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Size of the original sample.
    pub fn n_total(&self) -> u64 {
        self.d1.n() + self.d
    }

    /// Number of D₂ samples whose token is among the `g` most frequent in D₁.
    pub fn hits_within(&self, g: u64) -> u64 {
        let g = g.min(u32::MAX as u64) as u32;
        self.d2_ranks.partition_point(|&r| r < g) as u64
    }

    /// Number of D₂ samples whose token occurs in D₁ at all.
    pub fn hits_total(&self) -> u64 {
        self.d2_ranks.len() as u64
    }

    /// Recombines D₁ and D₂ into the original multiset.
    pub fn merge(&self) -> FrequencyTable {
        let mut counts = self.d1.dense_counts();
        for &id in self.d2.ids() {
            counts[id as usize] += 1;
        }
        FrequencyTable::from_dense_counts(self.d1.vocab.clone(), &counts)
    }
}

/// Draws `d` of `n` positions without replacement using ChaCha8 seeded with `seed`.
fn pick_positions(n: u64, d: u64, seed: u64) -> Result<Vec<usize>, CorpusError> {
    if d == 0 || d >= n {
        return Err(CorpusError::SplitOutOfRange { d, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, n as usize, d as usize).into_vec())
}

/// Reads a corpus file.
///
/// Blank lines are skipped and a trailing CR is stripped, so CRLF files load
/// identically to LF files.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    read_corpus(BufReader::new(file), format).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io { path: path.display().to_string(), source },
        other => other,
    })
}

/// [`load_corpus`] over any reader.
pub fn read_corpus<R: Read>(reader: R, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let mut reader = BufReader::new(reader);
    let mut buf = Vec::new();
    let mut line_no = 0u64;
    let mut vocab = Vocabulary::new();
    let mut samples: Vec<TokenId> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut anonymous: Vec<u64> = Vec::new();
    loop {
        buf.clear();
        let read =
            reader.read_until(b'\n', &mut buf).map_err(|source| CorpusError::Io { path: String::new(), source })?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let line = strip_eol(&buf);
        if line.is_empty() {
            continue;
        }
        match format {
            CorpusFormat::Plain => samples.push(vocab.intern(line)?),
            CorpusFormat::Counted => {
                let tab = line
                    .iter()
                    .position(|&b| b == b'\t')
                    .ok_or_else(|| CorpusError::Parse { line: line_no, message: "expected count<TAB>token".into() })?;
                let count = parse_count(&line[..tab], line_no)?;
                let id = vocab.intern(&line[tab + 1..])? as usize;
                if id == counts.len() {
                    counts.push(0);
                }
                counts[id] += count;
            }
            CorpusFormat::CountsOnly => anonymous.push(parse_count(line, line_no)?),
        }
    }
    if samples.is_empty() && counts.is_empty() && anonymous.is_empty() {
        return Err(CorpusError::Empty);
    }
    match format {
        CorpusFormat::Plain => Ok(Corpus::Samples(SampleCorpus { vocab: Arc::new(vocab), samples })),
        CorpusFormat::Counted => Ok(Corpus::Table(FrequencyTable::from_dense_counts(Arc::new(vocab), &counts))),
        CorpusFormat::CountsOnly => Ok(Corpus::Table(FrequencyTable::from_anonymous_counts(&anonymous)?)),
    }
}

fn strip_eol(buf: &[u8]) -> &[u8] {
    let line = buf.strip_suffix(b"\n").unwrap_or(buf);
    line.strip_suffix(b"\r").unwrap_or(line)
}

fn parse_count(field: &[u8], line: u64) -> Result<u64, CorpusError> {
    let text = std::str::from_utf8(field)
        .map_err(|_| CorpusError::Parse { line, message: "count is not valid UTF-8".into() })?
        .trim();
    if let Ok(v) = text.parse::<i128>() {
        if v <= 0 {
            return Err(CorpusError::Validation { line, message: format!("count must be positive, got {v}") });
        }
        return u64::try_from(v)
            .map_err(|_| CorpusError::Validation { line, message: format!("count {v} is too large") });
    }
    Err(CorpusError::Parse { line, message: format!("invalid count {text:?}") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(pairs: &[(&str, u64)]) -> FrequencyTable {
        FrequencyTable::from_pairs(pairs.iter().map(|&(t, c)| (t, c))).unwrap()
    }

    #[test]
    fn ranks_ties_bytewise() {
        let t = table(&[("c", 1), ("b", 2), ("a", 2)]);
        let order: Vec<_> = t.iter().map(|(tok, c)| (tok.to_vec(), c)).collect();
        assert_eq!(order, vec![(b"a".to_vec(), 2), (b"b".to_vec(), 2), (b"c".to_vec(), 1)]);
        assert_eq!(t.top_g_set(1), vec![b"a".as_slice()]);
    }

    #[test]
    fn anonymous_tokens_follow_count_order() {
        let counts: Vec<u64> = (1..=12).collect();
        let t = FrequencyTable::from_anonymous_counts(&counts).unwrap();
        let names: Vec<_> = t.iter().map(|(tok, _)| tok.to_vec()).collect();
        assert_eq!(names[0], b"#0");
        assert_eq!(names[10], b"#10");
        assert_eq!(t.ordered_counts().next(), Some(12));
        assert!(t.vocabulary().is_synthetic());
    }

    #[test]
    fn encoding_counts() {
        let enc = table(&[("a", 3), ("b", 3), ("c", 3)]).frequency_encoding();
        assert_eq!(enc.f(3), 3);
        assert_eq!(enc.distinct(), 3);
        assert_eq!(enc.unique(), 0);
        assert_eq!(enc.mass_at_least(3), 9);
        assert_eq!(enc.mass_at_least(4), 0);
        assert_eq!(enc.repeated(2).f(6), 3);
    }

    #[test]
    fn parse_count_rejects_bad_values() {
        assert!(matches!(parse_count(b"0", 4), Err(CorpusError::Validation { line: 4, .. })));
        assert!(matches!(parse_count(b"-2", 1), Err(CorpusError::Validation { .. })));
        assert!(matches!(parse_count(b"x", 7), Err(CorpusError::Parse { line: 7, .. })));
        assert_eq!(parse_count(b" 12 ", 1).unwrap(), 12);
    }

    #[test]
    fn split_bounds_checked() {
        let s = SampleCorpus::from_tokens(["a", "b", "c"]).unwrap();
        assert!(matches!(s.partition(0, 1), Err(CorpusError::SplitOutOfRange { .. })));
        assert!(matches!(s.partition(3, 1), Err(CorpusError::SplitOutOfRange { .. })));
        let p = s.partition(1, 1).unwrap();
        assert_eq!((p.d1().n(), p.d2().n()), (2, 1));
    }

    proptest! {
        #[test]
        fn merge_restores_multiset(counts in proptest::collection::vec(1u64..20, 1..30), seed in any::<u64>(), frac in 0.01f64..0.99) {
            let t = FrequencyTable::from_pairs(counts.iter().enumerate().map(|(i, &c)| (format!("t{i}"), c))).unwrap();
            prop_assume!(t.n() >= 2);
            let d = ((t.n() as f64 * frac) as u64).clamp(1, t.n() - 1);
            let p = t.partition(d, seed).unwrap();
            prop_assert_eq!(p.d1().n() + p.d2().n(), t.n());
            prop_assert_eq!(p.merge().frequency_encoding(), t.frequency_encoding());
            let merged: Vec<_> = p.merge().iter().map(|(a, b)| (a.to_vec(), b)).collect();
            let orig: Vec<_> = t.iter().map(|(a, b)| (a.to_vec(), b)).collect();
            prop_assert_eq!(merged, orig);
        }

        #[test]
        fn top_mass_monotone(counts in proptest::collection::vec(1u64..50, 1..40)) {
            let t = FrequencyTable::from_pairs(counts.iter().enumerate().map(|(i, &c)| (format!("t{i}"), c))).unwrap();
            let mut prev = 0.0f64;
            for g in 0..=t.distinct() + 2 {
                let m: f64 = t.top_g_mass(g);
                prop_assert!(m >= prev);
                let direct: u64 = t.top_g_set(g).iter().map(|tok| t.count_of(tok)).sum();
                prop_assert!((m - direct as f64 / t.n() as f64).abs() < 1e-15);
                prev = m;
            }
            prop_assert_eq!(prev, 1.0);
        }

        #[test]
        fn encoding_invariants(counts in proptest::collection::vec(1u64..100, 1..60)) {
            let enc = FrequencyEncoding::from_counts(counts.iter().copied());
            let n: u64 = enc.iter().map(|(i, f)| i * f).sum();
            prop_assert_eq!(n, enc.n());
            prop_assert_eq!(n, counts.iter().sum::<u64>());
            prop_assert_eq!(enc.distinct(), counts.len() as u64);
            prop_assert_eq!(enc.unique(), counts.iter().filter(|&&c| c == 1).count() as u64);
        }
    }
}
