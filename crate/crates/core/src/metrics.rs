//! Proof and statement similarity measures.
//!
//! Proof distances work on tactic texts only; bullet and brace markers are
//! structure, not content, and are ignored here.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::{Tactic, TacticSequence};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("BM25 needs a non-empty corpus")]
    EmptyCorpus,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Constants of the blended proof distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceParams {
    /// Weight of the Levenshtein term; the Jaccard term gets `1 - alpha`.
    pub alpha: f64,
    /// Half-width of the uniform noise added to every distance.
    pub noise_amplitude: f64,
    pub rng_seed: u64,
}

impl Default for DistanceParams {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            noise_amplitude: 1e-3,
            rng_seed: 0,
        }
    }
}

impl DistanceParams {
    pub fn noise_free(self) -> Self {
        Self {
            noise_amplitude: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(MetricsError::InvalidParams(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(0.0..0.01).contains(&self.noise_amplitude) {
            return Err(MetricsError::InvalidParams(format!(
                "noise amplitude must lie in [0, 0.01), got {}",
                self.noise_amplitude
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.k1.is_nan() || self.k1 <= 0.0 || !(0.0..=1.0).contains(&self.b) {
            return Err(MetricsError::InvalidParams(format!(
                "BM25 needs k1 > 0 and b in [0, 1], got k1={} b={}",
                self.k1, self.b
            )));
        }
        Ok(())
    }
}

/// Unit-cost edit distance over Unicode code points.
pub fn char_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Character edit distance normalised by the longer text, in `[0, 1]`.
pub fn text_substitution_cost(a: &str, b: &str) -> f64 {
    if a == b {
        return 0.0;
    }
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    char_levenshtein(a, b) as f64 / longest as f64
}

pub fn tactic_substitution_cost(t1: &Tactic, t2: &Tactic) -> f64 {
    text_substitution_cost(&t1.text, &t2.text)
}

/// Levenshtein DP over arbitrary items with unit insertion/deletion and a
/// caller-supplied substitution cost. Not normalised.
pub fn weighted_levenshtein<T>(a: &[T], b: &[T], mut sub: impl FnMut(&T, &T) -> f64) -> f64 {
    if a.is_empty() {
        return b.len() as f64;
    }
    let mut prev: Vec<f64> = (0..=b.len()).map(|j| j as f64).collect();
    let mut cur = vec![0.0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = (i + 1) as f64;
        for (j, y) in b.iter().enumerate() {
            let substitute = prev[j] + sub(x, y);
            cur[j + 1] = substitute.min(prev[j + 1] + 1.0).min(cur[j] + 1.0);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Tactic-level edit distance divided by the longer proof length.
pub fn proof_levenshtein(p_i: &TacticSequence, p_j: &TacticSequence) -> f64 {
    let longest = p_i.len().max(p_j.len());
    if longest == 0 {
        return 0.0;
    }
    weighted_levenshtein(&p_i.tactics, &p_j.tactics, tactic_substitution_cost) / longest as f64
}

/// `1 - |A ∩ B| / |A ∪ B|` over the sets of tactic texts.
pub fn jaccard_proof_distance(p_i: &TacticSequence, p_j: &TacticSequence) -> f64 {
    let a: HashSet<&str> = p_i.texts().collect();
    let b: HashSet<&str> = p_j.texts().collect();
    1.0 - jaccard_index(&a, &b)
}

fn jaccard_index<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// `alpha * d_l + (1 - alpha) * d_j + gamma`, clamped to `[0, 1]`.
pub fn blend(d_l: f64, d_j: f64, alpha: f64, gamma: f64) -> f64 {
    (alpha * d_l + (1.0 - alpha) * d_j + gamma).clamp(0.0, 1.0)
}

/// Draw the noise term; no rng state is consumed when the amplitude is zero.
pub fn draw_noise<R: Rng + ?Sized>(amplitude: f64, rng: &mut R) -> f64 {
    if amplitude > 0.0 {
        rng.random_range(-amplitude..=amplitude)
    } else {
        0.0
    }
}

/// Blended proof distance with uniform noise from `rng`.
pub fn proof_distance<R: Rng + ?Sized>(
    p_i: &TacticSequence,
    p_j: &TacticSequence,
    params: &DistanceParams,
    rng: &mut R,
) -> f64 {
    let gamma = draw_noise(params.noise_amplitude, rng);
    blend(
        proof_levenshtein(p_i, p_j),
        jaccard_proof_distance(p_i, p_j),
        params.alpha,
        gamma,
    )
}

/// [`proof_distance`] with the noise term fixed at zero.
pub fn proof_distance_noise_free(p_i: &TacticSequence, p_j: &TacticSequence, alpha: f64) -> f64 {
    blend(
        proof_levenshtein(p_i, p_j),
        jaccard_proof_distance(p_i, p_j),
        alpha,
        0.0,
    )
}

/// Jaccard index of two token lists taken as sets; two empty lists are
/// identical (1).
pub fn jaccard_statement_similarity<S: AsRef<str>>(s1: &[S], s2: &[S]) -> f64 {
    let a: HashSet<&str> = s1.iter().map(AsRef::as_ref).collect();
    let b: HashSet<&str> = s2.iter().map(AsRef::as_ref).collect();
    jaccard_index(&a, &b)
}

/// Okapi BM25 statistics over a fixed document collection.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    n_docs: usize,
    avg_len: f64,
    doc_freq: HashMap<String, usize>,
}

impl Bm25Index {
    pub fn new<D, S>(docs: &[D], params: Bm25Params) -> Result<Self, MetricsError>
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        params.validate()?;
        if docs.is_empty() {
            return Err(MetricsError::EmptyCorpus);
        }
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        let mut total = 0usize;
        for doc in docs {
            let doc = doc.as_ref();
            total += doc.len();
            let unique: HashSet<&str> = doc.iter().map(AsRef::as_ref).collect();
            for t in unique {
                *doc_freq.entry(t.to_string()).or_default() += 1;
            }
        }
        Ok(Self {
            params,
            n_docs: docs.len(),
            avg_len: total as f64 / docs.len() as f64,
            doc_freq,
        })
    }

    /// `ln((N - n + 0.5) / (n + 0.5) + 1)`, never negative.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        let big_n = self.n_docs as f64;
        ((big_n - n + 0.5) / (n + 0.5) + 1.0).ln()
    }

    /// Score of one document; every query token occurrence contributes.
    pub fn score<Q: AsRef<str>, S: AsRef<str>>(&self, query: &[Q], doc: &[S]) -> f64 {
        if doc.is_empty() || query.is_empty() {
            return 0.0;
        }
        let mut tf: HashMap<&str, usize> = HashMap::new();
        for t in doc {
            *tf.entry(t.as_ref()).or_default() += 1;
        }
        let Bm25Params { k1, b } = self.params;
        let len_ratio = if self.avg_len > 0.0 {
            doc.len() as f64 / self.avg_len
        } else {
            1.0
        };
        query
            .iter()
            .filter_map(|q| tf.get(q.as_ref()).map(|&f| (q, f as f64)))
            .map(|(q, f)| {
                self.idf(q.as_ref()) * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * len_ratio))
            })
            .sum()
    }
}

/// BM25 score of every document in `corpus` against `query`.
pub fn bm25_scores<Q, D, S>(
    query: &[Q],
    corpus: &[D],
    params: Bm25Params,
) -> Result<Vec<f64>, MetricsError>
where
    Q: AsRef<str>,
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    let index = Bm25Index::new(corpus, params)?;
    Ok(corpus
        .iter()
        .map(|d| index.score(query, d.as_ref()))
        .collect())
}
