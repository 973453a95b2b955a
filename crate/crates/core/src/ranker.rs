//! Premise selection: statement scorers, `top_k` retrieval and ranker
//! evaluation against proof distance with a threshold generator.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::metrics::{
    jaccard_statement_similarity, proof_distance_noise_free, Bm25Index, Bm25Params, DistanceParams,
    MetricsError,
};
use crate::parser::{tokenize_statement, TheoremRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("no embedding for {0}")]
    EmbeddingMissing(String),
    #[error("vector {id} has dimension {found}, expected {expected}")]
    DimMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("vector {id} has norm {norm}, expected 1")]
    NotNormalized { id: String, norm: f64 },
    #[error("malformed embedding store: {0}")]
    Malformed(String),
    #[error("solve threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// A statement to find premises for.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    /// Corpus id when the target is itself a corpus record; excluded from
    /// its own pool.
    pub id: Option<String>,
    pub statement: String,
    pub tokens: Vec<String>,
    /// Explicit embedding, overriding any store lookup.
    pub vector: Option<Vec<f64>>,
}

impl Target {
    pub fn from_statement(statement: &str) -> Self {
        Self {
            id: None,
            statement: statement.to_string(),
            tokens: tokenize_statement(statement),
            vector: None,
        }
    }

    pub fn from_record(record: &TheoremRecord) -> Self {
        Self {
            id: Some(record.id.clone()),
            statement: record.statement_text.clone(),
            tokens: record.tokens().to_vec(),
            vector: None,
        }
    }
}

/// A relevance function over (target, candidate); higher is more relevant.
pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, target: &Target, candidate: &TheoremRecord) -> Result<f64, RankError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct JaccardScorer;

impl Scorer for JaccardScorer {
    fn name(&self) -> &str {
        "jaccard"
    }

    fn score(&self, target: &Target, candidate: &TheoremRecord) -> Result<f64, RankError> {
        Ok(jaccard_statement_similarity(
            &target.tokens,
            candidate.tokens(),
        ))
    }
}

/// BM25 with document statistics taken from a fixed corpus.
#[derive(Debug, Clone)]
pub struct Bm25Scorer {
    index: Bm25Index,
}

impl Bm25Scorer {
    pub fn new(corpus: &Corpus, params: Bm25Params) -> Result<Self, RankError> {
        let docs: Vec<&[String]> = corpus.records().iter().map(TheoremRecord::tokens).collect();
        Ok(Self {
            index: Bm25Index::new(&docs, params)?,
        })
    }
}

impl Scorer for Bm25Scorer {
    fn name(&self) -> &str {
        "bm25"
    }

    fn score(&self, target: &Target, candidate: &TheoremRecord) -> Result<f64, RankError> {
        Ok(self.index.score(&target.tokens, candidate.tokens()))
    }
}

/// Store key for a statement without a record id: `stmt:` and the SHA-256
/// of the whitespace-collapsed statement.
pub fn statement_key(statement: &str) -> String {
    let collapsed = statement.split_whitespace().collect::<Vec<_>>().join(" ");
    format!("stmt:{}", hex::encode(Sha256::digest(collapsed.as_bytes())))
}

#[derive(Serialize, Deserialize)]
struct StoreHeader {
    dim: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct StoreLine {
    id: String,
    vector: Vec<f64>,
}

const NORM_TOLERANCE: f64 = 1e-6;

/// Unit-norm statement vectors keyed by record id or [`statement_key`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(
        dim: usize,
        entries: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self, RankError> {
        if dim == 0 {
            return Err(RankError::Malformed("dim must be positive".into()));
        }
        let mut vectors = HashMap::new();
        for (id, v) in entries {
            if v.len() != dim {
                return Err(RankError::DimMismatch {
                    id,
                    expected: dim,
                    found: v.len(),
                });
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm.is_nan() || (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(RankError::NotNormalized { id, norm });
            }
            if vectors.insert(id.clone(), v).is_some() {
                return Err(RankError::Malformed(format!("duplicate id {id}")));
            }
        }
        Ok(Self { dim, vectors })
    }

    /// Parse the JSON-lines store: a `{"dim", "count"}` header, then one
    /// `{"id", "vector"}` object per line.
    pub fn from_jsonl(text: &str) -> Result<Self, RankError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| RankError::Malformed("missing header".into()))?;
        let header: StoreHeader = serde_json::from_str(first)
            .map_err(|e| RankError::Malformed(format!("line 1: {e}")))?;
        let mut entries = Vec::new();
        for (n, line) in lines {
            let entry: StoreLine = serde_json::from_str(line)
                .map_err(|e| RankError::Malformed(format!("line {}: {e}", n + 1)))?;
            entries.push((entry.id, entry.vector));
        }
        if entries.len() != header.count {
            return Err(RankError::Malformed(format!(
                "header announces {} vectors, found {}",
                header.count,
                entries.len()
            )));
        }
        Self::new(header.dim, entries)
    }

    /// Inverse of [`EmbeddingStore::from_jsonl`], ids sorted.
    pub fn to_jsonl(&self) -> String {
        let mut ids: Vec<&String> = self.vectors.keys().collect();
        ids.sort();
        let mut out = serde_json::to_string(&StoreHeader {
            dim: self.dim,
            count: ids.len(),
        })
        .expect("header");
        out.push('\n');
        for id in ids {
            let line = StoreLine {
                id: id.clone(),
                vector: self.vectors[id].clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("line"));
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    /// Vector for a record: by id, then by statement key.
    pub fn for_record(&self, record: &TheoremRecord) -> Option<&[f64]> {
        self.get(&record.id)
            .or_else(|| self.get(&statement_key(&record.statement_text)))
    }

    pub fn for_target(&self, target: &Target) -> Option<&[f64]> {
        target
            .id
            .as_deref()
            .and_then(|id| self.get(id))
            .or_else(|| self.get(&statement_key(&target.statement)))
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingStore, RankError> {
    let text =
        fs::read_to_string(path).map_err(|e| RankError::Io(format!("{}: {e}", path.display())))?;
    EmbeddingStore::from_jsonl(&text)
}

/// Cosine similarity of statement embeddings. Missing vectors are an error
/// unless the Jaccard fallback is enabled.
#[derive(Debug, Clone)]
pub struct EmbeddingScorer {
    store: std::sync::Arc<EmbeddingStore>,
    fallback: bool,
}

impl EmbeddingScorer {
    pub fn new(store: std::sync::Arc<EmbeddingStore>) -> Self {
        Self {
            store,
            fallback: false,
        }
    }

    pub fn with_jaccard_fallback(mut self) -> Self {
        self.fallback = true;
        self
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

impl Scorer for EmbeddingScorer {
    fn name(&self) -> &str {
        "embedding"
    }

    fn score(&self, target: &Target, candidate: &TheoremRecord) -> Result<f64, RankError> {
        let t = target
            .vector
            .as_deref()
            .or_else(|| self.store.for_target(target));
        let c = self.store.for_record(candidate);
        match (t, c) {
            (Some(t), Some(c)) if t.len() == c.len() => Ok(cosine(t, c)),
            (Some(t), Some(c)) => Err(RankError::DimMismatch {
                id: target
                    .id
                    .clone()
                    .unwrap_or_else(|| statement_key(&target.statement)),
                expected: c.len(),
                found: t.len(),
            }),
            _ if self.fallback => JaccardScorer.score(target, candidate),
            (None, _) => Err(RankError::EmbeddingMissing(
                target
                    .id
                    .clone()
                    .unwrap_or_else(|| statement_key(&target.statement)),
            )),
            (_, None) => Err(RankError::EmbeddingMissing(candidate.id.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub record_id: String,
    pub score: f64,
    pub rank: usize,
}

/// The `k` best candidates, score descending, ties by ascending id. The
/// target's own record is never returned.
pub fn top_k(
    scorer: &dyn Scorer,
    target: &Target,
    pool: &[&TheoremRecord],
    k: usize,
) -> Result<Vec<RankedResult>, RankError> {
    if k == 0 {
        return Err(RankError::InvalidK);
    }
    let mut scored = Vec::with_capacity(pool.len());
    for r in pool {
        if target.id.as_deref() == Some(r.id.as_str()) {
            continue;
        }
        scored.push((scorer.score(target, r)?, r.id.as_str()));
    }
    if scored.is_empty() {
        return Err(RankError::EmptyPool);
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (score, id))| RankedResult {
            record_id: id.to_string(),
            score,
            rank: i + 1,
        })
        .collect())
}

/// Stand-in for a proof generator: it succeeds when some retrieved proof is
/// within `delta` of the target's own proof.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MockGenerator {
    pub delta: f64,
}

impl MockGenerator {
    pub fn new(delta: f64) -> Result<Self, RankError> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(RankError::InvalidThreshold(delta));
        }
        Ok(Self { delta })
    }

    pub fn solves(&self, min_distance: f64) -> bool {
        min_distance <= self.delta
    }
}

pub const DEFAULT_EVAL_K: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub scorer: String,
    pub k: usize,
    pub delta: f64,
    pub n_targets: usize,
    /// Targets whose same-file pool was empty.
    pub n_skipped: usize,
    pub n_solved: usize,
    pub solve_rate: f64,
    pub mean_min_distance: f64,
}

/// Every record is a target ranked against the rest of its file.
pub fn evaluate_ranker(
    corpus: &Corpus,
    scorer: &dyn Scorer,
    k: usize,
    distance_params: &DistanceParams,
    generator: MockGenerator,
) -> Result<EvaluationReport, RankError> {
    if k == 0 {
        return Err(RankError::InvalidK);
    }
    let records = corpus.records();
    let pools = corpus.pools_by_file();
    let alpha = distance_params.alpha;
    let outcomes: Vec<Option<f64>> = (0..records.len())
        .into_par_iter()
        .map(|i| {
            let target_record = &records[i];
            let pool: Vec<&TheoremRecord> = pools[target_record.file.as_str()]
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| &records[j])
                .collect();
            if pool.is_empty() {
                return Ok(None);
            }
            let target = Target::from_record(target_record);
            let ranked = top_k(scorer, &target, &pool, k)?;
            let min = ranked
                .iter()
                .map(|r| {
                    let cand = corpus.get(&r.record_id).expect("ranked id in corpus");
                    proof_distance_noise_free(&cand.proof, &target_record.proof, alpha)
                })
                .fold(f64::INFINITY, f64::min);
            Ok(Some(min))
        })
        .collect::<Result<_, RankError>>()?;
    let mins: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let n_solved = mins.iter().filter(|&&d| generator.solves(d)).count();
    let n = mins.len();
    Ok(EvaluationReport {
        scorer: scorer.name().to_string(),
        k,
        delta: generator.delta,
        n_targets: n,
        n_skipped: records.len() - n,
        n_solved,
        solve_rate: if n == 0 {
            0.0
        } else {
            n_solved as f64 / n as f64
        },
        mean_min_distance: if n == 0 {
            0.0
        } else {
            mins.iter().sum::<f64>() / n as f64
        },
    })
}
