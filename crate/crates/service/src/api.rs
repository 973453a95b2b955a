//! Request and response bodies and the route handlers.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use proofrank_core::{
    correlation_experiment, mine_corpus, mine_pairs, render_dataset, split_by_file, top_k,
    AnalysisError, Bm25Params, Bm25Scorer, Corpus, CorpusError, Diagnostic, DistanceParams,
    EmbeddingScorer, EmbeddingStore, GoalEntry, GoalOracle, JaccardScorer, Manifest, MiningConfig,
    MiningMode, MiningStats, Origin, PairsError, RankError, Scorer, SourceFile, SplitAssignment,
    Target, TheoremRecord,
};

use crate::error::ApiError;
use crate::state::{AppState, ReadyCorpus};

type ApiResult<T> = Result<T, ApiError>;

/// Decode a JSON body; an empty body reads as `{}`.
fn parse_body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    let text: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) {
        b"{}"
    } else {
        bytes
    };
    serde_json::from_slice(text).map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandleState {
    Building,
    Ready,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub records: usize,
    pub mined: usize,
    pub files: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHandle {
    pub corpus_id: String,
    pub state: HandleState,
    pub counts: Counts,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mining: Option<MiningStats>,
    pub embeddings_loaded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct UploadFile {
    path: String,
    content: String,
}

#[derive(Debug, Clone, Deserialize)]
struct CreateRequest {
    #[serde(default)]
    files: Vec<UploadFile>,
    #[serde(default)]
    mine: Option<MineRequest>,
}

/// Mining options: `{"mode": "subproofs"}` or `{"mode": "after_k", "k": 2}`,
/// with optional goal-oracle entries.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MineRequest {
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub goals: Vec<GoalEntry>,
}

impl MineRequest {
    fn resolve(&self) -> ApiResult<(MiningMode, Option<GoalOracle>)> {
        let mode = match (self.mode.as_deref().unwrap_or("subproofs"), self.k) {
            ("subproofs", _) => MiningMode::Subproofs,
            ("after_k", Some(k)) => MiningMode::AfterK { k },
            ("after_k", None) => return Err(ApiError::bad_request("mode after_k needs k")),
            (other, _) => {
                return Err(ApiError::bad_request(format!(
                    "unknown mining mode {other}"
                )))
            }
        };
        let goals = (!self.goals.is_empty()).then(|| GoalOracle::from_entries(self.goals.clone()));
        Ok((mode, goals))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineResponse {
    pub mode: MiningMode,
    #[serde(flatten)]
    pub stats: MiningStats,
    pub records: Vec<TheoremRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarRequest {
    pub statement: String,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_scorer")]
    pub scorer: String,
    /// Restrict the pool to one source file.
    #[serde(default)]
    pub file: Option<String>,
    /// Explicit target embedding for the `embedding` scorer.
    #[serde(default)]
    pub vector: Option<Vec<f64>>,
    /// `"jaccard"` scores pairs with missing embeddings lexically.
    #[serde(default)]
    pub fallback: Option<String>,
}

fn default_k() -> usize {
    15
}

fn default_scorer() -> String {
    "jaccard".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarItem {
    pub id: String,
    pub name: String,
    pub statement: String,
    pub proof: Vec<String>,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsResponse {
    pub manifest: Manifest,
    pub splits: SplitAssignment,
    pub split_warnings: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub(crate) struct CorrelationQuery {
    #[serde(default = "default_scorer")]
    scorer: String,
}

pub(crate) async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "corpora_count": state.corpora_count(),
    }))
}

pub(crate) async fn create_corpus(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: CreateRequest = parse_body(&body)?;
    if req.files.is_empty() {
        return Err(ApiError::unprocessable("empty_corpus", "no files uploaded"));
    }
    let (mode, goals) = match &req.mine {
        Some(m) => {
            let (mode, goals) = m.resolve()?;
            (Some(mode), goals)
        }
        None => (None, None),
    };
    let sources: Vec<SourceFile> = req
        .files
        .into_iter()
        .map(|f| SourceFile::new(f.path, f.content))
        .collect();
    let n_files = sources.len();
    let corpus = blocking(move || {
        Corpus::from_sources(&sources).map_err(|e| match e {
            CorpusError::DuplicateId(_) | CorpusError::DuplicateFile(_) => {
                ApiError::unprocessable("invalid_corpus", e.to_string())
            }
            other => ApiError::internal(other.to_string()),
        })
    })
    .await?;
    if corpus.is_empty() {
        return Err(ApiError::unprocessable(
            "empty_corpus",
            "no theorems found in the uploaded files",
        ));
    }
    let id = state.register(n_files, corpus.len(), corpus.diagnostics().to_vec())?;
    tracing::info!(corpus = %id, records = corpus.len(), "corpus registered");

    let handle = state.handle(&id)?;
    let worker_state = state.clone();
    let worker_id = id.clone();
    tokio::task::spawn_blocking(move || {
        let outcome = build(corpus, mode, goals.as_ref());
        if let Err(e) = &outcome {
            tracing::warn!(corpus = %worker_id, error = %e, "build failed");
        }
        worker_state.finish(&worker_id, outcome);
    });
    Ok((StatusCode::ACCEPTED, Json(handle)).into_response())
}

fn build(
    mut corpus: Corpus,
    mode: Option<MiningMode>,
    goals: Option<&GoalOracle>,
) -> Result<ReadyCorpus, String> {
    let mining = match mode {
        Some(mode) => Some(corpus.mine(mode, goals).map_err(|e| e.to_string())?),
        None => None,
    };
    let bm25 = Bm25Scorer::new(&corpus, Bm25Params::default()).map_err(|e| e.to_string())?;
    Ok(ReadyCorpus {
        corpus,
        bm25,
        mining,
    })
}

pub(crate) async fn get_corpus(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<CorpusHandle>> {
    state.handle(&id).map(Json)
}

fn rank_error(e: RankError) -> ApiError {
    match e {
        RankError::EmbeddingMissing(id) => {
            ApiError::unprocessable("embedding_missing", format!("no embedding for {id}"))
        }
        RankError::EmptyPool => ApiError::unprocessable("empty_pool", "candidate pool is empty"),
        RankError::InvalidK => ApiError::bad_request("k must be at least 1"),
        RankError::DimMismatch { .. } => ApiError::unprocessable("dim_mismatch", e.to_string()),
        other => ApiError::internal(other.to_string()),
    }
}

/// Rank a statement against a ready corpus.
pub fn rank_similar(
    corpus: &Corpus,
    bm25: &Bm25Scorer,
    embeddings: Option<Arc<EmbeddingStore>>,
    req: &SimilarRequest,
) -> ApiResult<Vec<SimilarItem>> {
    if req.k == 0 {
        return Err(ApiError::bad_request("k must be at least 1"));
    }
    let fallback = match req.fallback.as_deref() {
        None => false,
        Some("jaccard") => true,
        Some(other) => return Err(ApiError::bad_request(format!("unknown fallback {other}"))),
    };
    let embedding_scorer;
    let scorer: &dyn Scorer = match req.scorer.as_str() {
        "jaccard" => &JaccardScorer,
        "bm25" => bm25,
        "embedding" => {
            let store = embeddings.ok_or_else(|| {
                ApiError::unprocessable("embedding_missing", "no embedding store loaded")
            })?;
            let s = EmbeddingScorer::new(store);
            embedding_scorer = if fallback {
                s.with_jaccard_fallback()
            } else {
                s
            };
            &embedding_scorer
        }
        other => return Err(ApiError::bad_request(format!("unknown scorer {other}"))),
    };
    let pool: Vec<&TheoremRecord> = corpus
        .records()
        .iter()
        .filter(|r| req.file.as_deref().is_none_or(|f| r.file == f))
        .collect();
    let mut target = Target::from_statement(&req.statement);
    target.vector = req.vector.clone();
    let ranked = top_k(scorer, &target, &pool, req.k).map_err(rank_error)?;
    Ok(ranked
        .into_iter()
        .map(|r| {
            let rec = corpus.get(&r.record_id).expect("ranked id in corpus");
            SimilarItem {
                id: rec.id.clone(),
                name: rec.name.clone(),
                statement: rec.statement_text.clone(),
                proof: rec.proof.sentences(),
                score: r.score,
                rank: r.rank,
            }
        })
        .collect())
}

pub(crate) async fn similar(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Vec<SimilarItem>>> {
    let req: SimilarRequest = parse_body(&body)?;
    let (ready, embeddings) = state.ready(&id)?;
    blocking(move || rank_similar(&ready.corpus, &ready.bm25, embeddings, &req))
        .await
        .map(Json)
}

pub(crate) async fn mine(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<MineResponse>> {
    let req: MineRequest = parse_body(&body)?;
    let (mode, goals) = req.resolve()?;
    let (ready, _) = state.ready(&id)?;
    blocking(move || {
        let originals: Vec<TheoremRecord> = ready
            .corpus
            .records()
            .iter()
            .filter(|r| r.origin == Origin::Original)
            .cloned()
            .collect();
        let (records, stats) = mine_corpus(&originals, mode, goals.as_ref());
        Ok(MineResponse {
            mode,
            stats,
            records,
        })
    })
    .await
    .map(Json)
}

pub(crate) async fn pairs(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<PairsResponse>> {
    let config: MiningConfig = parse_body(&body)?;
    config
        .validate()
        .map_err(|e| ApiError::unprocessable("invalid_config", e.to_string()))?;
    let (ready, _) = state.ready(&id)?;
    blocking(move || {
        let corpus = &ready.corpus;
        let set = mine_pairs(corpus, &config)
            .map_err(|e| ApiError::unprocessable("invalid_config", e.to_string()))?;
        let (splits, split_warnings) = match split_by_file(corpus, &config) {
            Ok((splits, diags)) => (splits, diags.iter().map(ToString::to_string).collect()),
            Err(e @ PairsError::TooFewFiles { .. }) => {
                (SplitAssignment::default(), vec![e.to_string()])
            }
            Err(e) => return Err(ApiError::unprocessable("invalid_config", e.to_string())),
        };
        let (_, manifest) = render_dataset(corpus, &set, &splits, &config);
        Ok(PairsResponse {
            manifest,
            splits,
            split_warnings,
        })
    })
    .await
    .map(Json)
}

pub(crate) async fn correlation(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<CorrelationQuery>,
) -> ApiResult<Response> {
    let (ready, _) = state.ready(&id)?;
    let report = blocking(move || {
        let scorer: &dyn Scorer = match query.scorer.as_str() {
            "jaccard" => &JaccardScorer,
            "bm25" => &ready.bm25,
            other => return Err(ApiError::bad_request(format!("unknown scorer {other}"))),
        };
        correlation_experiment(&ready.corpus, scorer, &DistanceParams::default()).map_err(|e| {
            match e {
                AnalysisError::DegenerateInput(m) => ApiError::unprocessable("degenerate", m),
                other => ApiError::internal(other.to_string()),
            }
        })
    })
    .await?;
    Ok(Json(report).into_response())
}

pub(crate) async fn put_embeddings(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<HashMap<&'static str, serde_json::Value>>> {
    state.handle(&id)?;
    let text =
        std::str::from_utf8(&body).map_err(|_| ApiError::bad_request("body is not UTF-8"))?;
    let store = EmbeddingStore::from_jsonl(text).map_err(|e| match e {
        RankError::Malformed(m) => ApiError::bad_request(m),
        other => ApiError::unprocessable("invalid_embeddings", other.to_string()),
    })?;
    let (dim, count) = (store.dim(), store.len());
    state.attach_embeddings(&id, Arc::new(store))?;
    Ok(Json(HashMap::from([
        ("corpus_id", id.into()),
        ("dim", dim.into()),
        ("count", count.into()),
    ])))
}
