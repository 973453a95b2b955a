use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use proofrank_core::{Bm25Scorer, Corpus, Diagnostic, EmbeddingStore, MiningStats};

use crate::api::{CorpusHandle, Counts, HandleState};
use crate::error::ApiError;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_corpora: usize,
    pub request_timeout: Duration,
    /// Store used by corpora that have none of their own.
    pub embeddings: Option<Arc<EmbeddingStore>>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_corpora: 64,
            request_timeout: crate::DEFAULT_TIMEOUT,
            embeddings: None,
        }
    }
}

/// A built corpus with its search index.
pub(crate) struct ReadyCorpus {
    pub corpus: Corpus,
    pub bm25: Bm25Scorer,
    pub mining: Option<MiningStats>,
}

pub(crate) enum SlotState {
    Building,
    Ready(Arc<ReadyCorpus>),
    Failed(String),
}

pub(crate) struct Slot {
    pub state: SlotState,
    pub n_files: usize,
    pub n_records_parsed: usize,
    pub diagnostics: Vec<Diagnostic>,
    pub embeddings: Option<Arc<EmbeddingStore>>,
}

/// Shared registry of corpora.
pub struct AppState {
    config: ServiceConfig,
    corpora: RwLock<HashMap<String, Slot>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self {
            config,
            corpora: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn corpora_count(&self) -> usize {
        self.corpora.read().expect("registry lock").len()
    }

    /// Register a new corpus in state `Building`.
    pub(crate) fn register(
        &self,
        n_files: usize,
        n_records_parsed: usize,
        diagnostics: Vec<Diagnostic>,
    ) -> Result<String, ApiError> {
        let mut map = self.corpora.write().expect("registry lock");
        if map.len() >= self.config.max_corpora {
            return Err(ApiError::new(
                axum::http::StatusCode::SERVICE_UNAVAILABLE,
                "capacity",
                format!("corpus limit of {} reached", self.config.max_corpora),
            ));
        }
        let id = format!("c{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        map.insert(
            id.clone(),
            Slot {
                state: SlotState::Building,
                n_files,
                n_records_parsed,
                diagnostics,
                embeddings: None,
            },
        );
        Ok(id)
    }

    pub(crate) fn finish(&self, id: &str, outcome: Result<ReadyCorpus, String>) {
        let mut map = self.corpora.write().expect("registry lock");
        if let Some(slot) = map.get_mut(id) {
            slot.state = match outcome {
                Ok(ready) => SlotState::Ready(Arc::new(ready)),
                Err(e) => SlotState::Failed(e),
            };
        }
    }

    pub(crate) fn handle(&self, id: &str) -> Result<CorpusHandle, ApiError> {
        let map = self.corpora.read().expect("registry lock");
        let slot = map.get(id).ok_or_else(|| ApiError::not_found(id))?;
        let (state, counts, mining, error) = match &slot.state {
            SlotState::Building => (
                HandleState::Building,
                Counts {
                    records: slot.n_records_parsed,
                    mined: 0,
                    files: slot.n_files,
                },
                None,
                None,
            ),
            SlotState::Ready(ready) => (
                HandleState::Ready,
                Counts {
                    records: ready.corpus.len(),
                    mined: ready.mining.as_ref().map_or(0, |m| m.n_mined),
                    files: slot.n_files,
                },
                ready.mining.clone(),
                None,
            ),
            SlotState::Failed(e) => (
                HandleState::Failed,
                Counts {
                    records: slot.n_records_parsed,
                    mined: 0,
                    files: slot.n_files,
                },
                None,
                Some(e.clone()),
            ),
        };
        Ok(CorpusHandle {
            corpus_id: id.to_string(),
            state,
            counts,
            diagnostics: slot.diagnostics.clone(),
            mining,
            embeddings_loaded: slot.embeddings.is_some(),
            error,
        })
    }

    /// The ready corpus and its effective embedding store.
    pub(crate) fn ready(
        &self,
        id: &str,
    ) -> Result<(Arc<ReadyCorpus>, Option<Arc<EmbeddingStore>>), ApiError> {
        let map = self.corpora.read().expect("registry lock");
        let slot = map.get(id).ok_or_else(|| ApiError::not_found(id))?;
        match &slot.state {
            SlotState::Ready(ready) => Ok((
                ready.clone(),
                slot.embeddings
                    .clone()
                    .or_else(|| self.config.embeddings.clone()),
            )),
            SlotState::Building => Err(ApiError::not_ready(id, "building")),
            SlotState::Failed(_) => Err(ApiError::not_ready(id, "failed")),
        }
    }

    pub(crate) fn attach_embeddings(
        &self,
        id: &str,
        store: Arc<EmbeddingStore>,
    ) -> Result<(), ApiError> {
        let mut map = self.corpora.write().expect("registry lock");
        let slot = map.get_mut(id).ok_or_else(|| ApiError::not_found(id))?;
        slot.embeddings = Some(store);
        Ok(())
    }
}
