//! HTTP front-end for the proof-corpus engine.
//!
//! Corpora are process-resident. An upload is parsed synchronously, then
//! mined and indexed on a blocking worker; the corpus becomes visible to
//! read endpoints only once it is `ready`, and is immutable from then on.
//! Embedding stores can be attached to a corpus at any time.

mod api;
mod error;
mod state;

use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use axum::error_handling::HandleErrorLayer;
use axum::http::StatusCode;
use axum::routing::{get, post, put};
use axum::{BoxError, Router};
use tower::ServiceBuilder;

pub use api::{
    rank_similar, CorpusHandle, Counts, HandleState, MineRequest, MineResponse, PairsResponse,
    SimilarItem, SimilarRequest,
};
pub use error::ApiError;
pub use state::{AppState, ServiceConfig};

pub const DEFAULT_PORT: u16 = 7711;

/// The full route table with the request timeout applied.
pub fn router(state: Arc<AppState>) -> Router {
    let timeout = state.config().request_timeout;
    Router::new()
        .route("/health", get(api::health))
        .route("/v1/corpora", post(api::create_corpus))
        .route("/v1/corpora/{id}", get(api::get_corpus))
        .route("/v1/corpora/{id}/similar", post(api::similar))
        .route("/v1/corpora/{id}/mine", post(api::mine))
        .route("/v1/corpora/{id}/pairs", post(api::pairs))
        .route("/v1/corpora/{id}/correlation", get(api::correlation))
        .route("/v1/corpora/{id}/embeddings", put(api::put_embeddings))
        .layer(
            ServiceBuilder::new()
                .layer(HandleErrorLayer::new(|err: BoxError| async move {
                    if err.is::<tower::timeout::error::Elapsed>() {
                        ApiError::new(
                            StatusCode::SERVICE_UNAVAILABLE,
                            "timeout",
                            "request timed out",
                        )
                    } else {
                        ApiError::new(
                            StatusCode::INTERNAL_SERVER_ERROR,
                            "internal",
                            err.to_string(),
                        )
                    }
                }))
                .timeout(timeout),
        )
        .with_state(state)
}

/// Serve on an already bound listener until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Default per-request timeout.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
