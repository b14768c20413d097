//! HTTP endpoints. See `docs/api.md`.

use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tokio::sync::mpsc;

use mmsum_core::summarizer::{render, ExportFormat};
use mmsum_core::{normalize_topic, Pipeline, PipelineError, PipelineEvent, Preset, SummaryBundle, SummaryConfig, TopicQuery};

use crate::store::RunStore;

/// Builds the pipeline for one run from its seed.
pub type PipelineFactory = Arc<dyn Fn(u64) -> Pipeline + Send + Sync>;

#[derive(Clone)]
pub struct AppState {
    pub pipelines: PipelineFactory,
    pub presets: Arc<Vec<Preset>>,
    pub store: Arc<RunStore>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/summarize", post(summarize))
        .route("/presets", get(presets))
        .route("/health", get(health))
        .route("/download/{file}", get(download))
        .with_state(state)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummarizeRequest {
    pub topic: String,
    #[serde(default)]
    pub preset: Option<String>,
    /// Any subset of SummaryConfig fields.
    #[serde(default)]
    pub overrides: Map<String, Value>,
    #[serde(default)]
    pub stream: bool,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Error body: `{"error": kind, "message": ..., "field"?: ..., "details"?: [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self {
            status: status.as_u16(),
            error: error.into(),
            message: message.into(),
            field: None,
            details: Vec::new(),
        }
    }

    pub fn invalid_field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: Some(field.into()),
            ..Self::new(StatusCode::BAD_REQUEST, "invalid_config", message)
        }
    }

    fn from_pipeline(err: PipelineError) -> Self {
        match err {
            PipelineError::Config(e) => Self::invalid_field(e.field, e.to_string()),
            PipelineError::Retrieval(mmsum_core::retrieval::RetrievalError::AllVerticalsFailed(details)) => Self {
                details,
                ..Self::new(StatusCode::BAD_GATEWAY, "all_verticals_failed", "every search vertical failed")
            },
            PipelineError::Summarize(e) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_summary", e.to_string()),
            PipelineError::TopicEmbedding(e) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "embedding_failed", e.to_string()),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

/// Merges defaults ← preset ← overrides and validates the result.
pub fn resolve_config(
    presets: &[Preset],
    preset: Option<&str>,
    overrides: &Map<String, Value>,
) -> Result<SummaryConfig, ApiError> {
    mmsum_core::resolve_config(presets, preset, overrides).map_err(|e| ApiError::invalid_field(e.field.clone(), e.to_string()))
}

fn parse_request(body: &[u8], presets: &[Preset]) -> Result<(TopicQuery, SummaryConfig, bool), ApiError> {
    let req: SummarizeRequest = serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.to_string()))?;
    let mut topic = normalize_topic(&req.topic).map_err(|e| ApiError::invalid_field("topic", e.to_string()))?;
    if let Some(seed) = req.seed {
        topic = topic.with_seed(seed);
    }
    let config = resolve_config(presets, req.preset.as_deref(), &req.overrides)?;
    Ok((topic, config, req.stream))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Downloads {
    pub markdown: String,
    pub json: String,
}

impl Downloads {
    fn for_run(run_id: &str) -> Self {
        Self {
            markdown: format!("/download/{run_id}.md"),
            json: format!("/download/{run_id}.json"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResponse {
    pub run_id: String,
    pub downloads: Downloads,
    pub bundle: SummaryBundle,
}

async fn summarize(State(state): State<AppState>, body: Bytes) -> Response {
    let (topic, config, stream) = match parse_request(&body, &state.presets) {
        Ok(parsed) => parsed,
        Err(e) => return e.into_response(),
    };
    if stream {
        return Sse::new(event_stream(state, topic, config))
            .keep_alive(KeepAlive::default())
            .into_response();
    }
    let pipeline = (state.pipelines)(topic.seed);
    let result = tokio::task::spawn_blocking(move || pipeline.run(&topic, config, &mut |_| {})).await;
    match result {
        Ok(Ok(bundle)) => {
            let run_id = state.store.insert(bundle.clone());
            Json(RunResponse {
                downloads: Downloads::for_run(&run_id),
                run_id,
                bundle,
            })
            .into_response()
        }
        Ok(Err(e)) => ApiError::from_pipeline(e).into_response(),
        Err(e) => ApiError::internal(format!("pipeline task failed: {e}")).into_response(),
    }
}

/// Progress events, then exactly one `final_bundle` or `error` event.
fn event_stream(state: AppState, topic: TopicQuery, config: SummaryConfig) -> impl Stream<Item = Result<Event, Infallible>> {
    let (tx, rx) = mpsc::unbounded_channel::<Event>();
    let pipeline = (state.pipelines)(topic.seed);
    let progress = tx.clone();
    tokio::spawn(async move {
        let task = tokio::task::spawn_blocking(move || {
            pipeline.run(&topic, config, &mut |ev| {
                let _ = progress.send(progress_event(&ev));
            })
        });
        let terminal = match task.await {
            Ok(Ok(bundle)) => {
                let run_id = state.store.insert(bundle.clone());
                json_event(
                    "final_bundle",
                    &RunResponse {
                        downloads: Downloads::for_run(&run_id),
                        run_id,
                        bundle,
                    },
                )
            }
            Ok(Err(e)) => json_event("error", &ApiError::from_pipeline(e)),
            Err(e) => json_event("error", &ApiError::internal(format!("pipeline task failed: {e}"))),
        };
        let _ = tx.send(terminal);
    });
    futures::stream::unfold(rx, |mut rx| async move { rx.recv().await.map(|ev| (Ok(ev), rx)) })
}

fn json_event<T: Serialize>(name: &str, payload: &T) -> Event {
    Event::default()
        .event(name)
        .data(serde_json::to_string(payload).expect("event serializes"))
}

fn progress_event(ev: &PipelineEvent) -> Event {
    let name = match ev {
        PipelineEvent::StageStarted { .. } => "stage_started",
        PipelineEvent::StageCompleted { .. } => "stage_completed",
        PipelineEvent::PartialSelection { .. } => "partial_selection",
    };
    json_event(name, ev)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetInfo {
    pub name: String,
    pub description: String,
    pub config: SummaryConfig,
}

async fn presets(State(state): State<AppState>) -> Json<Vec<PresetInfo>> {
    Json(
        state
            .presets
            .iter()
            .map(|p| PresetInfo {
                name: p.name.clone(),
                description: p.description.clone(),
                config: p.config.clone(),
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub ready: bool,
    pub provider: String,
    pub embedder: String,
    pub captioner: String,
    pub stored_runs: usize,
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    let p = (state.pipelines)(mmsum_core::domain::DEFAULT_SEED);
    Json(Health {
        ready: true,
        provider: p.provider.provider_id().to_string(),
        embedder: p.embedder.provider_id().to_string(),
        captioner: p.captioner.captioner_id().to_string(),
        stored_runs: state.store.len(),
    })
}

async fn download(State(state): State<AppState>, Path(file): Path<String>) -> Response {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no stored run for `{file}`"));
    let Some((run_id, ext)) = file.rsplit_once('.') else {
        return not_found().into_response();
    };
    let Some(format) = ExportFormat::from_extension(ext) else {
        return not_found().into_response();
    };
    let Some(bundle) = state.store.get(run_id) else {
        return not_found().into_response();
    };
    let content_type = match format {
        ExportFormat::Markdown => "text/markdown; charset=utf-8",
        ExportFormat::Json => "application/json",
    };
    (
        [
            (header::CONTENT_TYPE, content_type.to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{file}\"")),
        ],
        render(&bundle, format),
    )
        .into_response()
}
