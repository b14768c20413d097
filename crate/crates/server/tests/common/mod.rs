#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;

use mmsum_core::captioning::{Captioner, StubCaptioner};
use mmsum_core::domain::builtin_presets;
use mmsum_core::retrieval::{FixtureCorpus, ProviderError, SearchHit, SearchProvider, Vertical};
use mmsum_core::{default_fixture_dir, Pipeline, TopicQuery};
use mmsum_server::api::{router, AppState, PipelineFactory};
use mmsum_server::store::RunStore;

pub fn corpus() -> Arc<FixtureCorpus> {
    Arc::new(FixtureCorpus::load_dir(default_fixture_dir()).expect("fixture corpus"))
}

pub fn state_with(factory: PipelineFactory, capacity: usize) -> AppState {
    AppState {
        pipelines: factory,
        presets: Arc::new(builtin_presets()),
        store: Arc::new(RunStore::in_memory(capacity)),
    }
}

pub fn fixture_state() -> AppState {
    let corpus = corpus();
    state_with(Arc::new(move |seed| Pipeline::offline(corpus.clone(), seed)), 8)
}

/// Provider whose every vertical fails.
pub struct DownProvider;

impl SearchProvider for DownProvider {
    fn provider_id(&self) -> &str {
        "down"
    }
    fn capabilities(&self) -> &[Vertical] {
        &Vertical::ALL
    }
    fn search(&self, _q: &str, _v: Vertical, _n: usize) -> Result<Vec<SearchHit>, ProviderError> {
        Err(ProviderError::Timeout)
    }
}

pub fn down_state() -> AppState {
    let corpus = corpus();
    state_with(
        Arc::new(move |seed| {
            let mut p = Pipeline::offline(corpus.clone(), seed);
            p.provider = Arc::new(DownProvider);
            p
        }),
        8,
    )
}

/// Stub captioner that counts invocations.
#[derive(Default)]
pub struct CountingCaptioner {
    pub calls: AtomicUsize,
}

impl Captioner for CountingCaptioner {
    fn captioner_id(&self) -> &str {
        "counting"
    }
    fn caption(&self, bytes: &[u8], topic: &TopicQuery) -> Result<String, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        StubCaptioner.caption(bytes, topic)
    }
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<serde_json::Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&b).unwrap())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub fn app(state: AppState) -> Router {
    router(state)
}

/// (event name, parsed data) for every SSE frame.
pub fn parse_sse(body: &[u8]) -> Vec<(String, serde_json::Value)> {
    let text = String::from_utf8_lossy(body);
    text.split("\n\n")
        .filter_map(|frame| {
            let mut event = None;
            let mut data = String::new();
            for line in frame.lines() {
                if let Some(e) = line.strip_prefix("event:") {
                    event = Some(e.trim().to_string());
                } else if let Some(d) = line.strip_prefix("data:") {
                    data.push_str(d.strip_prefix(' ').unwrap_or(d));
                }
            }
            Some((event?, serde_json::from_str(&data).ok()?))
        })
        .collect()
}
