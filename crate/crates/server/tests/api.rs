mod common;

use axum::http::StatusCode;
use serde_json::{json, Value};

use common::*;
use mmsum_core::summarizer::{render, ExportFormat};
use mmsum_server::api::{ApiError, Health, PresetInfo, RunResponse};

#[tokio::test]
async fn summarize_returns_bundle_within_limits() {
    let app = app(fixture_state());
    let (status, body) = call(&app, "POST", "/summarize", Some(json!({"topic": "solar eclipse"}))).await;
    assert_eq!(status, StatusCode::OK);
    let run: RunResponse = serde_json::from_slice(&body).unwrap();
    let b = &run.bundle;
    assert!(!b.selected_segments.is_empty());
    assert!(b.selected_segments.len() <= b.config_used.segment_limit);
    assert!(b
        .selected_segments
        .iter()
        .all(|s| s.score.combined >= b.config_used.min_score));
    assert_eq!(run.downloads.markdown, format!("/download/{}.md", run.run_id));
}

#[tokio::test]
async fn invalid_config_names_the_field() {
    let app = app(fixture_state());
    for (overrides, field) in [
        (json!({"alpha": 2.0}), "alpha"),
        (json!({"alpha": "high"}), "alpha"),
        (json!({"segment_limit": 0}), "segment_limit"),
        (json!({"diversity_lambda": -0.1}), "diversity_lambda"),
        (json!({"alhpa": 0.5}), "alhpa"),
    ] {
        let (status, body) = call(
            &app,
            "POST",
            "/summarize",
            Some(json!({"topic": "solar eclipse", "overrides": overrides})),
        )
        .await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{overrides}");
        let err: ApiError = serde_json::from_slice(&body).unwrap();
        assert_eq!(err.field.as_deref(), Some(field));
        assert_eq!(err.error, "invalid_config");
    }
    let (status, body) = call(&app, "POST", "/summarize", Some(json!({"topic": "x", "preset": "nope"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(serde_json::from_slice::<ApiError>(&body).unwrap().field.as_deref(), Some("preset"));
    let (status, body) = call(&app, "POST", "/summarize", Some(json!({"topic": "   "}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(serde_json::from_slice::<ApiError>(&body).unwrap().field.as_deref(), Some("topic"));
    let (status, _) = call(&app, "POST", "/summarize", Some(json!({"topik": "x"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn all_verticals_failing_is_bad_gateway() {
    let app = app(down_state());
    let (status, body) = call(&app, "POST", "/summarize", Some(json!({"topic": "solar eclipse"}))).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    let err: ApiError = serde_json::from_slice(&body).unwrap();
    assert_eq!(err.error, "all_verticals_failed");
    assert_eq!(err.details.len(), 3);
}

#[tokio::test]
async fn stream_ends_with_one_final_bundle() {
    let app = app(fixture_state());
    let (status, body) = call(
        &app,
        "POST",
        "/summarize",
        Some(json!({"topic": "mars rover", "stream": true})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let events = parse_sse(&body);
    let names: Vec<&str> = events.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names.last(), Some(&"final_bundle"), "{names:?}");
    assert_eq!(names.iter().filter(|n| **n == "final_bundle" || **n == "error").count(), 1);
    assert!(names.iter().filter(|n| **n == "stage_completed").count() >= 4);
    assert!(names.contains(&"partial_selection"));
    let (_, last) = events.last().unwrap();
    assert!(last["run_id"].is_string());
}

#[tokio::test]
async fn stream_failure_ends_with_one_error() {
    let app = app(down_state());
    let (_, body) = call(&app, "POST", "/summarize", Some(json!({"topic": "x", "stream": true}))).await;
    let events = parse_sse(&body);
    let names: Vec<&str> = events.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names.last(), Some(&"error"));
    assert_eq!(names.iter().filter(|n| **n == "final_bundle" || **n == "error").count(), 1);
    assert_eq!(events.last().unwrap().1["error"], "all_verticals_failed");
}

#[tokio::test]
async fn downloads_match_direct_export() {
    let app = app(fixture_state());
    let (_, body) = call(&app, "POST", "/summarize", Some(json!({"topic": "solar eclipse"}))).await;
    let run: RunResponse = serde_json::from_slice(&body).unwrap();
    for format in [ExportFormat::Markdown, ExportFormat::Json] {
        let uri = format!("/download/{}.{}", run.run_id, format.extension());
        let (s1, a) = call(&app, "GET", &uri, None).await;
        let (s2, b) = call(&app, "GET", &uri, None).await;
        assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
        assert_eq!(a, b);
        assert_eq!(a, render(&run.bundle, format));
    }
    let (status, _) = call(&app, "GET", "/download/r999-missing.md", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", &format!("/download/{}.pdf", run.run_id), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn evicted_run_is_not_found() {
    let corpus = corpus();
    let app = app(state_with(
        std::sync::Arc::new(move |seed| mmsum_core::Pipeline::offline(corpus.clone(), seed)),
        1,
    ));
    let (_, first) = call(&app, "POST", "/summarize", Some(json!({"topic": "mars rover"}))).await;
    let first: RunResponse = serde_json::from_slice(&first).unwrap();
    call(&app, "POST", "/summarize", Some(json!({"topic": "solar eclipse"}))).await;
    let (status, _) = call(&app, "GET", &first.downloads.json, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn presets_and_health() {
    let app = app(fixture_state());
    let (status, body) = call(&app, "GET", "/presets", None).await;
    assert_eq!(status, StatusCode::OK);
    let presets: Vec<PresetInfo> = serde_json::from_slice(&body).unwrap();
    let fast = presets.iter().find(|p| p.name == "fast").unwrap();
    assert!(fast.config.fast_mode && !fast.config.captioning_enabled);

    let (status, body) = call(&app, "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    let health: Health = serde_json::from_slice(&body).unwrap();
    assert!(health.ready);
    assert_eq!(health.provider, "fixture");
    assert_eq!(health.embedder, "stub-hash-64");
}

#[tokio::test]
async fn preset_then_override_precedence() {
    let app = app(fixture_state());
    let (_, body) = call(
        &app,
        "POST",
        "/summarize",
        Some(json!({"topic": "solar eclipse", "preset": "text-focused", "overrides": {"segment_limit": 2}})),
    )
    .await;
    let run: Value = serde_json::from_slice(&body).unwrap();
    let cfg = &run["bundle"]["config_used"];
    assert_eq!(cfg["alpha"], 1.0);
    assert_eq!(cfg["segment_limit"], 2);
    assert_eq!(cfg["preset_name"], "text-focused");
}
