use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime};

use thiserror::Error;

use super::cache::{ByteCache, CacheKey};
use super::{DocStatus, SourceDocument, Vertical};
use crate::domain::FetchBudget;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FetchError {
    #[error("timed out")]
    Timeout,
    #[error("http status {0}")]
    Status(u16),
    #[error("transport: {0}")]
    Transport(String),
}

/// Retrieves the raw payload behind a URL.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str, timeout: Duration) -> Result<Vec<u8>, FetchError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchOutcome {
    Fetched { bytes: Vec<u8>, from_cache: bool },
    Failed(String),
    SkippedBudget,
}

/// Fetches every `(url, vertical)` pair with at most `budget.max_in_flight`
/// requests in flight. The cache is consulted before the fetcher; output
/// order matches input order.
pub fn fetch_all(
    requests: &[(String, Vertical)],
    budget: &FetchBudget,
    fetcher: &dyn Fetcher,
    cache: &dyn ByteCache,
) -> Vec<FetchOutcome> {
    if requests.is_empty() {
        return Vec::new();
    }
    let started = Instant::now();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<FetchOutcome>>> = Mutex::new(vec![None; requests.len()]);
    let workers = budget.max_in_flight.clamp(1, requests.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((url, vertical)) = requests.get(i) else { break };
                let outcome = fetch_one(url, *vertical, started, budget, fetcher, cache);
                results.lock().expect("fetch results lock")[i] = Some(outcome);
            });
        }
    });

    results
        .into_inner()
        .expect("fetch results lock")
        .into_iter()
        .map(|o| o.expect("every request visited"))
        .collect()
}

fn fetch_one(
    url: &str,
    vertical: Vertical,
    started: Instant,
    budget: &FetchBudget,
    fetcher: &dyn Fetcher,
    cache: &dyn ByteCache,
) -> FetchOutcome {
    let key = match CacheKey::for_url(url, vertical) {
        Ok(k) => k,
        Err(err) => return FetchOutcome::Failed(format!("invalid url: {err}")),
    };
    if let Some(bytes) = cache.get(&key) {
        return FetchOutcome::Fetched { bytes, from_cache: true };
    }
    let remaining = budget.total.saturating_sub(started.elapsed());
    if remaining.is_zero() {
        return FetchOutcome::SkippedBudget;
    }
    let timeout = budget.per_request.min(remaining);
    let t0 = Instant::now();
    match fetcher.fetch(url, timeout) {
        Ok(_) if t0.elapsed() > timeout => FetchOutcome::Failed(FetchError::Timeout.to_string()),
        Ok(bytes) if bytes.is_empty() => FetchOutcome::Failed("empty body".into()),
        Ok(bytes) => {
            cache.put(&key, &bytes);
            FetchOutcome::Fetched { bytes, from_cache: false }
        }
        Err(err) => FetchOutcome::Failed(err.to_string()),
    }
}

/// Populates document bodies. Failures are recorded on the document status,
/// never dropped.
pub fn fetch_documents(
    stubs: Vec<SourceDocument>,
    budget: &FetchBudget,
    fetcher: &dyn Fetcher,
    cache: &dyn ByteCache,
) -> Vec<SourceDocument> {
    let requests: Vec<_> = stubs.iter().map(|d| (d.url.clone(), d.vertical)).collect();
    let outcomes = fetch_all(&requests, budget, fetcher, cache);
    stubs
        .into_iter()
        .zip(outcomes)
        .map(|(mut doc, outcome)| {
            match outcome {
                FetchOutcome::Fetched { bytes, .. } => {
                    doc.body_raw = bytes;
                    doc.status = DocStatus::Ok;
                    doc.fetched_at = Some(SystemTime::now());
                }
                FetchOutcome::Failed(msg) => {
                    doc.status = DocStatus::FetchFailed;
                    doc.error = Some(msg);
                }
                FetchOutcome::SkippedBudget => doc.status = DocStatus::SkippedBudget,
            }
            doc
        })
        .collect()
}
