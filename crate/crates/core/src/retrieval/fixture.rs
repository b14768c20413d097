//! Recorded-fixture provider and fetcher for fully offline runs.
//!
//! A corpus is a directory with one JSON file per (query, vertical); see
//! `docs/fixtures.md` for the format.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::fetch::{FetchError, Fetcher};
use super::{ProviderError, SearchHit, SearchProvider, Vertical};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: invalid base64 payload for {url}")]
    Base64 { path: PathBuf, url: String },
    #[error("duplicate recording for ({query}, {vertical})")]
    Duplicate { query: String, vertical: Vertical },
}

/// One ranked hit plus the payload served when its URL is fetched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureHit {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u32>,
    /// UTF-8 payload.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    /// Binary payload, standard base64.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_base64: Option<String>,
    /// When set, fetching this URL fails with this transport message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fetch_error: Option<String>,
}

/// The file format: a recorded search for one (query, vertical).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedVertical {
    pub query: String,
    pub vertical: Vertical,
    pub hits: Vec<FixtureHit>,
    /// Extra payloads reachable from hit pages (on-page images).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assets: Vec<FixtureHit>,
}

#[derive(Debug, Default)]
pub struct FixtureCorpus {
    recordings: BTreeMap<(String, Vertical), Vec<SearchHit>>,
    payloads: HashMap<String, Result<Vec<u8>, String>>,
}

impl FixtureCorpus {
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let dir = dir.as_ref();
        let io = |source| FixtureError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut corpus = Self::default();
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(|source| FixtureError::Io {
                path: path.clone(),
                source,
            })?;
            let rec: RecordedVertical = serde_json::from_str(&text).map_err(|source| FixtureError::Json {
                path: path.clone(),
                source,
            })?;
            corpus.add(rec, &path)?;
        }
        Ok(corpus)
    }

    pub fn from_recordings(recordings: Vec<RecordedVertical>) -> Result<Self, FixtureError> {
        let mut corpus = Self::default();
        for rec in recordings {
            corpus.add(rec, Path::new("<memory>"))?;
        }
        Ok(corpus)
    }

    fn add(&mut self, rec: RecordedVertical, path: &Path) -> Result<(), FixtureError> {
        let query = normalize_query(&rec.query);
        for item in rec.hits.iter().chain(&rec.assets) {
            let payload = match (&item.fetch_error, &item.body, &item.body_base64) {
                (Some(err), _, _) => Err(err.clone()),
                (None, Some(body), _) => Ok(body.as_bytes().to_vec()),
                (None, None, Some(b64)) => Ok(base64::engine::general_purpose::STANDARD
                    .decode(b64)
                    .map_err(|_| FixtureError::Base64 {
                        path: path.to_path_buf(),
                        url: item.url.clone(),
                    })?),
                (None, None, None) => continue,
            };
            self.payloads.insert(item.url.clone(), payload);
        }
        let hits = rec
            .hits
            .into_iter()
            .map(|h| SearchHit {
                url: h.url,
                title: h.title,
                snippet: h.snippet,
                width: h.width,
                height: h.height,
            })
            .collect();
        let key = (query, rec.vertical);
        if self.recordings.contains_key(&key) {
            return Err(FixtureError::Duplicate {
                query: key.0,
                vertical: key.1,
            });
        }
        self.recordings.insert(key, hits);
        Ok(())
    }

    pub fn queries(&self) -> Vec<&str> {
        let mut q: Vec<&str> = self.recordings.keys().map(|(q, _)| q.as_str()).collect();
        q.dedup();
        q
    }
}

fn normalize_query(q: &str) -> String {
    q.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// Serves recorded hits. Queries without a recording yield no hits.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    corpus: Arc<FixtureCorpus>,
    capabilities: Vec<Vertical>,
}

impl FixtureProvider {
    pub fn new(corpus: Arc<FixtureCorpus>) -> Self {
        Self {
            corpus,
            capabilities: Vertical::ALL.to_vec(),
        }
    }

    pub fn with_capabilities(mut self, capabilities: &[Vertical]) -> Self {
        self.capabilities = capabilities.to_vec();
        self
    }
}

impl SearchProvider for FixtureProvider {
    fn provider_id(&self) -> &str {
        "fixture"
    }

    fn capabilities(&self) -> &[Vertical] {
        &self.capabilities
    }

    fn search(&self, query: &str, vertical: Vertical, max_results: usize) -> Result<Vec<SearchHit>, ProviderError> {
        if !self.supports(vertical) {
            return Err(ProviderError::UnsupportedVertical(vertical));
        }
        let key = (normalize_query(query), vertical);
        Ok(self
            .corpus
            .recordings
            .get(&key)
            .map(|hits| hits.iter().take(max_results).cloned().collect())
            .unwrap_or_default())
    }
}

/// Serves recorded payloads and counts every call.
#[derive(Debug)]
pub struct FixtureFetcher {
    corpus: Arc<FixtureCorpus>,
    calls: AtomicUsize,
}

impl FixtureFetcher {
    pub fn new(corpus: Arc<FixtureCorpus>) -> Self {
        Self {
            corpus,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Fetcher for FixtureFetcher {
    fn fetch(&self, url: &str, _timeout: Duration) -> Result<Vec<u8>, FetchError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match self.corpus.payloads.get(url) {
            Some(Ok(bytes)) => Ok(bytes.clone()),
            Some(Err(msg)) => Err(FetchError::Transport(msg.clone())),
            None => Err(FetchError::Status(404)),
        }
    }
}
