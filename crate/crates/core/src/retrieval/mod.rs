//! Topic-driven search across the web, news and image verticals.

mod cache;
mod fetch;
mod fixture;
#[cfg(feature = "live")]
mod live;

use std::fmt;
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{SummaryConfig, TopicQuery};

pub use cache::{canonicalize_url, ByteCache, CacheKey, DiskCache, MemoryCache, NoCache};
pub use fetch::{fetch_all, fetch_documents, FetchError, FetchOutcome, Fetcher};
pub use fixture::{FixtureCorpus, FixtureError, FixtureFetcher, FixtureHit, FixtureProvider, RecordedVertical};
#[cfg(feature = "live")]
pub use live::{DuckDuckGoProvider, HttpFetcher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vertical {
    Web,
    News,
    Images,
}

impl Vertical {
    pub const ALL: [Vertical; 3] = [Vertical::Web, Vertical::News, Vertical::Images];

    pub fn as_str(self) -> &'static str {
        match self {
            Vertical::Web => "web",
            Vertical::News => "news",
            Vertical::Images => "images",
        }
    }
}

impl fmt::Display for Vertical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One ranked result as returned by a search provider.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub url: String,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub snippet: Option<String>,
    #[serde(default)]
    pub width: Option<u32>,
    #[serde(default)]
    pub height: Option<u32>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProviderError {
    #[error("UnsupportedVertical")]
    UnsupportedVertical(Vertical),
    #[error("Timeout")]
    Timeout,
    #[error("Transport ({0})")]
    Transport(String),
    #[error("Parse ({0})")]
    Parse(String),
}

/// A search backend. Given a query, a vertical and a result cap, returns a
/// ranked hit list.
///
/// Implementations must return [`ProviderError::UnsupportedVertical`] for
/// verticals outside [`SearchProvider::capabilities`] rather than any
/// results.
pub trait SearchProvider: Send + Sync {
    fn provider_id(&self) -> &str;
    fn capabilities(&self) -> &[Vertical];
    fn search(&self, query: &str, vertical: Vertical, max_results: usize) -> Result<Vec<SearchHit>, ProviderError>;

    fn supports(&self, vertical: Vertical) -> bool {
        self.capabilities().contains(&vertical)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocStatus {
    /// Stub not fetched yet.
    Pending,
    Ok,
    FetchFailed,
    SkippedBudget,
}

/// A web page or news article, first as a stub from search and later with
/// its fetched body.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDocument {
    pub doc_id: String,
    pub vertical: Vertical,
    pub url: String,
    pub title: Option<String>,
    pub rank: usize,
    pub body_raw: Vec<u8>,
    pub fetched_at: Option<SystemTime>,
    pub status: DocStatus,
    pub error: Option<String>,
}

impl SourceDocument {
    pub fn stub(vertical: Vertical, rank: usize, hit: SearchHit) -> Self {
        Self {
            doc_id: format!("{vertical}-{rank}"),
            vertical,
            url: hit.url,
            title: hit.title,
            rank,
            body_raw: Vec::new(),
            fetched_at: None,
            status: DocStatus::Pending,
            error: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageOrigin {
    Search,
    OnPage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSearchHit {
    pub image_id: String,
    pub origin: ImageOrigin,
    pub url: String,
    pub declared_width_px: Option<u32>,
    pub declared_height_px: Option<u32>,
    /// Alt text for on-page images, result title for search images.
    pub title: Option<String>,
    /// Present iff `origin` is `OnPage`.
    pub source_doc: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchResults {
    /// Web stubs first, then news, each in provider rank order.
    pub documents: Vec<SourceDocument>,
    pub images: Vec<ImageSearchHit>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RetrievalError {
    #[error("all verticals failed: {}", .0.join("; "))]
    AllVerticalsFailed(Vec<String>),
}

/// Runs the web, news and image searches concurrently and applies budgets.
///
/// A failing vertical becomes a warning; only when every vertical fails is
/// the call an error.
pub fn search_all(
    topic: &TopicQuery,
    config: &SummaryConfig,
    provider: &dyn SearchProvider,
) -> Result<SearchResults, RetrievalError> {
    let query = topic.normalized.as_str();
    let outcomes: Vec<(Vertical, Result<Vec<SearchHit>, ProviderError>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = Vertical::ALL
            .iter()
            .map(|&vertical| {
                let cap = match vertical {
                    Vertical::Images => config.max_images,
                    _ => config.max_pages,
                };
                scope.spawn(move || {
                    if !provider.supports(vertical) {
                        return (vertical, Err(ProviderError::UnsupportedVertical(vertical)));
                    }
                    (vertical, provider.search(query, vertical, cap))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("search thread panicked"))
            .collect()
    });

    let mut results = SearchResults::default();
    let mut failures = Vec::new();
    for (vertical, outcome) in outcomes {
        match outcome {
            Ok(mut hits) => match vertical {
                Vertical::Images => {
                    hits.truncate(config.max_images);
                    results.images.extend(hits.into_iter().enumerate().map(|(rank, hit)| ImageSearchHit {
                        image_id: format!("img-{rank}"),
                        origin: ImageOrigin::Search,
                        url: hit.url,
                        declared_width_px: hit.width,
                        declared_height_px: hit.height,
                        title: hit.title,
                        source_doc: None,
                    }));
                }
                _ => {
                    hits.truncate(config.max_pages);
                    results.documents.extend(
                        hits.into_iter()
                            .enumerate()
                            .map(|(rank, hit)| SourceDocument::stub(vertical, rank, hit)),
                    );
                }
            },
            Err(err) => {
                let msg = match &err {
                    ProviderError::Transport(d) | ProviderError::Parse(d) => {
                        format!("{vertical}: {} ({d})", err_kind(&err))
                    }
                    _ => format!("{vertical}: {}", err_kind(&err)),
                };
                tracing::warn!(%msg, "search vertical failed");
                failures.push(msg);
            }
        }
    }
    if failures.len() == Vertical::ALL.len() {
        return Err(RetrievalError::AllVerticalsFailed(failures));
    }
    results.warnings = failures;
    Ok(results)
}

fn err_kind(err: &ProviderError) -> &'static str {
    match err {
        ProviderError::UnsupportedVertical(_) => "UnsupportedVertical",
        ProviderError::Timeout => "Timeout",
        ProviderError::Transport(_) => "Transport",
        ProviderError::Parse(_) => "Parse",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::normalize_topic;
    use proptest::prelude::*;

    struct Scripted {
        caps: Vec<Vertical>,
        per_vertical: usize,
        fail_all: bool,
    }

    impl SearchProvider for Scripted {
        fn provider_id(&self) -> &str {
            "scripted"
        }
        fn capabilities(&self) -> &[Vertical] {
            &self.caps
        }
        fn search(&self, query: &str, vertical: Vertical, max_results: usize) -> Result<Vec<SearchHit>, ProviderError> {
            if self.fail_all {
                return Err(ProviderError::Timeout);
            }
            if !self.supports(vertical) {
                return Err(ProviderError::UnsupportedVertical(vertical));
            }
            // Deliberately ignores max_results to check that search_all truncates.
            let _ = max_results;
            Ok((0..self.per_vertical)
                .map(|i| SearchHit {
                    url: format!("https://{vertical}.example/{query}/{i}"),
                    title: Some(format!("{vertical} {i}")),
                    snippet: None,
                    width: None,
                    height: None,
                })
                .collect())
        }
    }

    fn topic() -> TopicQuery {
        normalize_topic("solar eclipse").unwrap()
    }

    #[test]
    fn budget_truncation_keeps_rank_order() {
        let p = Scripted {
            caps: Vertical::ALL.to_vec(),
            per_vertical: 10,
            fail_all: false,
        };
        let cfg = SummaryConfig {
            max_pages: 3,
            ..Default::default()
        };
        let r = search_all(&topic(), &cfg, &p).unwrap();
        let web: Vec<_> = r.documents.iter().filter(|d| d.vertical == Vertical::Web).collect();
        assert_eq!(web.len(), 3);
        assert!(web.iter().enumerate().all(|(i, d)| d.rank == i && d.url.ends_with(&format!("/{i}"))));
        assert_eq!(r.images.len(), 8);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn missing_news_degrades_gracefully() {
        let p = Scripted {
            caps: vec![Vertical::Web, Vertical::Images],
            per_vertical: 2,
            fail_all: false,
        };
        let r = search_all(&topic(), &SummaryConfig::default(), &p).unwrap();
        assert_eq!(r.warnings, vec!["news: UnsupportedVertical".to_string()]);
        assert_eq!(r.documents.len(), 2);
        assert_eq!(r.images.len(), 2);
    }

    #[test]
    fn all_verticals_timing_out_is_fatal() {
        let p = Scripted {
            caps: Vertical::ALL.to_vec(),
            per_vertical: 2,
            fail_all: true,
        };
        let err = search_all(&topic(), &SummaryConfig::default(), &p).unwrap_err();
        let RetrievalError::AllVerticalsFailed(msgs) = err;
        assert_eq!(msgs.len(), 3);
        assert!(msgs.iter().all(|m| m.ends_with("Timeout")));
    }

    proptest! {
        #[test]
        fn counts_never_exceed_budgets(pages in 1usize..12, images in 1usize..12, n in 0usize..15) {
            let p = Scripted { caps: Vertical::ALL.to_vec(), per_vertical: n, fail_all: false };
            let cfg = SummaryConfig { max_pages: pages, max_images: images, ..Default::default() };
            let r = search_all(&topic(), &cfg, &p).unwrap();
            for v in [Vertical::Web, Vertical::News] {
                prop_assert!(r.documents.iter().filter(|d| d.vertical == v).count() <= pages);
            }
            prop_assert!(r.images.len() <= images);
            let again = search_all(&topic(), &cfg, &p).unwrap();
            prop_assert_eq!(again, r);
        }
    }
}
