//! DuckDuckGo-compatible live search provider and an HTTP fetcher.
//!
//! Never exercised by the offline test-suite beyond the response parsers.

use std::time::Duration;

use scraper::{Html, Selector};
use serde::Deserialize;
use url::Url;

use super::fetch::{FetchError, Fetcher};
use super::{ProviderError, SearchHit, SearchProvider, Vertical};

const USER_AGENT: &str = concat!("mmsum/", env!("CARGO_PKG_VERSION"));
const MAX_BODY_BYTES: u64 = 16 * 1024 * 1024;

/// Plain blocking HTTP GET with a per-request timeout.
#[derive(Debug, Clone)]
pub struct HttpFetcher {
    agent: ureq::Agent,
}

impl Default for HttpFetcher {
    fn default() -> Self {
        let agent = ureq::Agent::config_builder()
            .user_agent(USER_AGENT)
            .build()
            .into();
        Self { agent }
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &str, timeout: Duration) -> Result<Vec<u8>, FetchError> {
        let mut resp = self
            .agent
            .get(url)
            .config()
            .timeout_global(Some(timeout))
            .build()
            .call()
            .map_err(fetch_error)?;
        resp.body_mut()
            .with_config()
            .limit(MAX_BODY_BYTES)
            .read_to_vec()
            .map_err(fetch_error)
    }
}

fn fetch_error(err: ureq::Error) -> FetchError {
    match err {
        ureq::Error::StatusCode(code) => FetchError::Status(code),
        ureq::Error::Timeout(_) => FetchError::Timeout,
        other => FetchError::Transport(other.to_string()),
    }
}

fn provider_error(err: ureq::Error) -> ProviderError {
    match err {
        ureq::Error::Timeout(_) => ProviderError::Timeout,
        other => ProviderError::Transport(other.to_string()),
    }
}

/// Client for DuckDuckGo's HTML endpoint (web) and its JSON endpoints
/// (news, images), which need a `vqd` token scraped from the landing page.
#[derive(Debug, Clone)]
pub struct DuckDuckGoProvider {
    agent: ureq::Agent,
    base: String,
    html_base: String,
    region: String,
}

impl DuckDuckGoProvider {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .user_agent(USER_AGENT)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            agent,
            base: "https://duckduckgo.com".into(),
            html_base: "https://html.duckduckgo.com".into(),
            region: "us-en".into(),
        }
    }

    fn get_text(&self, url: &str, params: &[(&str, &str)]) -> Result<String, ProviderError> {
        let mut req = self.agent.get(url);
        for (k, v) in params {
            req = req.query(*k, *v);
        }
        req.call()
            .map_err(provider_error)?
            .body_mut()
            .with_config()
            .limit(MAX_BODY_BYTES)
            .read_to_string()
            .map_err(provider_error)
    }

    fn vqd(&self, query: &str) -> Result<String, ProviderError> {
        let page = self.get_text(&format!("{}/", self.base), &[("q", query)])?;
        extract_vqd(&page).ok_or_else(|| ProviderError::Parse("vqd token not found".into()))
    }
}

impl SearchProvider for DuckDuckGoProvider {
    fn provider_id(&self) -> &str {
        "duckduckgo"
    }

    fn capabilities(&self) -> &[Vertical] {
        &Vertical::ALL
    }

    fn search(&self, query: &str, vertical: Vertical, max_results: usize) -> Result<Vec<SearchHit>, ProviderError> {
        let mut hits = match vertical {
            Vertical::Web => {
                let page = self.get_text(&format!("{}/html/", self.html_base), &[("q", query)])?;
                parse_web_results(&page)
            }
            Vertical::News => {
                let vqd = self.vqd(query)?;
                let body = self.get_text(
                    &format!("{}/news.js", self.base),
                    &[("q", query), ("vqd", &vqd), ("l", &self.region), ("o", "json"), ("noamp", "1")],
                )?;
                parse_news_results(&body)?
            }
            Vertical::Images => {
                let vqd = self.vqd(query)?;
                let body = self.get_text(
                    &format!("{}/i.js", self.base),
                    &[("q", query), ("vqd", &vqd), ("l", &self.region), ("o", "json"), ("f", ",,,")],
                )?;
                parse_image_results(&body)?
            }
        };
        hits.truncate(max_results);
        Ok(hits)
    }
}

fn extract_vqd(page: &str) -> Option<String> {
    let start = page.find("vqd=")? + 4;
    let rest = page[start..].trim_start_matches(['"', '\'']);
    let token: String = rest.chars().take_while(|c| c.is_ascii_alphanumeric() || *c == '-').collect();
    (!token.is_empty()).then_some(token)
}

/// Result links on the HTML endpoint are redirects carrying the target in `uddg`.
fn unwrap_redirect(href: &str) -> Option<String> {
    let absolute = if href.starts_with("//") {
        format!("https:{href}")
    } else {
        href.to_string()
    };
    let url = Url::parse(&absolute).ok()?;
    if let Some((_, target)) = url.query_pairs().find(|(k, _)| k == "uddg") {
        return Some(target.into_owned());
    }
    matches!(url.scheme(), "http" | "https").then(|| url.into())
}

fn parse_web_results(page: &str) -> Vec<SearchHit> {
    let doc = Html::parse_document(page);
    let result = Selector::parse(".result").expect("static selector");
    let link = Selector::parse("a.result__a").expect("static selector");
    let snippet = Selector::parse(".result__snippet").expect("static selector");
    doc.select(&result)
        .filter_map(|r| {
            let a = r.select(&link).next()?;
            let url = unwrap_redirect(a.value().attr("href")?)?;
            let title = a.text().collect::<String>().trim().to_string();
            let snippet = r
                .select(&snippet)
                .next()
                .map(|s| s.text().collect::<String>().trim().to_string());
            Some(SearchHit {
                url,
                title: (!title.is_empty()).then_some(title),
                snippet,
                width: None,
                height: None,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct JsonResults<T> {
    results: Vec<T>,
}

#[derive(Deserialize)]
struct NewsItem {
    url: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    excerpt: Option<String>,
}

#[derive(Deserialize)]
struct ImageItem {
    image: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    width: Option<u32>,
    #[serde(default)]
    height: Option<u32>,
}

fn parse_news_results(body: &str) -> Result<Vec<SearchHit>, ProviderError> {
    let parsed: JsonResults<NewsItem> =
        serde_json::from_str(body).map_err(|e| ProviderError::Parse(e.to_string()))?;
    Ok(parsed
        .results
        .into_iter()
        .map(|n| SearchHit {
            url: n.url,
            title: n.title,
            snippet: n.excerpt,
            width: None,
            height: None,
        })
        .collect())
}

fn parse_image_results(body: &str) -> Result<Vec<SearchHit>, ProviderError> {
    let parsed: JsonResults<ImageItem> =
        serde_json::from_str(body).map_err(|e| ProviderError::Parse(e.to_string()))?;
    Ok(parsed
        .results
        .into_iter()
        .map(|i| SearchHit {
            url: i.image,
            title: i.title,
            snippet: None,
            width: i.width,
            height: i.height,
        })
        .collect())
}
