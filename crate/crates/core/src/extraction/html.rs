use scraper::{ElementRef, Html, Node};
use url::Url;

use super::TextSegment;
use crate::retrieval::{DocStatus, ImageOrigin, ImageSearchHit, SourceDocument};

/// Elements whose whole subtree is dropped. Headings label content rather
/// than carry it; the page title travels with every segment anyway.
const SKIPPED: &[&str] = &[
    "script", "style", "noscript", "nav", "header", "footer", "aside", "form", "template", "svg", "iframe",
    "button", "select", "head", "menu", "dialog", "h1", "h2", "h3", "h4", "h5", "h6",
];

/// Elements that start and end a paragraph.
const BLOCKS: &[&str] = &[
    "p", "div", "section", "article", "main", "li", "ul", "ol", "blockquote",
    "pre", "table", "tr", "td", "th", "hr", "figure", "figcaption", "dd", "dt", "dl", "body", "caption", "details",
    "summary", "address",
];

/// class/id tokens that mark chrome rather than content.
const BOILERPLATE_TOKENS: &[&str] = &[
    "nav", "navbar", "navigation", "menu", "footer", "header", "sidebar", "breadcrumb", "breadcrumbs", "cookie",
    "cookies", "banner", "advert", "ads", "share", "social", "comments", "related", "newsletter", "subscribe",
];

const BOILERPLATE_ROLES: &[&str] = &["navigation", "banner", "contentinfo", "complementary", "search"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub segments: Vec<TextSegment>,
    /// `<img>` elements found outside boilerplate regions.
    pub page_images: Vec<ImageSearchHit>,
    pub warning: Option<String>,
}

/// Strips boilerplate from a fetched document and splits it into paragraph
/// segments of at least `min_chars` characters. Bodies that do not look like
/// HTML are split on blank lines instead.
pub fn extract_segments(doc: &SourceDocument, min_chars: usize) -> Extraction {
    if doc.status != DocStatus::Ok || doc.body_raw.is_empty() {
        return Extraction {
            warning: Some(format!("{}: unparsable document (not fetched)", doc.doc_id)),
            ..Default::default()
        };
    }
    if looks_binary(&doc.body_raw) {
        return Extraction {
            warning: Some(format!("{}: unparsable document (binary payload)", doc.doc_id)),
            ..Default::default()
        };
    }
    let body = String::from_utf8_lossy(&doc.body_raw);
    let (blocks, page_images) = if looks_like_html(&body) {
        let (blocks, images) = html_blocks(&body);
        (blocks, page_image_hits(doc, images))
    } else {
        (plain_blocks(&body), Vec::new())
    };
    let segments: Vec<TextSegment> = blocks
        .into_iter()
        .filter(|b| b.chars().count() >= min_chars)
        .enumerate()
        .map(|(ordinal, text)| TextSegment::new(&doc.doc_id, &doc.url, doc.title.as_deref(), ordinal, text))
        .collect();
    let warning = segments
        .is_empty()
        .then(|| format!("{}: no extractable text", doc.doc_id));
    Extraction {
        segments,
        page_images,
        warning,
    }
}

/// On-page images of a fetched HTML document.
pub fn extract_page_images(doc: &SourceDocument) -> Vec<ImageSearchHit> {
    if doc.status != DocStatus::Ok || looks_binary(&doc.body_raw) {
        return Vec::new();
    }
    let body = String::from_utf8_lossy(&doc.body_raw);
    if !looks_like_html(&body) {
        return Vec::new();
    }
    page_image_hits(doc, html_blocks(&body).1)
}

fn looks_binary(bytes: &[u8]) -> bool {
    let head = &bytes[..bytes.len().min(2048)];
    head.contains(&0) || std::str::from_utf8(head).is_err() && String::from_utf8_lossy(head).matches('\u{fffd}').count() * 10 > head.len()
}

fn looks_like_html(body: &str) -> bool {
    let head: String = body.chars().take(2048).collect::<String>().to_ascii_lowercase();
    ["<!doctype", "<html", "<body", "<p", "<div", "<article", "<main", "<section", "<h1", "<h2"]
        .iter()
        .any(|t| head.contains(t))
}

fn clean(text: &str) -> String {
    text.chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn plain_blocks(body: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current = String::new();
    for line in body.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(clean(&current));
                current.clear();
            }
        } else {
            current.push(' ');
            current.push_str(line);
        }
    }
    if !current.is_empty() {
        blocks.push(clean(&current));
    }
    blocks.retain(|b| !b.is_empty());
    blocks
}

struct RawImage {
    src: String,
    alt: Option<String>,
    width: Option<u32>,
    height: Option<u32>,
}

#[derive(Default)]
struct Walker {
    blocks: Vec<String>,
    current: String,
    images: Vec<RawImage>,
}

impl Walker {
    fn flush(&mut self) {
        let text = clean(&self.current);
        if !text.is_empty() {
            self.blocks.push(text);
        }
        self.current.clear();
    }

    fn walk(&mut self, el: ElementRef<'_>) {
        let name = el.value().name();
        if SKIPPED.contains(&name) || is_boilerplate(el) {
            return;
        }
        match name {
            "img" => {
                if let Some(src) = el.value().attr("src") {
                    self.images.push(RawImage {
                        src: src.to_string(),
                        alt: el.value().attr("alt").map(clean).filter(|a| !a.is_empty()),
                        width: el.value().attr("width").and_then(|w| w.trim().parse().ok()),
                        height: el.value().attr("height").and_then(|h| h.trim().parse().ok()),
                    });
                }
                return;
            }
            "br" => {
                self.current.push(' ');
                return;
            }
            _ => {}
        }
        let block = BLOCKS.contains(&name);
        if block {
            self.flush();
        }
        for child in el.children() {
            match child.value() {
                Node::Text(t) => self.current.push_str(t),
                Node::Element(_) => {
                    if let Some(child) = ElementRef::wrap(child) {
                        self.walk(child);
                    }
                }
                _ => {}
            }
        }
        if block {
            self.flush();
        }
    }
}

fn is_boilerplate(el: ElementRef<'_>) -> bool {
    let v = el.value();
    if v.attr("role").is_some_and(|r| BOILERPLATE_ROLES.contains(&r.trim().to_ascii_lowercase().as_str())) {
        return true;
    }
    if v.attr("aria-hidden") == Some("true") {
        return true;
    }
    let attr_tokens = |a: Option<&str>| {
        a.map(|s| {
            s.split(|c: char| c.is_whitespace() || c == '-' || c == '_')
                .any(|t| BOILERPLATE_TOKENS.contains(&t.to_ascii_lowercase().as_str()))
        })
        .unwrap_or(false)
    };
    attr_tokens(v.attr("class")) || attr_tokens(v.attr("id"))
}

fn html_blocks(body: &str) -> (Vec<String>, Vec<RawImage>) {
    let html = Html::parse_document(body);
    let mut walker = Walker::default();
    walker.walk(html.root_element());
    walker.flush();
    (walker.blocks, walker.images)
}

fn page_image_hits(doc: &SourceDocument, raw: Vec<RawImage>) -> Vec<ImageSearchHit> {
    let base = Url::parse(&doc.url).ok();
    raw.into_iter()
        .filter_map(|img| {
            let resolved = match &base {
                Some(b) => b.join(&img.src).ok()?,
                None => Url::parse(&img.src).ok()?,
            };
            matches!(resolved.scheme(), "http" | "https").then(|| (resolved.to_string(), img))
        })
        .enumerate()
        .map(|(n, (url, img))| ImageSearchHit {
            image_id: format!("{}-img{n}", doc.doc_id),
            origin: ImageOrigin::OnPage,
            url,
            declared_width_px: img.width,
            declared_height_px: img.height,
            title: img.alt,
            source_doc: Some(doc.doc_id.clone()),
        })
        .collect()
}
