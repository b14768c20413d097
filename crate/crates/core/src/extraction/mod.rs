//! Turns fetched payloads into clean text segments and gated images.

mod dedup;
mod html;
pub(crate) mod images;

use serde::{Deserialize, Serialize};

pub use dedup::{dedupe_segments, jaccard, normalize_for_hash, shingle_signature, SHINGLE_WORDS};
pub use html::{extract_page_images, extract_segments, Extraction};
pub use images::{declared_below_minimum, gate_images, FetchedImage, GateStatus, ImageCandidate};

/// One cleaned paragraph with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSegment {
    pub segment_id: String,
    pub doc_id: String,
    pub url: String,
    pub title: Option<String>,
    /// 0-based position among the kept segments of the document.
    pub ordinal: usize,
    pub text: String,
    pub char_count: usize,
    /// Hex SHA-256 of the normalized text.
    pub exact_hash: String,
    /// Sorted, deduplicated hashes of word 5-shingles.
    pub near_dup_signature: Vec<u64>,
}

impl TextSegment {
    pub fn new(doc_id: &str, url: &str, title: Option<&str>, ordinal: usize, text: String) -> Self {
        let normalized = normalize_for_hash(&text);
        Self {
            segment_id: format!("{doc_id}#{ordinal}"),
            doc_id: doc_id.to_string(),
            url: url.to_string(),
            title: title.map(str::to_string),
            ordinal,
            char_count: text.chars().count(),
            exact_hash: crate::hashing::sha256_hex(normalized.as_bytes()),
            near_dup_signature: shingle_signature(&normalized),
            text,
        }
    }
}
