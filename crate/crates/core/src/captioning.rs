//! Optional image captioning behind a pluggable contract.

use thiserror::Error;

use crate::domain::TopicQuery;
use crate::extraction::{GateStatus, ImageCandidate};
use crate::hashing::sha256_hex;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("caption failed for {image_id}: {reason}")]
pub struct CaptionFailure {
    pub image_id: String,
    pub reason: String,
}

/// Generates a description for an image payload. Must be deterministic per
/// instance for identical bytes and topic.
pub trait Captioner: Send + Sync {
    fn captioner_id(&self) -> &str;
    fn caption(&self, bytes: &[u8], topic: &TopicQuery) -> Result<String, String>;
}

/// Offline captioner: topic terms plus a short content hash.
#[derive(Debug, Clone, Default)]
pub struct StubCaptioner;

impl Captioner for StubCaptioner {
    fn captioner_id(&self) -> &str {
        "stub-captioner"
    }

    fn caption(&self, bytes: &[u8], topic: &TopicQuery) -> Result<String, String> {
        if bytes.is_empty() {
            return Err("empty payload".into());
        }
        let digest = sha256_hex(bytes);
        Ok(format!("photograph of {} ({})", topic.normalized, &digest[..8]))
    }
}

/// Captions the first `limit` accepted candidates in the given order, which
/// the caller sets to image-topic rank. Gate status and ordering are never
/// changed; failures leave the caption absent and yield a warning.
pub fn caption_images(
    captioner: &dyn Captioner,
    mut candidates: Vec<ImageCandidate>,
    limit: usize,
    topic: &TopicQuery,
) -> (Vec<ImageCandidate>, Vec<String>) {
    let mut warnings = Vec::new();
    for cand in candidates
        .iter_mut()
        .filter(|c| c.gate_status == GateStatus::Accepted)
        .take(limit)
    {
        match captioner.caption(&cand.bytes, topic) {
            Ok(text) if !text.trim().is_empty() => cand.caption = Some(text.trim().to_string()),
            Ok(_) => warnings.push(
                CaptionFailure {
                    image_id: cand.image_id.clone(),
                    reason: "empty caption".into(),
                }
                .to_string(),
            ),
            Err(reason) => warnings.push(
                CaptionFailure {
                    image_id: cand.image_id.clone(),
                    reason,
                }
                .to_string(),
            ),
        }
    }
    (candidates, warnings)
}
