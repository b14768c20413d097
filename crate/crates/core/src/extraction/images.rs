use std::io::Cursor;

use serde::{Deserialize, Serialize};

use crate::domain::SummaryConfig;
use crate::retrieval::{ImageOrigin, ImageSearchHit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateStatus {
    Accepted,
    RejectedResolution,
    RejectedBytes,
    RejectedDecode,
}

/// An image after quality gating. Rejected candidates stay in the audit list
/// with their payload dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageCandidate {
    pub image_id: String,
    pub url: String,
    pub origin: ImageOrigin,
    pub source_doc: Option<String>,
    /// Measured from the decoded header; declared dimensions only when the
    /// image was rejected before fetching.
    pub width_px: Option<u32>,
    pub height_px: Option<u32>,
    pub byte_size: u64,
    #[serde(with = "base64_bytes")]
    pub bytes: Vec<u8>,
    /// Alt text or search-result title.
    pub alt_text: Option<String>,
    pub caption: Option<String>,
    pub gate_status: GateStatus,
}

/// A search hit together with its fetched payload (`None` when the fetch
/// failed or was skipped).
#[derive(Debug, Clone)]
pub struct FetchedImage {
    pub hit: ImageSearchHit,
    pub bytes: Option<Vec<u8>>,
}

/// True when the provider-declared size is already below the gate, so the
/// payload need not be fetched.
pub fn declared_below_minimum(hit: &ImageSearchHit, config: &SummaryConfig) -> bool {
    hit.declared_width_px.is_some_and(|w| w < config.image_min_width_px)
        || hit.declared_height_px.is_some_and(|h| h < config.image_min_height_px)
}

/// Applies the resolution and byte-size gates. Every input appears exactly
/// once in the output, in input order.
pub fn gate_images(inputs: Vec<FetchedImage>, config: &SummaryConfig) -> Vec<ImageCandidate> {
    inputs.into_iter().map(|img| gate_one(img, config)).collect()
}

fn gate_one(img: FetchedImage, config: &SummaryConfig) -> ImageCandidate {
    let FetchedImage { hit, bytes } = img;
    let mut cand = ImageCandidate {
        image_id: hit.image_id.clone(),
        url: hit.url.clone(),
        origin: hit.origin,
        source_doc: hit.source_doc.clone(),
        width_px: None,
        height_px: None,
        byte_size: 0,
        bytes: Vec::new(),
        alt_text: hit.title.clone(),
        caption: None,
        gate_status: GateStatus::RejectedDecode,
    };
    let Some(bytes) = bytes else {
        if declared_below_minimum(&hit, config) {
            cand.width_px = hit.declared_width_px;
            cand.height_px = hit.declared_height_px;
            cand.gate_status = GateStatus::RejectedResolution;
        }
        return cand;
    };
    cand.byte_size = bytes.len() as u64;
    let dims = image::ImageReader::new(Cursor::new(&bytes))
        .with_guessed_format()
        .ok()
        .and_then(|r| r.into_dimensions().ok());
    let Some((w, h)) = dims else {
        return cand;
    };
    cand.width_px = Some(w);
    cand.height_px = Some(h);
    cand.gate_status = if w < config.image_min_width_px || h < config.image_min_height_px {
        GateStatus::RejectedResolution
    } else if cand.byte_size < config.image_min_bytes {
        GateStatus::RejectedBytes
    } else {
        GateStatus::Accepted
    };
    if cand.gate_status == GateStatus::Accepted {
        cand.bytes = bytes;
    }
    cand
}

mod base64_bytes {
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&base64::engine::general_purpose::STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        base64::engine::general_purpose::STANDARD
            .decode(s)
            .map_err(serde::de::Error::custom)
    }
}
