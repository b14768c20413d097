use image::imageops::FilterType;

use super::{Embedding, EmbeddingError, EmbeddingProvider, Modality};
use crate::hashing::digest_parts;

pub const STUB_DIM: usize = 64;

/// Thumbnail side length; 8×8 luminance values fill the 64 dimensions.
const THUMB: u32 = 8;

/// Deterministic offline encoder.
///
/// Text: every lowercase alphanumeric token is hashed (with the seed) to a
/// dimension and a sign; the token counts are summed and normalized. Texts
/// sharing tokens therefore have predictably higher cosine.
///
/// Images: the decoded image is resized to an 8×8 luminance thumbnail,
/// mean-centred and mixed with a content hash so distinct payloads never
/// collide.
#[derive(Debug, Clone)]
pub struct StubEmbedder {
    seed: u64,
    id: String,
}

impl StubEmbedder {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            id: format!("stub-hash-{STUB_DIM}"),
        }
    }

    fn bucket(&self, kind: &[u8], token: &[u8]) -> (usize, f64) {
        let d = digest_parts(&[&self.seed.to_le_bytes(), kind, token]);
        let idx = u64::from_le_bytes(d[..8].try_into().expect("8 bytes")) as usize % STUB_DIM;
        let sign = if d[8] & 1 == 0 { 1.0 } else { -1.0 };
        (idx, sign)
    }

    /// Raw (unnormalized) token-count vector; exposed for fixture builders.
    pub fn text_vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; STUB_DIM];
        for token in tokens(text) {
            let (i, s) = self.bucket(b"tok", token.as_bytes());
            v[i] += s;
        }
        if v.iter().all(|&x| x == 0.0) {
            let (i, s) = self.bucket(b"txt", text.as_bytes());
            v[i] = s;
        }
        v
    }
}

impl Default for StubEmbedder {
    fn default() -> Self {
        Self::new(0)
    }
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

impl EmbeddingProvider for StubEmbedder {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        STUB_DIM
    }

    fn supports(&self, _modality: Modality) -> bool {
        true
    }

    fn embed_text(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        if text.trim().is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        Embedding::normalized(Modality::Text, &self.text_vector(text), self.id.clone())
    }

    fn embed_image(&self, bytes: &[u8]) -> Result<Embedding, EmbeddingError> {
        let img = image::load_from_memory(bytes).map_err(|e| EmbeddingError::DecodeFailure(e.to_string()))?;
        let thumb = img.resize_exact(THUMB, THUMB, FilterType::Triangle).to_luma8();
        let pixels: Vec<f64> = thumb.pixels().map(|p| p.0[0] as f64 / 255.0).collect();
        let mean = pixels.iter().sum::<f64>() / pixels.len() as f64;
        let mut v: Vec<f64> = pixels.iter().map(|p| p - mean).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        let (i, s) = self.bucket(b"img", bytes);
        v[i] += 0.25 * s;
        Embedding::normalized(Modality::Image, &v, self.id.clone())
    }
}
