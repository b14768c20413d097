//! Text/image encoders producing unit-norm vectors.

mod cache;
pub mod clip;
mod stub;

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CachedEmbedder, EmbeddingCache};
pub use stub::{StubEmbedder, STUB_DIM};

/// Tolerance on ‖v‖₂ = 1 enforced at the provider boundary.
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Image,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("empty input")]
    EmptyInput,
    #[error("image decode failed: {0}")]
    DecodeFailure(String),
    #[error("provider failure: {0}")]
    ProviderFailure(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("provider does not support {0:?} input")]
    UnsupportedModality(Modality),
}

/// A unit-L2 vector tagged with its modality and the provider that made it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub modality: Modality,
    pub vector: Vec<f32>,
    pub provider_id: String,
}

impl Embedding {
    /// L2-normalizes `raw`. Fails on empty, non-finite or all-zero input.
    pub fn normalized(modality: Modality, raw: &[f64], provider_id: impl Into<String>) -> Result<Self, EmbeddingError> {
        if raw.is_empty() {
            return Err(EmbeddingError::ProviderFailure("empty vector".into()));
        }
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(EmbeddingError::ProviderFailure("vector cannot be normalized".into()));
        }
        Ok(Self {
            modality,
            vector: raw.iter().map(|x| (x / norm) as f32).collect(),
            provider_id: provider_id.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn norm(&self) -> f64 {
        self.vector.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
    }
}

/// An encoder backend.
///
/// Identical input must give bitwise-identical output for the lifetime of
/// an instance. Providers that cannot serve concurrent calls return `false`
/// from [`EmbeddingProvider::concurrent`] and get wrapped by [`shared`].
pub trait EmbeddingProvider: Send + Sync {
    fn provider_id(&self) -> &str;
    fn dim(&self) -> usize;
    fn supports(&self, modality: Modality) -> bool;
    fn embed_text(&self, text: &str) -> Result<Embedding, EmbeddingError>;
    fn embed_image(&self, bytes: &[u8]) -> Result<Embedding, EmbeddingError>;

    fn concurrent(&self) -> bool {
        true
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Arc<P> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn supports(&self, modality: Modality) -> bool {
        (**self).supports(modality)
    }
    fn embed_text(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        (**self).embed_text(text)
    }
    fn embed_image(&self, bytes: &[u8]) -> Result<Embedding, EmbeddingError> {
        (**self).embed_image(bytes)
    }
    fn concurrent(&self) -> bool {
        (**self).concurrent()
    }
}

/// Runs every call of the inner provider under one lock.
pub struct Serialized<P> {
    inner: P,
    lock: Mutex<()>,
}

impl<P: EmbeddingProvider> EmbeddingProvider for Serialized<P> {
    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn supports(&self, modality: Modality) -> bool {
        self.inner.supports(modality)
    }
    fn embed_text(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        self.inner.embed_text(text)
    }
    fn embed_image(&self, bytes: &[u8]) -> Result<Embedding, EmbeddingError> {
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        self.inner.embed_image(bytes)
    }
}

/// Wraps non-concurrent providers in a serializing queue.
pub fn shared<P: EmbeddingProvider + 'static>(provider: P) -> Arc<dyn EmbeddingProvider> {
    if provider.concurrent() {
        Arc::new(provider)
    } else {
        Arc::new(Serialized {
            inner: provider,
            lock: Mutex::new(()),
        })
    }
}

fn check_output(e: Embedding, modality: Modality, provider: &dyn EmbeddingProvider) -> Result<Embedding, EmbeddingError> {
    if e.dim() != provider.dim() {
        return Err(EmbeddingError::DimensionMismatch(e.dim(), provider.dim()));
    }
    if e.modality != modality || (e.norm() - 1.0).abs() > NORM_TOLERANCE {
        return Err(EmbeddingError::ProviderFailure(format!(
            "{} broke the output contract (modality {:?}, norm {})",
            provider.provider_id(),
            e.modality,
            e.norm()
        )));
    }
    Ok(e)
}

/// Encodes non-empty text and checks the unit-norm contract.
pub fn embed_text(provider: &dyn EmbeddingProvider, text: &str) -> Result<Embedding, EmbeddingError> {
    if text.trim().is_empty() {
        return Err(EmbeddingError::EmptyInput);
    }
    if !provider.supports(Modality::Text) {
        return Err(EmbeddingError::UnsupportedModality(Modality::Text));
    }
    check_output(provider.embed_text(text)?, Modality::Text, provider)
}

/// Encodes an image payload and checks the unit-norm contract.
pub fn embed_image(provider: &dyn EmbeddingProvider, bytes: &[u8]) -> Result<Embedding, EmbeddingError> {
    if bytes.is_empty() {
        return Err(EmbeddingError::EmptyInput);
    }
    if !provider.supports(Modality::Image) {
        return Err(EmbeddingError::UnsupportedModality(Modality::Image));
    }
    check_output(provider.embed_image(bytes)?, Modality::Image, provider)
}

/// Cosine of two unit vectors, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(cosine_slices(&a.vector, &b.vector))
}

/// Symmetric by construction: products commute and summation order is fixed.
pub(crate) fn cosine_slices(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let denom = (na * nb).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    (dot / denom).clamp(-1.0, 1.0)
}
