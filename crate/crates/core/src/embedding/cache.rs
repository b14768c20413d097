use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use super::{Embedding, EmbeddingError, EmbeddingProvider, Modality};
use crate::hashing::sha256_hex;

type Key = (String, Modality, String);

/// Concurrent map keyed by (provider id, modality, content hash).
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    entries: RwLock<HashMap<Key, Embedding>>,
    hits: AtomicUsize,
}

impl EmbeddingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.entries.read().map(|e| e.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_insert(
        &self,
        key: Key,
        compute: impl FnOnce() -> Result<Embedding, EmbeddingError>,
    ) -> Result<Embedding, EmbeddingError> {
        if let Some(e) = self.entries.read().ok().and_then(|m| m.get(&key).cloned()) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(e);
        }
        let e = compute()?;
        if let Ok(mut m) = self.entries.write() {
            m.insert(key, e.clone());
        }
        Ok(e)
    }
}

/// Provider wrapper that memoizes results in an [`EmbeddingCache`].
pub struct CachedEmbedder<P> {
    inner: P,
    cache: Arc<EmbeddingCache>,
}

impl<P: EmbeddingProvider> CachedEmbedder<P> {
    pub fn new(inner: P, cache: Arc<EmbeddingCache>) -> Self {
        Self { inner, cache }
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedEmbedder<P> {
    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn supports(&self, modality: Modality) -> bool {
        self.inner.supports(modality)
    }
    fn concurrent(&self) -> bool {
        self.inner.concurrent()
    }

    fn embed_text(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        let key = (self.inner.provider_id().to_string(), Modality::Text, sha256_hex(text.as_bytes()));
        self.cache.get_or_insert(key, || self.inner.embed_text(text))
    }

    fn embed_image(&self, bytes: &[u8]) -> Result<Embedding, EmbeddingError> {
        let key = (self.inner.provider_id().to_string(), Modality::Image, sha256_hex(bytes));
        self.cache.get_or_insert(key, || self.inner.embed_image(bytes))
    }
}
