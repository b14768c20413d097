//! Content-addressed byte cache for fetched pages and images.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::RwLock;
use std::time::{Duration, Instant, SystemTime};

use url::Url;

use super::Vertical;
use crate::hashing::sha256_hex;

/// Strips the fragment and sorts query parameters so that equivalent URLs
/// share a cache entry.
pub fn canonicalize_url(raw: &str) -> Result<String, url::ParseError> {
    let mut url = Url::parse(raw)?;
    url.set_fragment(None);
    let mut pairs: Vec<(String, String)> = url
        .query_pairs()
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    if pairs.is_empty() {
        url.set_query(None);
    } else {
        pairs.sort();
        url.query_pairs_mut().clear().extend_pairs(pairs);
    }
    Ok(url.into())
}

/// SHA-256 of (canonical URL, vertical), hex encoded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn for_url(url: &str, vertical: Vertical) -> Result<Self, url::ParseError> {
        let canonical = canonicalize_url(url)?;
        let mut material = canonical.into_bytes();
        material.push(0);
        material.extend_from_slice(vertical.as_str().as_bytes());
        Ok(Self(sha256_hex(&material)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Shared cache used by the fetch stage. Implementations must be safe for
/// concurrent use and must turn their own I/O failures into misses.
pub trait ByteCache: Send + Sync {
    fn get(&self, key: &CacheKey) -> Option<Vec<u8>>;
    fn put(&self, key: &CacheKey, value: &[u8]);
}

/// Cache that stores nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoCache;

impl ByteCache for NoCache {
    fn get(&self, _key: &CacheKey) -> Option<Vec<u8>> {
        None
    }
    fn put(&self, _key: &CacheKey, _value: &[u8]) {}
}

#[derive(Debug)]
pub struct MemoryCache {
    ttl: Duration,
    entries: RwLock<HashMap<CacheKey, (Instant, Vec<u8>)>>,
}

impl MemoryCache {
    pub fn new(ttl: Duration) -> Self {
        Self {
            ttl,
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().map(|e| e.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for MemoryCache {
    fn default() -> Self {
        Self::new(Duration::from_secs(3600))
    }
}

impl ByteCache for MemoryCache {
    fn get(&self, key: &CacheKey) -> Option<Vec<u8>> {
        let entries = self.entries.read().ok()?;
        let (stored, bytes) = entries.get(key)?;
        (stored.elapsed() < self.ttl).then(|| bytes.clone())
    }

    fn put(&self, key: &CacheKey, value: &[u8]) {
        if let Ok(mut entries) = self.entries.write() {
            entries.insert(key.clone(), (Instant::now(), value.to_vec()));
        }
    }
}

/// One file per key under a directory; expiry uses file mtime.
#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
    ttl: Duration,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>, ttl: Duration) -> Self {
        Self { dir: dir.into(), ttl }
    }

    fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{key}.bin"))
    }
}

impl ByteCache for DiskCache {
    fn get(&self, key: &CacheKey) -> Option<Vec<u8>> {
        let path = self.path(key);
        let modified = std::fs::metadata(&path).and_then(|m| m.modified()).ok()?;
        let age = SystemTime::now().duration_since(modified).unwrap_or_default();
        if age >= self.ttl {
            return None;
        }
        std::fs::read(path).ok()
    }

    fn put(&self, key: &CacheKey, value: &[u8]) {
        // Write-then-rename so concurrent readers never see a partial file.
        let result = std::fs::create_dir_all(&self.dir).and_then(|_| {
            let tmp = self.dir.join(format!("{key}.{:?}.tmp", std::thread::current().id()));
            std::fs::write(&tmp, value)?;
            std::fs::rename(&tmp, self.path(key))
        });
        if let Err(err) = result {
            tracing::warn!(%err, "disk cache write failed");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(url: &str) -> CacheKey {
        CacheKey::for_url(url, Vertical::Web).unwrap()
    }

    #[test]
    fn canonicalization_strips_fragment_and_sorts_query() {
        assert_eq!(
            canonicalize_url("https://Example.com/a?b=2&a=1#top").unwrap(),
            "https://example.com/a?a=1&b=2"
        );
        assert_eq!(key("https://x.org/p?b=1&a=2#f"), key("https://x.org/p?a=2&b=1"));
        assert_ne!(
            CacheKey::for_url("https://x.org/p", Vertical::Web).unwrap(),
            CacheKey::for_url("https://x.org/p", Vertical::News).unwrap()
        );
        assert!(canonicalize_url("not a url").is_err());
    }

    fn round_trip(cache: &dyn ByteCache) {
        let k = key("https://x.org/a");
        assert_eq!(cache.get(&key("https://x.org/unknown")), None);
        cache.put(&k, b"first");
        assert_eq!(cache.get(&k).as_deref(), Some(&b"first"[..]));
        cache.put(&k, b"second");
        assert_eq!(cache.get(&k).as_deref(), Some(&b"second"[..]));
    }

    #[test]
    fn memory_cache_round_trip() {
        round_trip(&MemoryCache::default());
    }

    #[test]
    fn disk_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        round_trip(&DiskCache::new(dir.path(), Duration::from_secs(60)));
    }

    #[test]
    fn expired_entries_miss() {
        let cache = MemoryCache::new(Duration::ZERO);
        let k = key("https://x.org/a");
        cache.put(&k, b"v");
        assert_eq!(cache.get(&k), None);
    }

    #[test]
    fn unwritable_disk_cache_degrades_to_miss() {
        let file = tempfile::NamedTempFile::new().unwrap();
        // A regular file where the directory should be.
        let cache = DiskCache::new(file.path().join("sub"), Duration::from_secs(60));
        let k = key("https://x.org/a");
        cache.put(&k, b"v");
        assert_eq!(cache.get(&k), None);
    }

    #[test]
    fn concurrent_access() {
        let cache = MemoryCache::default();
        std::thread::scope(|s| {
            for t in 0..8 {
                let cache = &cache;
                s.spawn(move || {
                    for i in 0..50 {
                        let k = key(&format!("https://x.org/{}", i % 10));
                        cache.put(&k, format!("{t}").as_bytes());
                        assert!(cache.get(&k).is_some());
                    }
                });
            }
        });
        assert_eq!(cache.len(), 10);
    }
}
