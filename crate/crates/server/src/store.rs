//! Completed runs kept for download, with LRU eviction and optional
//! on-disk persistence.

use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use lru::LruCache;
use mmsum_core::hashing::sha256_hex;
use mmsum_core::SummaryBundle;

pub const DEFAULT_CAPACITY: usize = 64;

pub struct RunStore {
    runs: Mutex<LruCache<String, Arc<SummaryBundle>>>,
    dir: Option<PathBuf>,
    counter: AtomicU64,
}

impl RunStore {
    pub fn in_memory(capacity: usize) -> Self {
        Self::build(capacity, None)
    }

    /// Runs are also written to `dir/{run_id}.json` and reloaded on
    /// start-up, oldest first.
    pub fn persistent(capacity: usize, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let store = Self::build(capacity, Some(dir.clone()));
        let mut files: Vec<(std::time::SystemTime, PathBuf)> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .filter_map(|p| Some((std::fs::metadata(&p).ok()?.modified().ok()?, p)))
            .collect();
        files.sort();
        let mut next = 0;
        for (_, path) in files {
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
                continue;
            };
            if let Some(n) = id.strip_prefix('r').and_then(|r| r.split('-').next()).and_then(|n| n.parse::<u64>().ok()) {
                next = next.max(n + 1);
            }
            match std::fs::read(&path).map(|b| serde_json::from_slice::<SummaryBundle>(&b)) {
                Ok(Ok(bundle)) => store.remember(id, Arc::new(bundle)),
                _ => tracing::warn!(path = %path.display(), "skipping unreadable stored run"),
            }
        }
        store.counter.store(next, Ordering::Relaxed);
        Ok(store)
    }

    fn build(capacity: usize, dir: Option<PathBuf>) -> Self {
        let cap = NonZeroUsize::new(capacity.max(1)).expect("capacity ≥ 1");
        Self {
            runs: Mutex::new(LruCache::new(cap)),
            dir,
            counter: AtomicU64::new(0),
        }
    }

    fn remember(&self, id: String, bundle: Arc<SummaryBundle>) {
        let evicted = self.runs.lock().expect("run store lock").push(id.clone(), bundle);
        if let (Some((old, _)), Some(dir)) = (evicted, &self.dir) {
            if old != id {
                let _ = std::fs::remove_file(dir.join(format!("{old}.json")));
            }
        }
    }

    /// Stores a finished run and returns its id.
    pub fn insert(&self, bundle: SummaryBundle) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let json = serde_json::to_vec(&bundle).expect("bundle serializes");
        let id = format!("r{n}-{}", &sha256_hex(&json)[..12]);
        if let Some(dir) = &self.dir {
            if let Err(e) = std::fs::write(dir.join(format!("{id}.json")), &json) {
                tracing::warn!(error = %e, "run not persisted");
            }
        }
        self.remember(id.clone(), Arc::new(bundle));
        id
    }

    pub fn get(&self, id: &str) -> Option<Arc<SummaryBundle>> {
        self.runs.lock().expect("run store lock").get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.runs.lock().expect("run store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
