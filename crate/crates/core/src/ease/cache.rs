//! Probe cache, live-call accounting and request pacing.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

/// Counts requests that left the process, per provider.
#[derive(Debug, Default)]
pub struct CallRecorder {
    dns: AtomicUsize,
    scan: AtomicUsize,
    llm: AtomicUsize,
    translate: AtomicUsize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiveKind {
    Dns,
    Scan,
    Llm,
    Translate,
}

impl CallRecorder {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    fn slot(&self, kind: LiveKind) -> &AtomicUsize {
        match kind {
            LiveKind::Dns => &self.dns,
            LiveKind::Scan => &self.scan,
            LiveKind::Llm => &self.llm,
            LiveKind::Translate => &self.translate,
        }
    }

    pub fn record(&self, kind: LiveKind) {
        self.slot(kind).fetch_add(1, Ordering::SeqCst);
    }

    pub fn count(&self, kind: LiveKind) -> usize {
        self.slot(kind).load(Ordering::SeqCst)
    }

    pub fn total(&self) -> usize {
        [LiveKind::Dns, LiveKind::Scan, LiveKind::Llm, LiveKind::Translate].iter().map(|k| self.count(*k)).sum()
    }
}

/// Minimum spacing between requests to one provider.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(interval: Duration) -> Self {
        Self { interval, next: Mutex::new(None) }
    }

    /// Blocks until the caller may issue its request.
    pub fn wait(&self) {
        let sleep_for = {
            let mut next = self.next.lock().unwrap();
            let now = Instant::now();
            let slot = next.map(|n| n.max(now)).unwrap_or(now);
            *next = Some(slot + self.interval);
            slot - now
        };
        if !sleep_for.is_zero() {
            std::thread::sleep(sleep_for);
        }
    }
}

/// Counting semaphore bounding requests in flight.
#[derive(Debug)]
pub struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    pub fn new(permits: usize) -> Self {
        Self { free: Mutex::new(permits.max(1)), cv: Condvar::new() }
    }

    pub fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().unwrap();
            while *free == 0 {
                free = self.cv.wait(free).unwrap();
            }
            *free -= 1;
        }
        let out = f();
        *self.free.lock().unwrap() += 1;
        self.cv.notify_one();
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    at: u64,
    value: Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    entries: BTreeMap<String, Entry>,
}

fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Memo of provider answers keyed by `namespace:key`. Lives for one run,
/// and when given a file, is loaded from and saved to it; persisted
/// entries older than the TTL are ignored. Errors are never cached.
#[derive(Debug)]
pub struct ProbeCache {
    ttl: Duration,
    file: Option<PathBuf>,
    entries: Mutex<HashMap<String, Entry>>,
    pending: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Default for ProbeCache {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl ProbeCache {
    pub const DEFAULT_TTL: Duration = Duration::from_secs(24 * 3600);

    pub fn in_memory() -> Self {
        Self { ttl: Self::DEFAULT_TTL, file: None, entries: Mutex::new(HashMap::new()), pending: Mutex::new(HashMap::new()) }
    }

    /// A missing file starts empty; an unreadable one is an error.
    pub fn persistent(path: &Path, ttl: Duration) -> Result<Self> {
        let mut entries = HashMap::new();
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
            let f: CacheFile = serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            let now = now_secs();
            entries.extend(f.entries.into_iter().filter(|(_, e)| now.saturating_sub(e.at) < ttl.as_secs()));
        }
        Ok(Self { ttl, file: Some(path.to_path_buf()), entries: Mutex::new(entries), pending: Mutex::new(HashMap::new()) })
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached value or the result of `f`; concurrent callers asking for the
    /// same key wait for the first one instead of probing twice.
    pub fn get_or_try<T, F>(&self, namespace: &str, key: &str, f: F) -> std::result::Result<T, String>
    where
        T: Serialize + for<'de> Deserialize<'de>,
        F: FnOnce() -> std::result::Result<T, String>,
    {
        let k = format!("{namespace}:{key}");
        let lock = self.pending.lock().unwrap().entry(k.clone()).or_default().clone();
        let _guard = lock.lock().unwrap();
        if let Some(e) = self.entries.lock().unwrap().get(&k) {
            if let Ok(v) = serde_json::from_value(e.value.clone()) {
                return Ok(v);
            }
        }
        let v = f()?;
        let value = serde_json::to_value(&v).map_err(|e| e.to_string())?;
        self.entries.lock().unwrap().insert(k, Entry { at: now_secs(), value });
        Ok(v)
    }

    /// Write back to the backing file, if any.
    pub fn save(&self) -> Result<()> {
        let Some(path) = &self.file else { return Ok(()) };
        let entries: BTreeMap<String, Entry> = self.entries.lock().unwrap().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let text = serde_json::to_string_pretty(&CacheFile { version: 1, entries }).expect("cache serializes");
        std::fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.clone(), source })
    }
}
