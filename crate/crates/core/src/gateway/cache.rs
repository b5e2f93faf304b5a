//! Content-addressed response cache.
//!
//! Layout under the cache directory, one entry per key:
//!
//! - `<key>.request.json` — the canonicalized request that produced the entry
//! - `<key>.payload.json` — the response bytes exactly as first returned
//! - `index.tsv`          — append-only `key<TAB>kind` listing
//!
//! Writes go through a temp file plus rename and are serialized by a mutex,
//! so concurrent sweep workers never observe torn entries.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{canonical_json, ChatRequest, GatewayError};

/// SHA-256 digest of (provider id, model id, canonical request payload).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    digest: String,
    canonical: String,
}

impl CacheKey {
    fn from_canonical(canonical: String) -> CacheKey {
        let digest = hex::encode(Sha256::digest(canonical.as_bytes()));
        CacheKey { digest, canonical }
    }

    pub fn for_chat(provider_id: &str, request: &ChatRequest) -> CacheKey {
        let value = serde_json::json!({
            "kind": "chat",
            "provider_id": provider_id,
            "model_id": request.model_id,
            "request": request,
        });
        CacheKey::from_canonical(canonical_json(&value))
    }

    pub fn for_embedding(provider_id: &str, model_id: &str, text: &str) -> CacheKey {
        let value = serde_json::json!({
            "kind": "embedding",
            "provider_id": provider_id,
            "model_id": model_id,
            "text": text,
        });
        CacheKey::from_canonical(canonical_json(&value))
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// The canonical request string the digest was computed from.
    pub fn request_canonical(&self) -> String {
        self.canonical.clone()
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.digest)
    }
}

pub struct ResponseCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    /// Opens (and creates if needed) a cache directory.
    pub fn open(dir: impl Into<PathBuf>) -> Result<ResponseCache, GatewayError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)
            .map_err(|e| GatewayError::Cache(format!("create {}: {e}", dir.display())))?;
        Ok(ResponseCache { dir, write_lock: Mutex::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn payload_path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.payload.json", key.digest()))
    }

    fn request_path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.request.json", key.digest()))
    }

    /// Returns the cached payload bytes, or None on a miss.
    pub fn get(&self, key: &CacheKey) -> Result<Option<Vec<u8>>, GatewayError> {
        let path = self.payload_path(key);
        match fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(GatewayError::Cache(format!("read {}: {e}", path.display()))),
        }
    }

    /// Stores a payload under `key`. The first write wins; a repeat put for
    /// an existing key is a no-op, preserving cache soundness.
    pub fn put(
        &self,
        key: &CacheKey,
        request_canonical: &str,
        payload: &[u8],
        kind: &str,
    ) -> Result<(), GatewayError> {
        let _guard = self.write_lock.lock().expect("cache lock");
        let payload_path = self.payload_path(key);
        if payload_path.exists() {
            return Ok(());
        }
        self.write_atomic(&self.request_path(key), request_canonical.as_bytes())?;
        self.write_atomic(&payload_path, payload)?;
        let index = self.dir.join("index.tsv");
        let line = format!("{}\t{}\n", key.digest(), kind);
        let mut existing = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&index)
            .map_err(|e| GatewayError::Cache(format!("open {}: {e}", index.display())))?;
        use std::io::Write;
        existing
            .write_all(line.as_bytes())
            .map_err(|e| GatewayError::Cache(format!("append {}: {e}", index.display())))?;
        Ok(())
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), GatewayError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes)
            .map_err(|e| GatewayError::Cache(format!("write {}: {e}", tmp.display())))?;
        fs::rename(&tmp, path)
            .map_err(|e| GatewayError::Cache(format!("rename {}: {e}", path.display())))?;
        Ok(())
    }

    /// Number of payload entries on disk.
    pub fn entry_count(&self) -> usize {
        fs::read_dir(&self.dir)
            .map(|entries| {
                entries
                    .filter_map(|e| e.ok())
                    .filter(|e| e.file_name().to_string_lossy().ends_with(".payload.json"))
                    .count()
            })
            .unwrap_or(0)
    }
}
