//! On-disk cache of rendered graphs and partitions, keyed by a SHA-256 of
//! the carpet spec content, the request and the crate version.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    /// `$CARPET_CACHE_DIR`, or `.carpet-cache/`.
    pub fn default_dir() -> PathBuf {
        std::env::var_os("CARPET_CACHE_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".carpet-cache"))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex digest of the parts and the crate version.
    pub fn key(parts: &[&str]) -> String {
        let mut h = Sha256::new();
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        for p in parts {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p.as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Cached bytes for `key`, computing and storing them on a miss. A
    /// cache that cannot be written is skipped with a warning.
    pub fn get_or_insert(&self, key: &str, compute: impl FnOnce() -> Result<Vec<u8>>) -> Result<Vec<u8>> {
        let path = self.dir.join(key);
        if let Ok(bytes) = std::fs::read(&path) {
            log::debug!("cache hit {}", path.display());
            return Ok(bytes);
        }
        let bytes = compute()?;
        let stored = std::fs::create_dir_all(&self.dir).and_then(|_| {
            // write then rename so a concurrent reader never sees a partial file
            let tmp = self.dir.join(format!("{key}.tmp{}", std::process::id()));
            std::fs::write(&tmp, &bytes)?;
            std::fs::rename(&tmp, &path)
        });
        if let Err(e) = stored {
            log::warn!("cache write to {} failed: {e}", path.display());
        }
        Ok(bytes)
    }
}
