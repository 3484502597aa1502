//! Append-only JSON Lines cache of provider replies.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::provider::ProviderResponse;
use crate::ElicitError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub prompt: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<(String, f64)>>,
    pub timestamp: String,
}

impl CacheRecord {
    pub fn response(&self) -> ProviderResponse {
        ProviderResponse {
            text: self.response.clone(),
            token_scores: self.scores.clone(),
        }
    }
}

/// SHA-256 over the provider id, decoding parameters and prompt text.
pub fn cache_key(provider: &str, temperature: f64, token_scores: bool, prompt: &str) -> String {
    let mut h = Sha256::new();
    for part in [
        provider.as_bytes(),
        format!("temperature={temperature:?};token_scores={token_scores}").as_bytes(),
        prompt.as_bytes(),
    ] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    hex::encode(h.finalize())
}

pub struct ResponseCache {
    path: Option<PathBuf>,
    records: Mutex<HashMap<String, CacheRecord>>,
    file: Mutex<Option<File>>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache {
            path: None,
            records: Mutex::new(HashMap::new()),
            file: Mutex::new(None),
        }
    }

    /// Loads every record of an existing file and appends new ones to it.
    /// Unreadable lines, such as one torn by an interrupted write, are skipped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ElicitError> {
        let path = path.as_ref().to_path_buf();
        let mut records = HashMap::new();
        if path.exists() {
            let lines: Vec<String> = BufReader::new(File::open(&path)?).lines().collect::<Result<_, _>>()?;
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(line) {
                    Ok(r) => {
                        records.entry(r.key.clone()).or_insert(r);
                    }
                    Err(e) => log::warn!("skipping unreadable line {} of {}: {e}", i + 1, path.display()),
                }
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        let text = std::fs::read(&path)?;
        if text.last().is_some_and(|&b| b != b'\n') {
            file.write_all(b"\n")?;
        }
        Ok(ResponseCache {
            path: Some(path),
            records: Mutex::new(records),
            file: Mutex::new(Some(file)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<CacheRecord> {
        self.records.lock().expect("cache lock").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores a record, writing it through to disk first. An existing record
    /// under the same key wins.
    pub fn put(&self, record: CacheRecord) -> Result<CacheRecord, ElicitError> {
        let mut records = self.records.lock().expect("cache lock");
        if let Some(existing) = records.get(&record.key) {
            return Ok(existing.clone());
        }
        if let Some(f) = self.file.lock().expect("cache file lock").as_mut() {
            let mut line = serde_json::to_string(&record).map_err(|e| ElicitError::Format(e.to_string()))?;
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        records.insert(record.key.clone(), record.clone());
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(key: &str, resp: &str) -> CacheRecord {
        CacheRecord {
            key: key.into(),
            prompt: "p".into(),
            response: resp.into(),
            scores: None,
            timestamp: "2025-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn key_depends_on_every_part() {
        let k = cache_key("a", 0.1, false, "p");
        assert_eq!(k.len(), 64);
        assert_eq!(k, cache_key("a", 0.1, false, "p"));
        assert_ne!(k, cache_key("b", 0.1, false, "p"));
        assert_ne!(k, cache_key("a", 0.2, false, "p"));
        assert_ne!(k, cache_key("a", 0.1, true, "p"));
        assert_ne!(k, cache_key("a", 0.1, false, "q"));
        assert_ne!(cache_key("ab", 0.1, false, "c"), cache_key("a", 0.1, false, "bc"));
    }

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        {
            let c = ResponseCache::open(&path).unwrap();
            c.put(rec("k1", "0.2")).unwrap();
            c.put(rec("k2", "0.4")).unwrap();
            assert_eq!(c.put(rec("k1", "other")).unwrap().response, "0.2");
        }
        let mut text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        text.push_str("{\"key\": \"torn");
        std::fs::write(&path, text).unwrap();
        let c = ResponseCache::open(&path).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get("k2").unwrap().response, "0.4");
        c.put(rec("k3", "0.6")).unwrap();
        drop(c);
        assert_eq!(ResponseCache::open(&path).unwrap().get("k3").unwrap().response, "0.6");
    }
}
