//! Response cache shared by concurrent evaluation workers, optionally
//! persisted as an append-only JSON-lines file.

use crate::hashing::sha256_hex;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoringMode {
    RankLabels,
    Generate { max_tokens: usize },
}

impl ScoringMode {
    fn tag(self) -> String {
        match self {
            ScoringMode::RankLabels => "rank:A|B".to_string(),
            ScoringMode::Generate { max_tokens } => format!("generate:{max_tokens}"),
        }
    }
}

/// Hash of `(model, prompt, scoring mode)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey(pub String);

impl CacheKey {
    pub fn new(model_name: &str, prompt: &str, mode: ScoringMode) -> Self {
        let mut material = Vec::with_capacity(model_name.len() + prompt.len() + 32);
        material.extend_from_slice(model_name.as_bytes());
        material.push(0);
        material.extend_from_slice(mode.tag().as_bytes());
        material.push(0);
        material.extend_from_slice(prompt.as_bytes());
        CacheKey(sha256_hex(material))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CachedResponse {
    Scores([f64; 2]),
    Generation(String),
}

#[derive(Serialize, Deserialize)]
struct Line {
    key: CacheKey,
    response: CachedResponse,
}

#[derive(Debug, Default)]
pub struct ResponseCache {
    entries: RwLock<HashMap<CacheKey, CachedResponse>>,
    file: Option<Mutex<File>>,
    path: Option<PathBuf>,
    skipped_lines: usize,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache::default()
    }

    /// Loads `path` if it exists and appends new entries to it. Unreadable
    /// lines are skipped; their keys will be fetched again.
    pub fn open(path: &Path) -> std::io::Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut entries = HashMap::new();
        let mut skipped_lines = 0;
        if path.exists() {
            for line in BufReader::new(File::open(path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Line>(&line) {
                    Ok(l) => {
                        entries.insert(l.key, l.response);
                    }
                    Err(_) => skipped_lines += 1,
                }
            }
        }
        if skipped_lines > 0 {
            log::warn!("{}: skipped {skipped_lines} unreadable cache lines", path.display());
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(ResponseCache {
            entries: RwLock::new(entries),
            file: Some(Mutex::new(file)),
            path: Some(path.to_path_buf()),
            skipped_lines,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &CacheKey) -> Option<CachedResponse> {
        self.entries.read().unwrap().get(key).cloned()
    }

    pub fn insert(&self, key: CacheKey, response: CachedResponse) -> std::io::Result<()> {
        if let Some(file) = &self.file {
            let line = serde_json::to_string(&Line {
                key: key.clone(),
                response: response.clone(),
            })
            .map_err(std::io::Error::other)?;
            let mut f = file.lock().unwrap();
            writeln!(f, "{line}")?;
        }
        self.entries.write().unwrap().insert(key, response);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_separates_model_prompt_and_mode() {
        let k = CacheKey::new("m", "p", ScoringMode::RankLabels);
        assert_eq!(k, CacheKey::new("m", "p", ScoringMode::RankLabels));
        assert_ne!(k, CacheKey::new("m2", "p", ScoringMode::RankLabels));
        assert_ne!(k, CacheKey::new("m", "p2", ScoringMode::RankLabels));
        assert_ne!(k, CacheKey::new("m", "p", ScoringMode::Generate { max_tokens: 8 }));
    }

    #[test]
    fn persists_and_skips_corrupt_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        {
            let c = ResponseCache::open(&path).unwrap();
            c.insert(CacheKey::new("m", "p", ScoringMode::RankLabels), CachedResponse::Scores([0.1, 0.9]))
                .unwrap();
            c.insert(
                CacheKey::new("m", "q", ScoringMode::Generate { max_tokens: 4 }),
                CachedResponse::Generation("So the answer is A.".into()),
            )
            .unwrap();
        }
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{not json\n");
        std::fs::write(&path, text).unwrap();

        let c = ResponseCache::open(&path).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.skipped_lines(), 1);
        assert_eq!(
            c.get(&CacheKey::new("m", "p", ScoringMode::RankLabels)),
            Some(CachedResponse::Scores([0.1, 0.9]))
        );
    }
}
