//! Result cache keyed by article content, template version and model.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::RwLock;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::AnnotatedArticle;
use crate::ingest::Article;
use crate::locator::normalize_text;
use crate::text::sha256_hex;

pub const DEFAULT_TTL: Duration = Duration::from_secs(24 * 60 * 60);

/// Hash of the normalized article text, template version and model name.
pub fn cache_key(article: &Article, template_version: &str, model_name: &str) -> String {
    sha256_hex(format!("{}\0{template_version}\0{model_name}", normalize_text(&article.text)))
}

#[derive(Serialize, Deserialize)]
struct DiskEntry {
    stored_at_unix: u64,
    result: AnnotatedArticle,
}

/// In-process map with optional on-disk mirror. Entries expire after `ttl`.
#[derive(Debug)]
pub struct AnalysisCache {
    ttl: Duration,
    entries: RwLock<HashMap<String, (SystemTime, AnnotatedArticle)>>,
    dir: Option<PathBuf>,
}

impl AnalysisCache {
    pub fn new(ttl: Duration) -> Self {
        Self { ttl, entries: RwLock::new(HashMap::new()), dir: None }
    }

    pub fn with_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.dir = Some(dir.into());
        self
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    fn fresh(&self, stored: SystemTime) -> bool {
        SystemTime::now().duration_since(stored).map(|age| age < self.ttl).unwrap_or(true)
    }

    pub fn get(&self, key: &str) -> Option<AnnotatedArticle> {
        if let Some((at, v)) = self.entries.read().expect("cache lock").get(key) {
            if self.fresh(*at) {
                return Some(v.clone());
            }
        }
        let dir = self.dir.as_ref()?;
        let raw = std::fs::read_to_string(dir.join(format!("{key}.json"))).ok()?;
        let entry: DiskEntry = serde_json::from_str(&raw).ok()?;
        let at = UNIX_EPOCH + Duration::from_secs(entry.stored_at_unix);
        if !self.fresh(at) {
            return None;
        }
        self.entries.write().expect("cache lock").insert(key.to_string(), (at, entry.result.clone()));
        Some(entry.result)
    }

    pub fn insert(&self, key: &str, value: AnnotatedArticle) {
        let now = SystemTime::now();
        if let Some(dir) = &self.dir {
            let entry = DiskEntry {
                stored_at_unix: now.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
                result: value.clone(),
            };
            let written = std::fs::create_dir_all(dir).and_then(|_| {
                let body = serde_json::to_string(&entry).map_err(std::io::Error::other)?;
                std::fs::write(dir.join(format!("{key}.json")), body)
            });
            if let Err(e) = written {
                tracing::warn!(error = %e, "cannot persist cache entry");
            }
        }
        self.entries.write().expect("cache lock").insert(key.to_string(), (now, value));
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
