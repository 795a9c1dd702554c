use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{CompletionProvider, CompletionRequest, CompletionResponse, ProviderError, ProviderTag};
use crate::prompt::PromptRole;
use crate::taxonomy::TechniqueId;

/// One recorded completion. Stored as `<prompt_hash>.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    pub prompt_hash: String,
    pub role: PromptRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technique: Option<TechniqueId>,
    pub response_text: String,
    pub input_tokens: Option<u64>,
    pub output_tokens: Option<u64>,
}

/// Directory of hash-named fixture records.
#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    /// Writes the fixture for `request`/`response`, replacing any previous one.
    pub fn record_fixture(
        &self,
        request: &CompletionRequest,
        response: &CompletionResponse,
    ) -> Result<Fixture, ProviderError> {
        let fixture = Fixture {
            prompt_hash: request.prompt.hash(),
            role: request.prompt.role,
            technique: request.prompt.technique.clone(),
            response_text: response.text.clone(),
            input_tokens: response.input_tokens,
            output_tokens: response.output_tokens,
        };
        let storage = |e: std::io::Error| ProviderError::Storage(e.to_string());
        std::fs::create_dir_all(&self.dir).map_err(storage)?;
        let path = self.path_for(&fixture.prompt_hash);
        let tmp = path.with_extension("json.tmp");
        let body = serde_json::to_string_pretty(&fixture).map_err(|e| ProviderError::Storage(e.to_string()))? + "\n";
        std::fs::write(&tmp, body).map_err(storage)?;
        std::fs::rename(&tmp, &path).map_err(storage)?;
        Ok(fixture)
    }

    pub fn load(&self, hash: &str) -> Result<Fixture, ProviderError> {
        let path = self.path_for(hash);
        let raw = match std::fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(ProviderError::FixtureMissing { hash: hash.to_string() })
            }
            Err(e) => return Err(ProviderError::Storage(e.to_string())),
        };
        serde_json::from_str(&raw).map_err(|e| ProviderError::Storage(format!("{}: {e}", path.display())))
    }

    /// Every fixture in the directory, keyed by prompt hash.
    pub fn load_all(&self) -> Result<HashMap<String, Fixture>, ProviderError> {
        let entries = std::fs::read_dir(&self.dir)
            .map_err(|e| ProviderError::Storage(format!("{}: {e}", self.dir.display())))?;
        let mut out = HashMap::new();
        for entry in entries {
            let path = entry.map_err(|e| ProviderError::Storage(e.to_string()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let raw = std::fs::read_to_string(&path).map_err(|e| ProviderError::Storage(e.to_string()))?;
            let fixture: Fixture = serde_json::from_str(&raw)
                .map_err(|e| ProviderError::Storage(format!("{}: {e}", path.display())))?;
            out.insert(fixture.prompt_hash.clone(), fixture);
        }
        Ok(out)
    }
}

/// Serves recorded fixtures by prompt hash. Loaded once at construction.
#[derive(Debug)]
pub struct ReplayProvider {
    fixtures: HashMap<String, Fixture>,
}

impl ReplayProvider {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, ProviderError> {
        Ok(Self { fixtures: FixtureStore::new(dir.as_ref()).load_all()? })
    }

    pub fn from_fixtures(fixtures: impl IntoIterator<Item = Fixture>) -> Self {
        Self { fixtures: fixtures.into_iter().map(|f| (f.prompt_hash.clone(), f)).collect() }
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

#[async_trait]
impl CompletionProvider for ReplayProvider {
    fn tag(&self) -> ProviderTag {
        ProviderTag::Replay
    }

    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        let hash = request.prompt.hash();
        let f = self.fixtures.get(&hash).ok_or(ProviderError::FixtureMissing { hash })?;
        Ok(CompletionResponse {
            text: f.response_text.clone(),
            input_tokens: f.input_tokens,
            output_tokens: f.output_tokens,
            latency: Duration::ZERO,
            provider_tag: ProviderTag::Replay,
        })
    }
}

/// Forwards to `inner` and records every successful completion.
pub struct RecordingProvider {
    inner: Arc<dyn CompletionProvider>,
    store: FixtureStore,
}

impl RecordingProvider {
    pub fn new(inner: Arc<dyn CompletionProvider>, store: FixtureStore) -> Self {
        Self { inner, store }
    }
}

#[async_trait]
impl CompletionProvider for RecordingProvider {
    fn tag(&self) -> ProviderTag {
        self.inner.tag()
    }

    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        let response = self.inner.complete(request).await?;
        self.store.record_fixture(request, &response)?;
        Ok(response)
    }
}
