use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{CompletionProvider, CompletionRequest, CompletionResponse, ProviderError, ProviderTag};
use crate::parser::SENTINEL;
use crate::prompt::{estimate_tokens, PromptRole};
use crate::text::word_count;

/// Scripted replies, loadable from JSON:
///
/// ```json
/// {
///   "detection": "Loaded_Language - charged words.",
///   "localization": { "Loaded_Language": "Loaded_Language\n<passage>\n<reason>" },
///   "default_localization": null
/// }
/// ```
///
/// Localization keys match a technique id or any spelling that differs only
/// in case and punctuation (`Appeal_to_fear-prejudice` matches
/// `appeal_to_fear_prejudice`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default = "sentinel")]
    pub detection: String,
    #[serde(default)]
    pub localization: BTreeMap<String, String>,
    #[serde(default)]
    pub default_localization: Option<String>,
}

fn sentinel() -> String {
    SENTINEL.to_string()
}

impl Default for MockScript {
    fn default() -> Self {
        Self { detection: sentinel(), localization: BTreeMap::new(), default_localization: None }
    }
}

impl MockScript {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("cannot read mock script {}: {e}", path.display())))?;
        serde_json::from_str(&raw).map_err(|e| ProviderError::Config(format!("invalid mock script: {e}")))
    }

    fn localization_for(&self, technique: &str) -> Option<&str> {
        let want = squash(technique);
        self.localization
            .iter()
            .find(|(k, _)| squash(k) == want)
            .map(|(_, v)| v.as_str())
            .or(self.default_localization.as_deref())
    }
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

type Handler = Box<dyn Fn(&CompletionRequest) -> Result<String, ProviderError> + Send + Sync>;

/// Deterministic provider answering from a script or a closure. Reported
/// usage is the word-rule estimate for prompt and reply.
pub struct MockProvider {
    handler: Handler,
    calls: AtomicUsize,
    delay: Duration,
}

impl MockProvider {
    pub fn new(script: MockScript) -> Self {
        Self::with_handler(move |req| match req.prompt.role {
            PromptRole::Detection => Ok(script.detection.clone()),
            PromptRole::Localization => {
                let technique = req.prompt.technique.as_ref().map(|t| t.as_str()).unwrap_or_default();
                script
                    .localization_for(technique)
                    .map(str::to_string)
                    .ok_or_else(|| ProviderError::Status { status: 500, body: format!("mock has no reply for {technique}") })
            }
        })
    }

    /// Answers every request with `reply`.
    pub fn fixed(reply: impl Into<String>) -> Self {
        let reply = reply.into();
        Self::with_handler(move |_| Ok(reply.clone()))
    }

    pub fn with_handler<F>(handler: F) -> Self
    where
        F: Fn(&CompletionRequest) -> Result<String, ProviderError> + Send + Sync + 'static,
    {
        Self { handler: Box::new(handler), calls: AtomicUsize::new(0), delay: Duration::ZERO }
    }

    /// Sleeps before answering; for concurrency tests.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    /// Number of `complete` calls so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl CompletionProvider for MockProvider {
    fn tag(&self) -> ProviderTag {
        ProviderTag::Mock
    }

    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }
        let text = (self.handler)(request)?;
        Ok(CompletionResponse {
            input_tokens: Some(request.prompt.estimated_tokens),
            output_tokens: Some(estimate_tokens(word_count(&text) as u64)),
            text,
            latency: self.delay,
            provider_tag: ProviderTag::Mock,
        })
    }
}
