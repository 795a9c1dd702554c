//! Completion providers.
//!
//! Every backend implements [`CompletionProvider`]. Backends are registered
//! by name in a [`ProviderRegistry`] and picked at runtime from configuration
//! or the command line. Built-ins:
//!
//! | name     | backend                                                     |
//! |----------|-------------------------------------------------------------|
//! | `live`   | OpenAI-compatible chat-completion endpoint over HTTP        |
//! | `mock`   | scripted replies, for demos and tests                       |
//! | `replay` | recorded replies looked up by prompt hash                   |
//!
//! Setting [`ProviderSettings::record_dir`] wraps whichever backend is built in
//! a [`RecordingProvider`] that writes replay fixtures as it goes.

mod live;
mod mock;
mod replay;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::prompt::PromptText;

pub use live::{LiveProvider, RetryPolicy};
pub use mock::{MockProvider, MockScript};
pub use replay::{Fixture, FixtureStore, RecordingProvider, ReplayProvider};

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-4";
pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderTag {
    Live,
    Mock,
    Replay,
}

impl fmt::Display for ProviderTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProviderTag::Live => "live",
            ProviderTag::Mock => "mock",
            ProviderTag::Replay => "replay",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: PromptText,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub model_name: String,
    pub request_id: String,
}

impl CompletionRequest {
    pub fn new(prompt: PromptText, request_id: impl Into<String>) -> Self {
        Self {
            prompt,
            temperature: 0.0,
            max_output_tokens: 1024,
            model_name: DEFAULT_MODEL.to_string(),
            request_id: request_id.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    /// Usage as reported by the backend; `None` when it reports nothing.
    pub input_tokens: Option<u64>,
    pub output_tokens: Option<u64>,
    #[serde(skip)]
    pub latency: Duration,
    pub provider_tag: ProviderTag,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("request timed out")]
    Timeout,
    #[error("rate limited by provider")]
    RateLimited { retry_after: Option<Duration> },
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("provider returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("no recorded fixture for prompt {hash}")]
    FixtureMissing { hash: String },
    #[error("fixture storage error: {0}")]
    Storage(String),
    #[error("provider configuration error: {0}")]
    Config(String),
}

impl ProviderError {
    /// Timeouts, rate limiting and 5xx responses are worth retrying.
    pub fn is_transient(&self) -> bool {
        match self {
            ProviderError::Timeout | ProviderError::RateLimited { .. } => true,
            ProviderError::Status { status, .. } => (500..600).contains(status),
            _ => false,
        }
    }
}

#[async_trait]
pub trait CompletionProvider: Send + Sync {
    fn tag(&self) -> ProviderTag;

    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError>;
}

/// Settings shared by all provider factories. Each factory reads the fields it needs.
#[derive(Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSettings {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    /// Explicit key; takes precedence over `api_key_env`. Never serialized.
    #[serde(skip)]
    pub api_key: Option<String>,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
    pub fixtures_dir: Option<PathBuf>,
    pub mock_script: Option<PathBuf>,
    /// When set, successful completions are recorded as replay fixtures here.
    pub record_dir: Option<PathBuf>,
    /// Log prompt and reply text at debug level.
    pub log_prompts: bool,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_ENDPOINT.into(),
            model: DEFAULT_MODEL.into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            api_key: None,
            timeout_secs: 60,
            retry: RetryPolicy::default(),
            fixtures_dir: None,
            mock_script: None,
            record_dir: None,
            log_prompts: false,
        }
    }
}

impl fmt::Debug for ProviderSettings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProviderSettings")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("api_key_env", &self.api_key_env)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("timeout_secs", &self.timeout_secs)
            .field("retry", &self.retry)
            .field("fixtures_dir", &self.fixtures_dir)
            .field("mock_script", &self.mock_script)
            .field("record_dir", &self.record_dir)
            .field("log_prompts", &self.log_prompts)
            .finish()
    }
}

pub type ProviderFactory =
    Box<dyn Fn(&ProviderSettings) -> Result<Arc<dyn CompletionProvider>, ProviderError> + Send + Sync>;

/// Named provider factories.
pub struct ProviderRegistry {
    factories: BTreeMap<String, ProviderFactory>,
}

impl Default for ProviderRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl ProviderRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("live", |s| Ok(Arc::new(LiveProvider::from_settings(s)?)));
        r.register("mock", |s| {
            let provider = match &s.mock_script {
                Some(path) => MockProvider::new(MockScript::load(path)?),
                None => MockProvider::new(MockScript::default()),
            };
            Ok(Arc::new(provider))
        });
        r.register("replay", |s| {
            let dir = s
                .fixtures_dir
                .as_ref()
                .ok_or_else(|| ProviderError::Config("replay provider needs a fixtures directory".into()))?;
            Ok(Arc::new(ReplayProvider::open(dir)?))
        });
        r
    }

    /// Adds or replaces a factory.
    pub fn register<F>(&mut self, name: impl Into<String>, factory: F)
    where
        F: Fn(&ProviderSettings) -> Result<Arc<dyn CompletionProvider>, ProviderError> + Send + Sync + 'static,
    {
        self.factories.insert(name.into(), Box::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, settings: &ProviderSettings) -> Result<Arc<dyn CompletionProvider>, ProviderError> {
        let factory = self.factories.get(name).ok_or_else(|| {
            let known = self.names().collect::<Vec<_>>().join(", ");
            ProviderError::Config(format!("unknown provider {name:?} (known: {known})"))
        })?;
        let provider = factory(settings)?;
        match &settings.record_dir {
            Some(dir) => Ok(Arc::new(RecordingProvider::new(provider, FixtureStore::new(dir)))),
            None => Ok(provider),
        }
    }
}
