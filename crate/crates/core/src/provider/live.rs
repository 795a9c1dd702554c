use std::fmt;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CompletionProvider, CompletionRequest, CompletionResponse, ProviderError, ProviderSettings, ProviderTag};

/// Exponential backoff over transient failures: delays of `base`, `2·base`, `4·base`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 3, base_delay_ms: 1000 }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1u64 << retry.min(20)))
    }
}

/// Client for OpenAI-compatible `chat/completions` endpoints.
pub struct LiveProvider {
    client: reqwest::Client,
    endpoint: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    log_prompts: bool,
}

impl fmt::Debug for LiveProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiveProvider")
            .field("endpoint", &self.endpoint)
            .field("has_api_key", &self.api_key.is_some())
            .field("retry", &self.retry)
            .finish()
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

impl LiveProvider {
    /// The key comes from `settings.api_key`, else the `settings.api_key_env`
    /// variable. A missing key is reported as `AuthFailure` on first use.
    pub fn from_settings(settings: &ProviderSettings) -> Result<Self, ProviderError> {
        let api_key = settings
            .api_key
            .clone()
            .or_else(|| std::env::var(&settings.api_key_env).ok())
            .filter(|k| !k.trim().is_empty());
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(settings.timeout_secs.max(1)))
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: settings.endpoint.clone(),
            api_key,
            retry: settings.retry,
            log_prompts: settings.log_prompts,
        })
    }

    async fn attempt(&self, request: &CompletionRequest, key: &str) -> Result<CompletionResponse, ProviderError> {
        let body = json!({
            "model": request.model_name,
            "messages": [{"role": "user", "content": request.prompt.text}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        });
        let started = Instant::now();
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(key)
            .json(&body)
            .send()
            .await
            .map_err(classify_reqwest)?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = resp.text().await.map_err(classify_reqwest)?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(ProviderError::AuthFailure(format!("status {status}"))),
            429 => return Err(ProviderError::RateLimited { retry_after }),
            _ => return Err(ProviderError::Status { status, body: truncate(&text, 2000) }),
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .filter(|c| !c.trim().is_empty())
            .ok_or_else(|| ProviderError::MalformedResponse("no message content".into()))?;
        if self.log_prompts {
            tracing::debug!(request_id = %request.request_id, prompt = %request.prompt.text, reply = %content, "completion");
        }
        Ok(CompletionResponse {
            text: content,
            input_tokens: parsed.usage.as_ref().and_then(|u| u.prompt_tokens),
            output_tokens: parsed.usage.as_ref().and_then(|u| u.completion_tokens),
            latency: started.elapsed(),
            provider_tag: ProviderTag::Live,
        })
    }
}

fn classify_reqwest(e: reqwest::Error) -> ProviderError {
    if e.is_timeout() {
        ProviderError::Timeout
    } else {
        ProviderError::Transport(e.to_string())
    }
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((b, _)) => format!("{}…", &s[..b]),
        None => s.to_string(),
    }
}

#[async_trait]
impl CompletionProvider for LiveProvider {
    fn tag(&self) -> ProviderTag {
        ProviderTag::Live
    }

    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        if request.max_output_tokens == 0 {
            return Err(ProviderError::Config("max_output_tokens must be positive".into()));
        }
        let key = self
            .api_key
            .as_deref()
            .ok_or_else(|| ProviderError::AuthFailure("no API key configured".into()))?;
        let mut retry = 0;
        loop {
            match self.attempt(request, key).await {
                Err(e) if e.is_transient() && retry < self.retry.max_retries => {
                    let delay = self.retry.delay(retry);
                    tracing::warn!(request_id = %request.request_id, error = %e, ?delay, "retrying completion");
                    tokio::time::sleep(delay).await;
                    retry += 1;
                }
                other => return other,
            }
        }
    }
}
