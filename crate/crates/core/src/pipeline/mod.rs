//! Two-stage analysis: one detection call, then one localization call per
//! detected technique, assembled into an [`AnnotatedArticle`].

mod cache;
mod cost;

use std::sync::Arc;
use std::time::Duration;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use time::OffsetDateTime;

pub use cache::{cache_key, AnalysisCache, DEFAULT_TTL};
pub use cost::{estimate_cost, CostModel, CostReport, Micros, Pricing, StageCost, TechniqueCost};

use crate::ingest::Article;
use crate::locator::{LocateError, Locator, Span};
use crate::parser::{parse_detection, parse_localization, DetectionOutcome, ParseError};
use crate::prompt::{estimate_tokens, PromptError, PromptRole, PromptText, TemplateSet};
use crate::provider::{CompletionProvider, CompletionRequest, CompletionResponse, ProviderError, DEFAULT_MODEL};
use crate::taxonomy::{TechniqueId, TechniqueSet};
use crate::text::word_count;

pub const DEFAULT_MAX_ARTICLE_WORDS: usize = 2000;
pub const DEFAULT_FANOUT: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("article text is empty")]
    EmptyArticle,
    #[error("article has {words} words, limit is {max}")]
    ArticleTooLong { words: usize, max: usize },
    #[error("provider failed: {source}")]
    Provider {
        #[source]
        source: ProviderError,
        /// Detected techniques, unplaced, when detection succeeded but no localization did.
        partial: Vec<Annotation>,
        session_log: SessionLog,
    },
    #[error("detection reply could not be parsed")]
    UnparseableDetection { session_log: SessionLog },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub max_article_words: usize,
    /// Concurrent localization calls per analysis.
    pub fanout: usize,
    pub locator: Locator,
    pub pricing: Pricing,
    pub cache_ttl: Duration,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            model_name: DEFAULT_MODEL.into(),
            temperature: 0.0,
            max_output_tokens: 1024,
            max_article_words: DEFAULT_MAX_ARTICLE_WORDS,
            fanout: DEFAULT_FANOUT,
            locator: Locator::default(),
            pricing: Pricing::default(),
            cache_ttl: DEFAULT_TTL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    PropagandaFound,
    NoneFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub technique: TechniqueId,
    pub display_name: String,
    /// `None` when the quoted passage could not be grounded in the article.
    pub span: Option<Span>,
    pub explanation: String,
    pub source_call_ids: Vec<String>,
    #[serde(with = "time::serde::rfc3339")]
    pub created_at: OffsetDateTime,
    pub template_version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogKind {
    Prompt,
    Reply,
    /// Detection-stage reasoning; never shown to readers.
    Rationale,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub kind: LogKind,
    pub stage: PromptRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technique: Option<TechniqueId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionLog {
    pub entries: Vec<LogEntry>,
}

impl SessionLog {
    fn push(&mut self, kind: LogKind, stage: PromptRole, technique: Option<&TechniqueId>, request_id: Option<&str>, text: impl Into<String>) {
        self.entries.push(LogEntry {
            kind,
            stage,
            technique: technique.cloned(),
            request_id: request_id.map(str::to_string),
            text: text.into(),
        });
    }

    pub fn warnings(&self) -> impl Iterator<Item = &LogEntry> {
        self.entries.iter().filter(|e| e.kind == LogKind::Warning)
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("log entry serializes") + "\n")
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedArticle {
    pub article: Article,
    pub verdict: Verdict,
    pub annotations: Vec<Annotation>,
    pub session_log: SessionLog,
    pub cost: CostReport,
    pub template_version: String,
}

impl AnnotatedArticle {
    pub fn warnings(&self) -> Vec<String> {
        self.session_log.warnings().map(|e| e.text.clone()).collect()
    }
}

/// Everything one localization call produced, merged after the fan-out.
struct LocalizationResult {
    technique: TechniqueId,
    log: SessionLog,
    usage: Option<TechniqueCost>,
    outcome: Result<Option<Annotation>, ProviderError>,
}

pub struct Pipeline {
    taxonomy: Arc<TechniqueSet>,
    templates: Arc<TemplateSet>,
    provider: Arc<dyn CompletionProvider>,
    config: PipelineConfig,
    cache: Option<Arc<AnalysisCache>>,
}

impl Pipeline {
    pub fn new(
        taxonomy: Arc<TechniqueSet>,
        templates: Arc<TemplateSet>,
        provider: Arc<dyn CompletionProvider>,
        config: PipelineConfig,
    ) -> Self {
        Self { taxonomy, templates, provider, config, cache: None }
    }

    pub fn with_cache(mut self, cache: Arc<AnalysisCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn taxonomy(&self) -> &TechniqueSet {
        &self.taxonomy
    }

    pub fn template_version(&self) -> &str {
        self.templates.version()
    }

    pub fn provider(&self) -> &Arc<dyn CompletionProvider> {
        &self.provider
    }

    pub fn cache_key(&self, article: &Article) -> String {
        cache_key(article, self.templates.version(), &self.config.model_name)
    }

    pub async fn analyze(&self, article: &Article) -> Result<AnnotatedArticle, PipelineError> {
        if article.text.trim().is_empty() {
            return Err(PipelineError::EmptyArticle);
        }
        let words = word_count(&article.text);
        if words > self.config.max_article_words {
            return Err(PipelineError::ArticleTooLong { words, max: self.config.max_article_words });
        }
        let key = self.cache_key(article);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            tracing::debug!(%key, "analysis served from cache");
            return Ok(hit);
        }

        let result = self.run(article).await?;
        if let Some(cache) = &self.cache {
            cache.insert(&key, result.clone());
        }
        Ok(result)
    }

    fn request(&self, prompt: PromptText, request_id: String) -> CompletionRequest {
        CompletionRequest {
            prompt,
            temperature: self.config.temperature,
            max_output_tokens: self.config.max_output_tokens,
            model_name: self.config.model_name.clone(),
            request_id,
        }
    }

    fn usage(prompt: &PromptText, response: &CompletionResponse) -> (u64, u64) {
        (
            response.input_tokens.unwrap_or(prompt.estimated_tokens),
            response
                .output_tokens
                .unwrap_or_else(|| estimate_tokens(word_count(&response.text) as u64)),
        )
    }

    async fn run(&self, article: &Article) -> Result<AnnotatedArticle, PipelineError> {
        let version = self.templates.version().to_string();
        let mut log = SessionLog::default();
        let stage = PromptRole::Detection;

        let prompt = self.templates.build_detection_prompt(article, &self.taxonomy).map_err(|e| match e {
            PromptError::EmptyArticle => PipelineError::EmptyArticle,
            other => unreachable!("detection prompt from loaded templates: {other}"),
        })?;
        let det_id = format!("det-{}", &prompt.hash()[..12]);
        log.push(LogKind::Prompt, stage, None, Some(&det_id), prompt.text.clone());
        let response = match self.provider.complete(&self.request(prompt.clone(), det_id.clone())).await {
            Ok(r) => r,
            Err(source) => {
                log.push(LogKind::Error, stage, None, Some(&det_id), source.to_string());
                return Err(PipelineError::Provider { source, partial: Vec::new(), session_log: log });
            }
        };
        log.push(LogKind::Reply, stage, None, Some(&det_id), response.text.clone());
        let (din, dout) = Self::usage(&prompt, &response);
        let detection_cost = self.config.pricing.stage(din, dout);

        let detections = match parse_detection(&response.text, &self.taxonomy) {
            Ok(DetectionOutcome::NoPropaganda) => Vec::new(),
            Ok(DetectionOutcome::Detected { detections, warnings }) => {
                for w in warnings {
                    log.push(LogKind::Warning, stage, None, Some(&det_id), w);
                }
                detections
            }
            Err(_) => {
                log.push(LogKind::Error, stage, None, Some(&det_id), "unparseable detection reply");
                return Err(PipelineError::UnparseableDetection { session_log: log });
            }
        };

        let mut techniques: Vec<TechniqueId> = Vec::new();
        let mut rationales: Vec<String> = Vec::new();
        for d in detections {
            match self.taxonomy.normalize_name(&d.technique_name_raw) {
                Ok(id) if techniques.contains(&id) => {
                    log.push(LogKind::Warning, stage, Some(&id), Some(&det_id), format!("duplicate technique ignored: {}", d.technique_name_raw));
                }
                Ok(id) => {
                    if !d.rationale.is_empty() {
                        log.push(LogKind::Rationale, stage, Some(&id), Some(&det_id), d.rationale.clone());
                    }
                    techniques.push(id);
                    rationales.push(d.rationale);
                }
                Err(_) => log.push(
                    LogKind::Warning,
                    stage,
                    None,
                    Some(&det_id),
                    format!("unknown technique dropped: {}", d.technique_name_raw),
                ),
            }
        }

        let results: Vec<LocalizationResult> = stream::iter(techniques.iter().cloned())
            .map(|id| self.localize(article, id, &det_id))
            .buffered(self.config.fanout.max(1))
            .collect()
            .await;

        let mut annotations = Vec::new();
        let mut per_technique = Vec::new();
        let mut failures = Vec::new();
        for r in results {
            log.entries.extend(r.log.entries);
            per_technique.extend(r.usage);
            match r.outcome {
                Ok(Some(a)) => annotations.push(a),
                Ok(None) => {}
                Err(e) => failures.push((r.technique, e)),
            }
        }
        if !failures.is_empty() && failures.len() == techniques.len() {
            // Nothing was localized; hand back what detection said, unplaced.
            let partial = techniques
                .iter()
                .zip(rationales)
                .map(|(id, rationale)| Annotation {
                    display_name: self.taxonomy.require(id).map(|t| t.display_name.clone()).unwrap_or_default(),
                    technique: id.clone(),
                    span: None,
                    explanation: rationale,
                    source_call_ids: vec![det_id.clone()],
                    created_at: OffsetDateTime::now_utc(),
                    template_version: version.clone(),
                })
                .collect();
            let (_, source) = failures.swap_remove(0);
            return Err(PipelineError::Provider { source, partial, session_log: log });
        }
        for (id, e) in &failures {
            log.push(LogKind::Warning, PromptRole::Localization, Some(id), None, format!("localization failed: {e}"));
        }

        let position = |id: &TechniqueId| self.taxonomy.position(id).unwrap_or(usize::MAX);
        annotations.sort_by_key(|a| (a.span.map_or(usize::MAX, |s| s.start), position(&a.technique)));

        let verdict = if annotations.is_empty() { Verdict::NoneFound } else { Verdict::PropagandaFound };
        let cost = CostReport::new(self.config.pricing, detection_cost, per_technique, version.clone());
        Ok(AnnotatedArticle {
            article: article.clone(),
            verdict,
            annotations,
            session_log: log,
            cost,
            template_version: version,
        })
    }

    async fn localize(&self, article: &Article, id: TechniqueId, det_id: &str) -> LocalizationResult {
        let stage = PromptRole::Localization;
        let mut log = SessionLog::default();
        let technique = self.taxonomy.require(&id).expect("normalized ids exist");
        let prompt = self
            .templates
            .build_localization_prompt(article, technique)
            .expect("article checked non-empty");
        let req_id = format!("loc-{}-{}", id, &prompt.hash()[..12]);
        log.push(LogKind::Prompt, stage, Some(&id), Some(&req_id), prompt.text.clone());

        let response = match self.provider.complete(&self.request(prompt.clone(), req_id.clone())).await {
            Ok(r) => r,
            Err(e) => {
                log.push(LogKind::Error, stage, Some(&id), Some(&req_id), e.to_string());
                return LocalizationResult { technique: id, log, usage: None, outcome: Err(e) };
            }
        };
        log.push(LogKind::Reply, stage, Some(&id), Some(&req_id), response.text.clone());
        let (tin, tout) = Self::usage(&prompt, &response);
        let usage = Some(TechniqueCost { technique: Some(id.clone()), cost: self.config.pricing.stage(tin, tout) });

        let (passage, explanation) = match parse_localization(&response.text, &article.text, &self.taxonomy) {
            Ok(f) => {
                if let Ok(named) = self.taxonomy.normalize_name(&f.technique_name_raw) {
                    if named != id {
                        log.push(
                            LogKind::Warning,
                            stage,
                            Some(&id),
                            Some(&req_id),
                            format!("reply names {named} while {id} was requested"),
                        );
                    }
                }
                (f.passage, f.reason)
            }
            Err(ParseError::PassageNotRecoverable { body, .. }) => {
                log.push(LogKind::Warning, stage, Some(&id), Some(&req_id), "passage not recoverable from reply");
                (body.clone(), body)
            }
            Err(ParseError::UnparseableOutput) => {
                log.push(LogKind::Warning, stage, Some(&id), Some(&req_id), "unparseable localization reply");
                return LocalizationResult { technique: id, log, usage, outcome: Ok(None) };
            }
        };

        let span = match self.config.locator.locate(&article.text, &passage) {
            Ok(span) => Some(span),
            Err(LocateError::NoMatch { best }) => {
                log.push(
                    LogKind::Warning,
                    stage,
                    Some(&id),
                    Some(&req_id),
                    format!("passage not found in article (best similarity {best:.3}); explanation kept without highlight"),
                );
                None
            }
            Err(LocateError::EmptyInput) => None,
        };

        let annotation = Annotation {
            display_name: technique.display_name.clone(),
            technique: id.clone(),
            span,
            explanation,
            source_call_ids: vec![det_id.to_string(), req_id],
            created_at: OffsetDateTime::now_utc(),
            template_version: self.templates.version().to_string(),
        };
        LocalizationResult { technique: id, log, usage, outcome: Ok(Some(annotation)) }
    }
}
