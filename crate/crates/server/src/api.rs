//! HTTP API consumed by the browser extension.
//!
//! * `POST /analyze` runs the pipeline over a page or a text selection
//! * `GET /techniques` lists the taxonomy with highlight colors
//! * `GET /health` reports liveness, provider mode and template version

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use propscan_core::ingest::{extract_article, IngestError};
use propscan_core::locator::MatchMethod;
use propscan_core::pipeline::{AnalysisCache, CostReport, PipelineError, Verdict};
use propscan_core::{AnnotatedArticle, Annotation, Article, ParagraphSpan, Pipeline, ProviderError, TechniqueSet};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::config::ServerConfig;

pub struct AppState {
    pub pipeline: Pipeline,
    pub config: ServerConfig,
    pub provider_mode: String,
}

impl AppState {
    pub fn new(pipeline: Pipeline, config: ServerConfig, provider_mode: impl Into<String>) -> Self {
        Self { pipeline, config, provider_mode: provider_mode.into() }
    }

    pub fn taxonomy(&self) -> &TechniqueSet {
        self.pipeline.taxonomy()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Page,
    Selection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeRequest {
    pub mode: Mode,
    pub html: Option<String>,
    pub text: Option<String>,
    pub url: Option<String>,
}

impl AnalyzeRequest {
    /// Turns the request body into an article, or a message explaining why not.
    pub fn into_article(self) -> Result<Article, String> {
        match (self.mode, self.html, self.text) {
            (_, Some(_), Some(_)) => Err("send either `html` or `text`, not both".into()),
            (Mode::Page, Some(html), None) => extract_article(&html, self.url.as_deref()).map_err(ingest_message),
            (Mode::Selection, None, Some(text)) => {
                let mut a = Article::from_selection(&text).map_err(ingest_message)?;
                a.source_url = self.url;
                Ok(a)
            }
            (Mode::Page, None, _) => Err("mode `page` requires `html`".into()),
            (Mode::Selection, _, None) => Err("mode `selection` requires `text`".into()),
        }
    }
}

fn ingest_message(e: IngestError) -> String {
    e.to_string()
}

/// One flagged passage. `start`/`end` are char offsets into `text`, absent
/// when the passage could not be found in the article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiAnnotation {
    pub technique: String,
    pub display_name: String,
    pub start: Option<usize>,
    pub end: Option<usize>,
    pub match_quality: Option<f64>,
    pub match_method: Option<MatchMethod>,
    pub explanation: String,
}

impl From<&Annotation> for ApiAnnotation {
    fn from(a: &Annotation) -> Self {
        Self {
            technique: a.technique.to_string(),
            display_name: a.display_name.clone(),
            start: a.span.map(|s| s.start),
            end: a.span.map(|s| s.end),
            match_quality: a.span.map(|s| s.match_quality),
            match_method: a.span.map(|s| s.method),
            explanation: a.explanation.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResponse {
    pub verdict: Verdict,
    pub annotations: Vec<ApiAnnotation>,
    /// The analyzed text; annotation offsets index into it.
    pub text: String,
    pub paragraph_map: Vec<ParagraphSpan>,
    pub warnings: Vec<String>,
    pub cost: CostReport,
    pub template_version: String,
}

impl From<&AnnotatedArticle> for AnalyzeResponse {
    fn from(r: &AnnotatedArticle) -> Self {
        Self {
            verdict: r.verdict,
            annotations: r.annotations.iter().map(ApiAnnotation::from).collect(),
            text: r.article.text.clone(),
            paragraph_map: r.article.paragraph_map.clone(),
            warnings: r.warnings(),
            cost: r.cost.clone(),
            template_version: r.template_version.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: ErrorBody,
    /// Detected techniques without spans, when only localization failed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub partial: Vec<ApiAnnotation>,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorResponse,
    retry_after: Option<u64>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorResponse { error: ErrorBody { code: code.into(), message: message.into() }, partial: Vec::new() },
            retry_after: None,
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let message = e.to_string();
        match e {
            PipelineError::EmptyArticle => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_article", message),
            PipelineError::ArticleTooLong { .. } => ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "article_too_long", message),
            PipelineError::UnparseableDetection { .. } => ApiError::new(StatusCode::BAD_GATEWAY, "unparseable_output", message),
            PipelineError::Provider { source: ProviderError::RateLimited { retry_after }, .. } => {
                let mut err = ApiError::new(StatusCode::TOO_MANY_REQUESTS, "rate_limited", message);
                err.retry_after = retry_after.map(|d| d.as_secs().max(1));
                err
            }
            PipelineError::Provider { partial, .. } => {
                let mut err = ApiError::new(StatusCode::BAD_GATEWAY, "provider_error", message);
                err.body.partial = partial.iter().map(ApiAnnotation::from).collect();
                err
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut resp = (self.status, Json(self.body)).into_response();
        if let Some(secs) = self.retry_after {
            resp.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from(secs));
        }
        resp
    }
}

async fn analyze(
    State(state): State<Arc<AppState>>,
    body: Result<Json<AnalyzeRequest>, JsonRejection>,
) -> Result<Json<AnalyzeResponse>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text()))?;
    let article = req.into_article().map_err(|m| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_input", m))?;
    let run = state.pipeline.analyze(&article);
    let result = tokio::time::timeout(state.config.request_timeout(), run)
        .await
        .map_err(|_| ApiError::new(StatusCode::GATEWAY_TIMEOUT, "timeout", "analysis did not finish in time"))??;
    Ok(Json(AnalyzeResponse::from(&result)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueEntry {
    pub id: String,
    pub display_name: String,
    pub definition: String,
    pub example: String,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniquesResponse {
    pub version: String,
    pub default_on: bool,
    pub techniques: Vec<TechniqueEntry>,
}

pub fn techniques_response(state: &AppState) -> TechniquesResponse {
    let tax = state.taxonomy();
    TechniquesResponse {
        version: tax.version().to_string(),
        default_on: state.config.default_on,
        techniques: tax
            .iter()
            .map(|t| TechniqueEntry {
                id: t.id.to_string(),
                display_name: t.display_name.clone(),
                definition: t.definition.clone(),
                example: t.example.clone(),
                color: state.config.color_for(&t.id).to_string(),
            })
            .collect(),
    }
}

async fn techniques(State(state): State<Arc<AppState>>) -> Json<TechniquesResponse> {
    Json(techniques_response(&state))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub provider_mode: String,
    pub template_version: String,
}

async fn health(State(state): State<Arc<AppState>>) -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok".into(),
        provider_mode: state.provider_mode.clone(),
        template_version: state.pipeline.template_version().to_string(),
    })
}

/// `patterns` entries match exactly, or by prefix when they end in `*`.
pub fn origin_allowed(patterns: &[String], origin: &str) -> bool {
    patterns.iter().any(|p| match p.strip_suffix('*') {
        Some(prefix) => origin.starts_with(prefix),
        None => origin == p,
    })
}

fn cors(origins: &[String]) -> CorsLayer {
    let origins = origins.to_vec();
    CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE])
        .allow_origin(AllowOrigin::predicate(move |origin, _| {
            origin.to_str().is_ok_and(|o| origin_allowed(&origins, o))
        }))
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = cors(&state.config.cors_origins);
    Router::new()
        .route("/analyze", post(analyze))
        .route("/techniques", get(techniques))
        .route("/health", get(health))
        .layer(cors)
        .with_state(state)
}

/// Builds the pipeline described by `config`, logging color-map problems.
pub fn build_state(config: ServerConfig, registry: &propscan_core::ProviderRegistry) -> anyhow::Result<AppState> {
    use anyhow::Context;
    use propscan_core::taxonomy::load_taxonomy;
    use propscan_core::TemplateSet;

    let taxonomy = match &config.taxonomy_path {
        Some(p) => load_taxonomy(p).with_context(|| format!("loading taxonomy {}", p.display()))?,
        None => TechniqueSet::bundled(),
    };
    let templates = match &config.template_dir {
        Some(d) => TemplateSet::from_dir(d).with_context(|| format!("loading templates from {}", d.display()))?,
        None => TemplateSet::bundled(),
    };
    for w in config.color_warnings(&taxonomy) {
        tracing::warn!("{w}");
    }
    let provider = registry.build(&config.provider, &config.provider_settings)?;
    let mut cache = AnalysisCache::new(std::time::Duration::from_secs(config.cache_ttl_secs));
    if let Some(dir) = &config.cache_dir {
        cache = cache.with_dir(dir);
    }
    let pipeline = Pipeline::new(Arc::new(taxonomy), Arc::new(templates), provider, config.pipeline_config())
        .with_cache(Arc::new(cache));
    let mode = config.provider.clone();
    Ok(AppState::new(pipeline, config, mode))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(mode: Mode, html: Option<&str>, text: Option<&str>) -> AnalyzeRequest {
        AnalyzeRequest { mode, html: html.map(Into::into), text: text.map(Into::into), url: None }
    }

    #[test]
    fn request_validation() {
        assert!(req(Mode::Selection, Some("<p>x</p>"), Some("x")).into_article().unwrap_err().contains("not both"));
        assert!(req(Mode::Page, None, Some("x")).into_article().is_err());
        assert!(req(Mode::Selection, Some("<p>x</p>"), None).into_article().is_err());
        assert!(req(Mode::Selection, None, Some("   ")).into_article().is_err());
        let a = req(Mode::Selection, None, Some(" Stop those refugees; they are terrorists. ")).into_article().unwrap();
        assert_eq!(a.text, "Stop those refugees; they are terrorists.");
    }

    #[test]
    fn cors_patterns() {
        let origins = vec!["chrome-extension://*".to_string(), "https://ok.example".to_string()];
        let matches = |o: &str| origin_allowed(&origins, o);
        assert!(matches("chrome-extension://abcdef"));
        assert!(matches("https://ok.example"));
        assert!(!matches("https://ok.example.evil"));
    }
}
