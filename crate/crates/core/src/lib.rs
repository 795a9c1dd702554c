//! Propaganda technique detection engine.
//!
//! An article goes through two model calls: a detection call that lists the
//! techniques present, then one localization call per detected technique that
//! returns the offending passage and a reader-facing explanation. Passages are
//! grounded back to character spans in the article text.
//!
//! - [`taxonomy`]: the technique registry and name normalization
//! - [`prompt`]: deterministic rendering of both prompts and token estimates
//! - [`provider`]: completion providers (live HTTP, scripted mock, replay) behind
//!   one trait, selected by name through [`provider::ProviderRegistry`]
//! - [`parser`]: parsing of the two plain-text reply formats
//! - [`locator`]: exact, normalized and fuzzy passage grounding
//! - [`pipeline`]: orchestration, caching and cost accounting
//! - [`ingest`]: HTML main-content extraction and readability scoring

pub mod ingest;
pub mod locator;
pub mod parser;
pub mod pipeline;
pub mod prompt;
pub mod provider;
pub mod taxonomy;
pub mod text;

pub use ingest::{Article, ParagraphSpan};
pub use locator::{MatchMethod, Span};
pub use pipeline::{AnnotatedArticle, Annotation, CostReport, Pipeline, PipelineConfig, Pricing};
pub use prompt::{PromptRole, PromptText, TemplateSet};
pub use provider::{CompletionProvider, CompletionRequest, CompletionResponse, ProviderError, ProviderRegistry};
pub use taxonomy::{Technique, TechniqueId, TechniqueSet};
