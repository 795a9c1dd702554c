//! Rendering of the detection and localization prompts.
//!
//! Templates are plain text files with named placeholders (`{input_article}`,
//! `{technique}`, ...). Rendering is a single pass over pre-parsed segments, so
//! braces inside the article body are never re-interpreted.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::Article;
use crate::taxonomy::{TaxonomyError, Technique, TechniqueId, TechniqueSet};
use crate::text::{sha256_hex, word_count};

const DETECTION_TEMPLATE: &str = include_str!("../templates/detection.txt");
const LOCALIZATION_TEMPLATE: &str = include_str!("../templates/localization.txt");

const DETECTION_VARS: &[&str] = &["technique_count", "technique_briefs", "input_article"];
const LOCALIZATION_VARS: &[&str] = &["technique", "definition_of_technique", "input_article"];

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("article text is empty")]
    EmptyArticle,
    #[error(transparent)]
    Technique(#[from] TaxonomyError),
    #[error("template error: {0}")]
    Template(String),
    #[error("cannot read template: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptRole {
    Detection,
    Localization,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    pub text: String,
    pub role: PromptRole,
    pub estimated_tokens: u64,
    /// Technique under examination, for localization prompts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technique: Option<TechniqueId>,
}

impl PromptText {
    fn new(text: String, role: PromptRole, technique: Option<TechniqueId>) -> Self {
        let estimated_tokens = estimate_tokens(word_count(&text) as u64);
        Self { text, role, estimated_tokens, technique }
    }

    /// Content hash of the prompt text; keys replay fixtures.
    pub fn hash(&self) -> String {
        sha256_hex(self.text.as_bytes())
    }
}

/// Token estimate from a word count: 100 tokens per 75 words, rounded half up.
pub fn estimate_tokens(word_count: u64) -> u64 {
    (word_count * 200 + 75) / 150
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Lit(String),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Template {
    segments: Vec<Segment>,
}

impl Template {
    fn parse(src: &str, allowed: &[&str]) -> Result<Self, PromptError> {
        let mut segments = Vec::new();
        let mut rest = src;
        while let Some(open) = rest.find('{') {
            let Some(len) = rest[open + 1..].find('}') else { break };
            let name = &rest[open + 1..open + 1 + len];
            let is_ident = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !is_ident {
                segments.push(Segment::Lit(rest[..open + 1].to_string()));
                rest = &rest[open + 1..];
                continue;
            }
            if !allowed.contains(&name) {
                return Err(PromptError::Template(format!("unknown placeholder {{{name}}}")));
            }
            if open > 0 {
                segments.push(Segment::Lit(rest[..open].to_string()));
            }
            segments.push(Segment::Var(name.to_string()));
            rest = &rest[open + len + 2..];
        }
        if !rest.is_empty() {
            segments.push(Segment::Lit(rest.to_string()));
        }
        for var in allowed {
            if !segments.iter().any(|s| matches!(s, Segment::Var(v) if v == var)) {
                return Err(PromptError::Template(format!("missing placeholder {{{var}}}")));
            }
        }
        Ok(Self { segments })
    }

    fn render(&self, vars: &HashMap<&str, &str>) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Lit(s) => out.push_str(s),
                Segment::Var(v) => out.push_str(vars.get(v.as_str()).copied().unwrap_or_default()),
            }
        }
        out
    }
}

/// Versioned pair of prompt templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    detection: Template,
    localization: Template,
    version: String,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::bundled()
    }
}

impl TemplateSet {
    pub fn bundled() -> Self {
        Self::from_sources(DETECTION_TEMPLATE, LOCALIZATION_TEMPLATE).expect("bundled templates are valid")
    }

    pub fn from_sources(detection: &str, localization: &str) -> Result<Self, PromptError> {
        let version = sha256_hex(format!("{detection}\0{localization}"))[..16].to_string();
        Ok(Self {
            detection: Template::parse(detection, DETECTION_VARS)?,
            localization: Template::parse(localization, LOCALIZATION_VARS)?,
            version,
        })
    }

    /// Loads `detection.txt` and `localization.txt` from `dir`.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, PromptError> {
        let dir = dir.as_ref();
        let det = std::fs::read_to_string(dir.join("detection.txt"))?;
        let loc = std::fs::read_to_string(dir.join("localization.txt"))?;
        Self::from_sources(&det, &loc)
    }

    /// Hash of both template sources; stamped on every cost report and annotation.
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn build_detection_prompt(
        &self,
        article: &Article,
        taxonomy: &TechniqueSet,
    ) -> Result<PromptText, PromptError> {
        if article.text.trim().is_empty() {
            return Err(PromptError::EmptyArticle);
        }
        Ok(PromptText::new(self.render_detection(&article.text, taxonomy), PromptRole::Detection, None))
    }

    pub fn build_localization_prompt(
        &self,
        article: &Article,
        technique: &Technique,
    ) -> Result<PromptText, PromptError> {
        if article.text.trim().is_empty() {
            return Err(PromptError::EmptyArticle);
        }
        Ok(PromptText::new(
            self.render_localization(&article.text, technique),
            PromptRole::Localization,
            Some(technique.id.clone()),
        ))
    }

    /// Same as [`Self::build_localization_prompt`] but resolves the technique by id.
    pub fn build_localization_prompt_for(
        &self,
        article: &Article,
        taxonomy: &TechniqueSet,
        id: &TechniqueId,
    ) -> Result<PromptText, PromptError> {
        let technique = taxonomy.require(id)?;
        self.build_localization_prompt(article, technique)
    }

    /// Estimated tokens of the detection template without the article.
    pub fn detection_template_tokens(&self, taxonomy: &TechniqueSet) -> u64 {
        estimate_tokens(word_count(&self.render_detection("", taxonomy)) as u64)
    }

    /// Estimated tokens of the localization template without the article.
    pub fn localization_template_tokens(&self, technique: &Technique) -> u64 {
        estimate_tokens(word_count(&self.render_localization("", technique)) as u64)
    }

    fn render_detection(&self, article: &str, taxonomy: &TechniqueSet) -> String {
        let briefs = taxonomy.iter().map(technique_brief_line).collect::<Vec<_>>().join("\n");
        let count = taxonomy.len().to_string();
        let vars = HashMap::from([
            ("technique_count", count.as_str()),
            ("technique_briefs", briefs.as_str()),
            ("input_article", article),
        ]);
        self.detection.render(&vars)
    }

    fn render_localization(&self, article: &str, technique: &Technique) -> String {
        let vars = HashMap::from([
            ("technique", technique.prompt_name.as_str()),
            ("definition_of_technique", technique.definition.as_str()),
            ("input_article", article),
        ]);
        self.localization.render(&vars)
    }
}

/// `Name - definition, e.g., 'example'`
fn technique_brief_line(t: &Technique) -> String {
    format!("{} - {}, e.g., '{}'", t.prompt_name, t.definition, t.example)
}
