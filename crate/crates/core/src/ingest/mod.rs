//! Article ingestion: HTML main-content extraction, plain-text selections and
//! the Flesch-Kincaid readability check.

mod html;
mod readability;

use serde::{Deserialize, Serialize};

pub use html::{extract_article, MIN_ARTICLE_WORDS};
pub use readability::{count_syllables, fkgl, readability, Readability};

use crate::text::word_count;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("no readable content found (needs at least {MIN_ARTICLE_WORDS} words)")]
    NoReadableContent,
    #[error("selection is empty")]
    EmptySelection,
    #[error("not enough text to score: need at least one sentence and one word")]
    NotEnoughText,
}

/// Span of the article text that came from one source node.
///
/// `start`/`end` are char offsets into [`Article::text`]. Consecutive entries
/// tile the text: each span runs up to the start of the next one, so the
/// paragraph separator belongs to the preceding paragraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParagraphSpan {
    pub start: usize,
    pub end: usize,
    /// CSS selector path of the source element, or `"selection"`.
    pub locator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub paragraph_map: Vec<ParagraphSpan>,
    pub word_count: usize,
}

impl Article {
    /// Wraps user-selected text as an article with a single paragraph.
    pub fn from_selection(text: &str) -> Result<Self, IngestError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(IngestError::EmptySelection);
        }
        let len = text.chars().count();
        Ok(Self {
            text: text.to_string(),
            source_url: None,
            title: None,
            paragraph_map: vec![ParagraphSpan { start: 0, end: len, locator: "selection".into() }],
            word_count: word_count(text),
        })
    }

    /// Plain text with paragraphs separated by blank lines.
    pub fn from_plain_text(text: &str, source_url: Option<String>) -> Result<Self, IngestError> {
        let paragraphs: Vec<(String, String)> = text
            .split("\n\n")
            .map(|p| p.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|p| !p.is_empty())
            .enumerate()
            .map(|(i, p)| (p, format!("paragraph-{}", i + 1)))
            .collect();
        if paragraphs.is_empty() {
            return Err(IngestError::NoReadableContent);
        }
        Ok(Self::from_paragraphs(paragraphs, source_url, None))
    }

    pub(crate) fn from_paragraphs(
        paragraphs: Vec<(String, String)>,
        source_url: Option<String>,
        title: Option<String>,
    ) -> Self {
        const SEP: &str = "\n\n";
        let mut text = String::new();
        let mut starts = Vec::with_capacity(paragraphs.len());
        let mut pos = 0;
        for (i, (para, _)) in paragraphs.iter().enumerate() {
            if i > 0 {
                text.push_str(SEP);
                pos += SEP.len();
            }
            starts.push(pos);
            text.push_str(para);
            pos += para.chars().count();
        }
        let total = pos;
        let paragraph_map = paragraphs
            .into_iter()
            .enumerate()
            .map(|(i, (_, locator))| ParagraphSpan {
                start: starts[i],
                end: starts.get(i + 1).copied().unwrap_or(total),
                locator,
            })
            .collect();
        let word_count = word_count(&text);
        Self { text, source_url, title, paragraph_map, word_count }
    }

    /// Length of the text in chars.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// The contiguous run of source nodes covering char range `[start, end)`.
    pub fn nodes_for_span(&self, start: usize, end: usize) -> &[ParagraphSpan] {
        let first = self.paragraph_map.iter().position(|p| p.end > start);
        let last = self.paragraph_map.iter().rposition(|p| p.start < end);
        match (first, last) {
            (Some(a), Some(b)) if a <= b => &self.paragraph_map[a..=b],
            _ => &[],
        }
    }

    /// Renders the paragraphs back into a minimal HTML document.
    pub fn to_trivial_html(&self) -> String {
        let mut out = String::from("<html><body><article>");
        for para in self.text.split("\n\n") {
            out.push_str("<p>");
            out.push_str(&escape_html(para));
            out.push_str("</p>");
        }
        out.push_str("</article></body></html>");
        out
    }
}

pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}
