//! Grounding of model-quoted passages to character spans of the article.
//!
//! Three stages, first hit wins:
//! 1. exact substring search;
//! 2. search after [`normalize_text`] on both sides, mapped back to original offsets;
//! 3. fuzzy: every window of whole article words whose length is within ±20%
//!    of the passage's word count, scored by word-level edit similarity
//!    `1 - levenshtein / max(len_a, len_b)`. The best window at or above the
//!    threshold wins; ties go to the earliest start, then the shortest window.
//!
//! All offsets are char (Unicode scalar) offsets.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::{byte_to_char, words_with_char_spans};

pub const DEFAULT_THRESHOLD: f64 = 0.80;
pub const DEFAULT_WINDOW_SLACK: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMethod {
    Exact,
    Normalized,
    Fuzzy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub match_quality: f64,
    pub method: MatchMethod,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LocateError {
    #[error("article or passage is empty")]
    EmptyInput,
    #[error("no window reaches the similarity threshold (best {best:.3})")]
    NoMatch { best: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Locator {
    pub threshold: f64,
    pub window_slack: f64,
}

impl Default for Locator {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD, window_slack: DEFAULT_WINDOW_SLACK }
    }
}

/// [`Locator::locate`] with default settings.
pub fn locate(article_text: &str, passage: &str) -> Result<Span, LocateError> {
    Locator::default().locate(article_text, passage)
}

impl Locator {
    pub fn with_threshold(threshold: f64) -> Self {
        Self { threshold, ..Self::default() }
    }

    pub fn locate(&self, article_text: &str, passage: &str) -> Result<Span, LocateError> {
        if article_text.trim().is_empty() || passage.trim().is_empty() {
            return Err(LocateError::EmptyInput);
        }

        if let Some(b) = article_text.find(passage) {
            let start = byte_to_char(article_text, b);
            return Ok(Span {
                start,
                end: start + passage.chars().count(),
                match_quality: 1.0,
                method: MatchMethod::Exact,
            });
        }

        let (norm_article, map) = normalize_with_map(article_text);
        let norm_passage = normalize_text(passage);
        if let Some(b) = norm_article.find(&norm_passage) {
            let k = byte_to_char(&norm_article, b);
            let len = norm_passage.chars().count();
            return Ok(Span {
                start: map[k].0,
                end: map[k + len - 1].1,
                match_quality: 1.0,
                method: MatchMethod::Normalized,
            });
        }

        let words = words_with_char_spans(article_text);
        let passage_words: Vec<String> = passage.split_whitespace().map(normalize_text).collect();
        let article_words: Vec<String> = words.iter().map(|(_, _, w)| normalize_text(w)).collect();
        let best = best_window(&article_words, &passage_words, self.window_slack);
        match best {
            Some(w) if w.similarity >= self.threshold => {
                debug_assert!(w.similarity < 1.0);
                Ok(Span {
                    start: words[w.start].0,
                    end: words[w.start + w.len - 1].1,
                    match_quality: w.similarity,
                    method: MatchMethod::Fuzzy,
                })
            }
            Some(w) => Err(LocateError::NoMatch { best: w.similarity }),
            None => Err(LocateError::NoMatch { best: 0.0 }),
        }
    }
}

/// Inclusive window-length bounds for a passage of `m` words over `n` article words.
pub fn window_bounds(m: usize, n: usize, slack: f64) -> (usize, usize) {
    let lo = ((m as f64) * (1.0 - slack)).floor().max(1.0) as usize;
    let hi = ((m as f64) * (1.0 + slack)).ceil() as usize;
    (lo.min(n), hi.min(n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: usize,
    pub len: usize,
    pub similarity: f64,
}

/// Best-scoring word window. One edit-distance table per start position
/// yields the distance for every window length at once.
pub fn best_window(article: &[String], passage: &[String], slack: f64) -> Option<Window> {
    let (n, m) = (article.len(), passage.len());
    if n == 0 || m == 0 {
        return None;
    }
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut a = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(m);
    for (words, out) in [(article, &mut a), (passage, &mut p)] {
        for w in words {
            let next = ids.len() as u32;
            out.push(*ids.entry(w.as_str()).or_insert(next));
        }
    }

    let (lo, hi) = window_bounds(m, n, slack);
    let mut best: Option<Window> = None;
    let mut col = vec![0usize; m + 1];
    for start in 0..n {
        let max_len = hi.min(n - start);
        if max_len < lo {
            break;
        }
        // col[i] = distance(p[..i], a[start..start+j]) for the current j
        for (i, c) in col.iter_mut().enumerate() {
            *c = i;
        }
        for j in 1..=max_len {
            let tok = a[start + j - 1];
            let mut diag = col[0];
            col[0] = j;
            for i in 1..=m {
                let up = col[i];
                let cost = usize::from(p[i - 1] != tok);
                col[i] = (diag + cost).min(up + 1).min(col[i - 1] + 1);
                diag = up;
            }
            if j >= lo {
                let similarity = 1.0 - col[m] as f64 / m.max(j) as f64;
                if best.is_none_or(|b| similarity > b.similarity) {
                    best = Some(Window { start, len: j, similarity });
                }
            }
        }
    }
    best
}

/// Canonical form used for matching: typographic quotes, dashes and ellipses
/// mapped to ASCII, whitespace runs collapsed to one space, trimmed, lowercased.
pub fn normalize_text(s: &str) -> String {
    normalize_with_map(s).0
}

/// [`normalize_text`] plus, for every output char, the `[start, end)` char
/// range of the input it came from.
pub fn normalize_with_map(s: &str) -> (String, Vec<(usize, usize)>) {
    let mut out = String::with_capacity(s.len());
    let mut map = Vec::with_capacity(s.len());
    for (i, c) in s.chars().enumerate() {
        let span = (i, i + 1);
        if c.is_whitespace() {
            if !out.is_empty() && !out.ends_with(' ') {
                out.push(' ');
                map.push(span);
            }
            continue;
        }
        match c {
            '“' | '”' | '„' | '‟' | '«' | '»' | '″' => {
                out.push('"');
                map.push(span);
            }
            '‘' | '’' | '‚' | '‛' | '′' => {
                out.push('\'');
                map.push(span);
            }
            '–' | '—' | '‒' | '―' | '−' | '‐' | '‑' => {
                out.push('-');
                map.push(span);
            }
            '…' => {
                out.push_str("...");
                map.extend([span; 3]);
            }
            _ => {
                for lc in c.to_lowercase() {
                    out.push(lc);
                    map.push(span);
                }
            }
        }
    }
    if out.ends_with(' ') {
        out.pop();
        map.pop();
    }
    (out, map)
}

/// Word-level edit similarity between two texts after normalization.
pub fn word_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<String> = a.split_whitespace().map(normalize_text).collect();
    let b: Vec<String> = b.split_whitespace().map(normalize_text).collect();
    let denom = a.len().max(b.len());
    if denom == 0 {
        return 1.0;
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    1.0 - prev[b.len()] as f64 / denom as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::char_slice;
    use proptest::prelude::*;

    const ARTICLE: &str = "The minister said the plan was sound. Critics called it a “disaster” — a reckless gamble with the nation's future. Nobody asked the farmers what they thought about the dam.";

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_text("A  B"), "a b");
        assert_eq!(normalize_text("“Hi” — ok"), "\"hi\" - ok");
        assert_eq!(normalize_text("  wait…\n\tthen "), "wait... then");
        assert_eq!(normalize_text(""), "");
    }

    #[test]
    fn whole_article_is_exact() {
        let s = locate(ARTICLE, ARTICLE).unwrap();
        assert_eq!((s.start, s.end, s.match_quality, s.method), (0, ARTICLE.chars().count(), 1.0, MatchMethod::Exact));
    }

    #[test]
    fn interior_substring_first_occurrence() {
        let s = locate(ARTICLE, "the").unwrap();
        assert_eq!(s.method, MatchMethod::Exact);
        assert_eq!(s.start, 18); // case-sensitive: skips the leading "The"
        let s = locate(ARTICLE, "a reckless gamble").unwrap();
        assert_eq!(char_slice(ARTICLE, s.start, s.end), "a reckless gamble");
        assert_eq!(s.match_quality, 1.0);
    }

    #[test]
    fn glyph_and_case_drift_is_normalized() {
        let s = locate(ARTICLE, "critics called it a \"DISASTER\" - a reckless").unwrap();
        assert_eq!(s.method, MatchMethod::Normalized);
        assert_eq!(s.match_quality, 1.0);
        assert_eq!(char_slice(ARTICLE, s.start, s.end), "Critics called it a “disaster” — a reckless");
    }

    #[test]
    fn paraphrased_words_fuzzy_match() {
        // 20-word sentence, two words swapped for synonyms
        let article = "Intro line here. The government has once again betrayed the hard working people of this proud country with its latest terrible decision today. Outro.";
        let passage = "The government has once again betrayed the hard working citizens of this proud nation with its latest terrible decision today.";
        let s = locate(article, passage).unwrap();
        assert_eq!(s.method, MatchMethod::Fuzzy);
        assert!(s.match_quality >= 0.8);
        assert_eq!(
            char_slice(article, s.start, s.end),
            "The government has once again betrayed the hard working people of this proud country with its latest terrible decision today."
        );
        assert!((s.match_quality - 0.9).abs() < 1e-12);
    }

    #[test]
    fn unrelated_passage_is_no_match() {
        let err = locate(ARTICLE, "completely different words that never appear anywhere").unwrap_err();
        assert!(matches!(err, LocateError::NoMatch { .. }));
        assert_eq!(locate("", "x"), Err(LocateError::EmptyInput));
        assert_eq!(locate("x", "  "), Err(LocateError::EmptyInput));
    }

    #[test]
    fn threshold_is_configurable() {
        let passage = "Nobody asked the ranchers what they believed regarding the dam.";
        assert!(locate(ARTICLE, passage).is_err());
        let s = Locator::with_threshold(0.6).locate(ARTICLE, passage).unwrap();
        assert_eq!(s.method, MatchMethod::Fuzzy);
        assert!(char_slice(ARTICLE, s.start, s.end).starts_with("Nobody asked"));
    }

    #[test]
    fn window_bounds_cover_slack() {
        assert_eq!(window_bounds(10, 100, 0.2), (8, 12));
        assert_eq!(window_bounds(1, 100, 0.2), (1, 2));
        assert_eq!(window_bounds(10, 5, 0.2), (5, 5));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,60}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }

        #[test]
        fn verbatim_substrings_are_exact(words in prop::collection::vec("[a-e]{1,3}", 3..40), a in 0usize..40, len in 1usize..10) {
            let article = words.join(" ");
            let a = a % words.len();
            let b = (a + len).min(words.len());
            let passage = words[a..b].join(" ");
            let span = locate(&article, &passage).unwrap();
            prop_assert_eq!(span.method, MatchMethod::Exact);
            prop_assert_eq!(span.match_quality, 1.0);
            prop_assert_eq!(span.start, byte_to_char(&article, article.find(&passage).unwrap()));
        }

        #[test]
        fn spans_stay_in_bounds(words in prop::collection::vec("[a-d]{1,2}", 1..30), p in prop::collection::vec("[a-d]{1,2}", 1..8)) {
            let article = words.join(" ");
            let passage = p.join(" ");
            if let Ok(span) = Locator::with_threshold(0.0).locate(&article, &passage) {
                prop_assert!(span.start < span.end && span.end <= article.chars().count());
                let sim = word_similarity(char_slice(&article, span.start, span.end), &passage);
                prop_assert!(sim + 1e-12 >= span.match_quality || span.method != MatchMethod::Fuzzy);
                prop_assert_eq!(span.match_quality == 1.0, span.method != MatchMethod::Fuzzy);
            }
        }
    }
}
