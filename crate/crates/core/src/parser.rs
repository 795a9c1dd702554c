//! Parsing of the two plain-text reply formats.
//!
//! Detection replies list one technique per line as `Name - explanation`, or
//! consist of the sentinel `no propaganda detected`. Localization replies have
//! the shape `<technique> <passage> <reason>`, either on three lines or run
//! together on one line.

use serde::{Deserialize, Serialize};

use crate::locator::normalize_text;
use crate::taxonomy::TechniqueSet;

/// Literal reply meaning the article is clean.
pub const SENTINEL: &str = "no propaganda detected";

/// Shortest word run accepted as a passage recovered from a single-line reply.
pub const MIN_RECOVERED_PASSAGE_WORDS: usize = 5;

/// Longest technique name, in words, accepted on a detection line.
const MAX_NAME_WORDS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("reply could not be parsed")]
    UnparseableOutput,
    /// No run of at least [`MIN_RECOVERED_PASSAGE_WORDS`] reply words occurs in
    /// the article. `body` is the reply minus any leading technique name.
    #[error("no passage of the reply occurs in the article")]
    PassageNotRecoverable { technique_name_raw: String, body: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDetection {
    pub technique_name_raw: String,
    /// Model reasoning from the detection call. Kept for the session log only.
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DetectionOutcome {
    NoPropaganda,
    Detected { detections: Vec<RawDetection>, warnings: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalizedFinding {
    pub technique_name_raw: String,
    pub passage: String,
    pub reason: String,
}

fn is_sentinel(s: &str) -> bool {
    let t = s.trim().trim_matches(|c: char| {
        c.is_whitespace() || matches!(c, '"' | '\'' | '“' | '”' | '‘' | '’' | '`' | '*' | '.' | '!')
    });
    t.eq_ignore_ascii_case(SENTINEL)
}

/// Drops list bullets, numbering and markdown emphasis from the start of a line.
fn strip_list_marker(line: &str) -> &str {
    let mut l = line.trim();
    loop {
        let before = l;
        if let Some(rest) = l.strip_prefix(['-', '*', '•', '+']).filter(|r| r.starts_with(char::is_whitespace)) {
            l = rest.trim_start();
        }
        let digits = l.chars().take_while(char::is_ascii_digit).count();
        if digits > 0 {
            let rest = &l[digits..];
            if let Some(r) = rest.strip_prefix(['.', ')']).filter(|r| r.starts_with(char::is_whitespace)) {
                l = r.trim_start();
            }
        }
        if l == before {
            return l;
        }
    }
}

fn clean_name(s: &str) -> String {
    s.trim()
        .trim_matches(|c: char| matches!(c, '*' | '`' | '"' | '\'' | '[' | ']' | '<' | '>'))
        .trim()
        .to_string()
}

/// Candidate `(name, explanation)` splits of a line, in left-to-right order.
/// Hyphen separators need surrounding whitespace since names such as
/// `Flag-Waving` contain hyphens; en/em dashes and colons do not.
fn candidate_splits(line: &str) -> Vec<(&str, &str)> {
    let mut out = Vec::new();
    for (i, c) in line.char_indices() {
        let sep_len = match c {
            '-' => {
                let before = line[..i].ends_with(char::is_whitespace);
                let after = line[i + 1..].starts_with(char::is_whitespace);
                if before && after {
                    1
                } else {
                    0
                }
            }
            '–' | '—' | ':' => c.len_utf8(),
            _ => 0,
        };
        if sep_len == 0 {
            continue;
        }
        let name = line[..i].trim();
        let rest = line[i + sep_len..].trim();
        if !name.is_empty() && !rest.is_empty() {
            out.push((name, rest));
        }
    }
    out
}

/// Parses a detection reply.
///
/// Lines of the form `Name - explanation` (also `–`, `—`, `:`) yield a
/// detection even when the name is unknown, so the caller can log the
/// hallucination. A bare line that is a known technique name also counts.
/// Anything else becomes a warning. Duplicates keep the first rationale.
pub fn parse_detection(text: &str, taxonomy: &TechniqueSet) -> Result<DetectionOutcome, ParseError> {
    if is_sentinel(text) {
        return Ok(DetectionOutcome::NoPropaganda);
    }
    let mut detections: Vec<RawDetection> = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    let mut warnings = Vec::new();
    let mut saw_sentinel = false;

    for raw_line in text.lines() {
        let line = strip_list_marker(raw_line);
        if line.is_empty() {
            continue;
        }
        if is_sentinel(line) {
            saw_sentinel = true;
            continue;
        }
        let splits = candidate_splits(line);
        let chosen = splits
            .iter()
            .find(|(name, _)| taxonomy.normalize_name(name).is_ok())
            .or_else(|| splits.first())
            .filter(|(name, _)| clean_name(name).split_whitespace().count() <= MAX_NAME_WORDS);
        let detection = match chosen {
            Some((name, rest)) => Some((clean_name(name), rest.trim().to_string())),
            None if taxonomy.normalize_name(line).is_ok() => Some((clean_name(line), String::new())),
            None => None,
        };
        let Some((name, rationale)) = detection else {
            warnings.push(format!("unparsed detection line: {line}"));
            continue;
        };
        if name.is_empty() {
            warnings.push(format!("unparsed detection line: {line}"));
            continue;
        }
        let key = match taxonomy.normalize_name(&name) {
            Ok(id) => id.to_string(),
            Err(_) => normalize_text(&name),
        };
        if seen.contains(&key) {
            warnings.push(format!("duplicate technique ignored: {name}"));
            continue;
        }
        seen.push(key);
        detections.push(RawDetection { technique_name_raw: name, rationale });
    }

    if detections.is_empty() {
        return if saw_sentinel { Ok(DetectionOutcome::NoPropaganda) } else { Err(ParseError::UnparseableOutput) };
    }
    if saw_sentinel {
        warnings.push("sentinel line ignored alongside detections".into());
    }
    Ok(DetectionOutcome::Detected { detections, warnings })
}

/// Renders detections in the canonical `Name - explanation` line format.
pub fn format_detections(detections: &[RawDetection]) -> String {
    detections
        .iter()
        .map(|d| format!("{} - {}", d.technique_name_raw, d.rationale))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Drops a leading field label ("Passage:", "Reason -") and angle brackets.
fn strip_field(s: &str) -> String {
    let mut t = s.trim();
    for label in ["propaganda technique", "technique", "passage", "reason", "explanation", "quote"] {
        if t.len() > label.len() && t.is_char_boundary(label.len()) && t[..label.len()].eq_ignore_ascii_case(label) {
            let rest = t[label.len()..].trim_start();
            if let Some(r) = rest.strip_prefix([':', '-', '–']) {
                t = r.trim_start();
                break;
            }
        }
    }
    let t = t.strip_prefix('<').and_then(|x| x.strip_suffix('>')).unwrap_or(t);
    t.trim().to_string()
}

fn strip_quotes(s: &str) -> String {
    let t = s.trim();
    for (open, close) in [('"', '"'), ('“', '”'), ('\'', '\''), ('‘', '’')] {
        if let Some(inner) = t.strip_prefix(open).and_then(|x| x.strip_suffix(close)) {
            return inner.trim().to_string();
        }
    }
    t.to_string()
}

/// Longest prefix of `words` (up to [`MAX_NAME_WORDS`]) that resolves to a technique.
fn leading_technique(words: &[&str], taxonomy: &TechniqueSet) -> Option<usize> {
    (1..=words.len().min(MAX_NAME_WORDS))
        .rev()
        .find(|&k| taxonomy.normalize_name(&words[..k].join(" ")).is_ok())
}

/// Parses a localization reply. `article_text` is needed to recover the
/// passage from single-line replies.
///
/// With three or more lines the first is the technique, the second the
/// passage and the rest the reason. Otherwise the leading technique name is
/// peeled off and the passage is the longest run of reply words (at least
/// [`MIN_RECOVERED_PASSAGE_WORDS`]) that also occurs in the article after
/// normalization; what follows it is the reason.
pub fn parse_localization(
    text: &str,
    article_text: &str,
    taxonomy: &TechniqueSet,
) -> Result<LocalizedFinding, ParseError> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if lines.is_empty() {
        return Err(ParseError::UnparseableOutput);
    }

    if lines.len() >= 3 {
        let technique = clean_name(&strip_field(lines[0]));
        let passage = strip_quotes(&strip_field(lines[1]));
        let reason = strip_field(&lines[2..].join(" "));
        if passage.is_empty() || reason.is_empty() {
            return Err(ParseError::UnparseableOutput);
        }
        return Ok(LocalizedFinding { technique_name_raw: technique, passage, reason });
    }

    let (technique, body) = if lines.len() == 2 && taxonomy.normalize_name(&strip_field(lines[0])).is_ok() {
        (clean_name(&strip_field(lines[0])), lines[1].to_string())
    } else {
        let joined = lines.join(" ");
        let words: Vec<&str> = joined.split_whitespace().collect();
        match leading_technique(&words, taxonomy) {
            Some(k) => (clean_name(&words[..k].join(" ")), words[k..].join(" ")),
            None => (String::new(), joined.clone()),
        }
    };
    let body = body.trim().to_string();
    if body.is_empty() {
        return Err(ParseError::UnparseableOutput);
    }

    let body_words: Vec<&str> = body.split_whitespace().collect();
    let Some((start, len)) = longest_shared_run(&body_words, article_text) else {
        return Err(ParseError::PassageNotRecoverable { technique_name_raw: technique, body });
    };
    let passage = strip_quotes(&body_words[start..start + len].join(" "));
    let after = body_words[start + len..].join(" ");
    let before = body_words[..start].join(" ");
    let reason = if after.trim().is_empty() { before } else { after };
    let reason = strip_quotes(reason.trim());
    if passage.is_empty() || reason.is_empty() {
        return Err(ParseError::UnparseableOutput);
    }
    Ok(LocalizedFinding { technique_name_raw: technique, passage, reason })
}

/// Longest run of consecutive `words` whose normalized join is a run of whole
/// normalized article words. Ties go to the earliest run. Quote marks at the
/// edges of words are ignored so `"Europe's ... fired."` still matches.
fn longest_shared_run(words: &[&str], article_text: &str) -> Option<(usize, usize)> {
    let key = |w: &str| {
        normalize_text(w)
            .trim_matches(|c: char| matches!(c, '"' | '\'' | '<' | '>' | '(' | ')'))
            .to_string()
    };
    let reply: Vec<String> = words.iter().map(|w| key(w)).collect();
    let article: Vec<String> = article_text.split_whitespace().map(key).collect();
    if reply.is_empty() || article.is_empty() {
        return None;
    }
    // run[j] = length of common suffix ending at reply[i], article[j]
    let mut prev = vec![0usize; article.len() + 1];
    let mut best: Option<(usize, usize)> = None;
    for (i, r) in reply.iter().enumerate() {
        let mut cur = vec![0usize; article.len() + 1];
        for (j, a) in article.iter().enumerate() {
            if !r.is_empty() && r == a {
                cur[j + 1] = prev[j] + 1;
                let len = cur[j + 1];
                let start = i + 1 - len;
                if best.is_none_or(|(bs, bl)| len > bl || (len == bl && start < bs)) {
                    best = Some((start, len));
                }
            }
        }
        prev = cur;
    }
    best.filter(|&(_, len)| len >= MIN_RECOVERED_PASSAGE_WORDS)
}
