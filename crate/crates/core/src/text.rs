//! Small text utilities shared across modules.

use sha2::{Digest, Sha256};

/// Number of whitespace-delimited tokens.
pub fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Converts a byte offset (on a char boundary) into a char offset.
pub fn byte_to_char(s: &str, byte: usize) -> usize {
    s[..byte].chars().count()
}

/// Converts a char offset into a byte offset; offsets past the end clamp to `s.len()`.
pub fn char_to_byte(s: &str, ch: usize) -> usize {
    s.char_indices().nth(ch).map(|(b, _)| b).unwrap_or(s.len())
}

/// Slices `s` by char offsets `[start, end)`.
pub fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let b0 = char_to_byte(s, start);
    let b1 = char_to_byte(s, end);
    &s[b0..b1]
}

/// Words of `s` with their char ranges `[start, end)`.
pub fn words_with_char_spans(s: &str) -> Vec<(usize, usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None; // (char idx, byte idx)
    let mut ci = 0;
    for (bi, c) in s.char_indices() {
        if c.is_whitespace() {
            if let Some((sc, sb)) = start.take() {
                out.push((sc, ci, &s[sb..bi]));
            }
        } else if start.is_none() {
            start = Some((ci, bi));
        }
        ci += 1;
    }
    if let Some((sc, sb)) = start {
        out.push((sc, ci, &s[sb..]));
    }
    out
}
