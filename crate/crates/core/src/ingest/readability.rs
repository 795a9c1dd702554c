//! Flesch-Kincaid Grade Level.
//!
//! `0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59`
//!
//! Coefficients are the standard Kincaid et al. (1975) values. Syllables come
//! from a vowel-group heuristic: count runs of `aeiouy`, drop a silent trailing
//! `e` (but not the `-le` of "table"), never go below one. Known error modes:
//! "-ed" endings ("jumped" counts 2), diphthong splits ("create" counts 1), and
//! numbers/acronyms, which count as one syllable.

use serde::Serialize;

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Readability {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
    pub grade: f64,
}

pub fn fkgl(text: &str) -> Result<f64, IngestError> {
    readability(text).map(|r| r.grade)
}

pub fn readability(text: &str) -> Result<Readability, IngestError> {
    let sentences = text
        .split(['.', '!', '?'])
        .filter(|s| s.split_whitespace().any(is_word))
        .count();
    let words: Vec<&str> = text.split_whitespace().filter(|w| is_word(w)).collect();
    if sentences == 0 || words.is_empty() {
        return Err(IngestError::NotEnoughText);
    }
    let syllables: usize = words.iter().map(|w| count_syllables(w)).sum();
    let (w, s, y) = (words.len() as f64, sentences as f64, syllables as f64);
    Ok(Readability {
        words: words.len(),
        sentences,
        syllables,
        grade: 0.39 * (w / s) + 11.8 * (y / w) - 15.59,
    })
}

fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(char::is_ascii_alphabetic)
        .map(|c| c.to_ascii_lowercase())
        .collect();
    if letters.is_empty() {
        return 1;
    }
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut count = 0;
    let mut prev_vowel = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !prev_vowel {
            count += 1;
        }
        prev_vowel = v;
    }
    let n = letters.len();
    if count > 1 && letters[n - 1] == 'e' {
        let consonant_le = n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
        if !consonant_le {
            count -= 1;
        }
    }
    count.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syllable_heuristic() {
        assert_eq!(count_syllables("cat"), 1);
        assert_eq!(count_syllables("make"), 1);
        assert_eq!(count_syllables("table"), 2);
        assert_eq!(count_syllables("propaganda"), 4);
        assert_eq!(count_syllables("the"), 1);
        assert_eq!(count_syllables("2024"), 1);
        assert_eq!(count_syllables("Rhythm"), 1);
    }

    #[test]
    fn closed_form_synthetic_case() {
        let sentence = ["cat"; 10].join(" ") + ".";
        let text = vec![sentence; 10].join(" ");
        let r = readability(&text).unwrap();
        assert_eq!((r.words, r.sentences, r.syllables), (100, 10, 100));
        assert!((r.grade - 0.11).abs() < 1e-6, "{}", r.grade);
    }

    #[test]
    fn duplication_invariant() {
        let t = "The quick brown fox jumps over the lazy dog. Propaganda spreads quickly! Does it?";
        let twice = format!("{t} {t}");
        assert!((fkgl(t).unwrap() - fkgl(&twice).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn longer_sentences_increase_grade() {
        let short = "Dogs bark loud. Cats run fast.";
        let long = "Dogs bark loud and cats run fast.";
        assert!(fkgl(long).unwrap() > fkgl(short).unwrap());
    }

    #[test]
    fn not_enough_text() {
        assert_eq!(fkgl(""), Err(IngestError::NotEnoughText));
        assert_eq!(fkgl("... !!! ??"), Err(IngestError::NotEnoughText));
        assert!(fkgl("One word").is_ok());
    }
}
