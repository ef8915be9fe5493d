//! Deterministic word/CJK tokenizer.
//!
//! Text is split on Unicode whitespace. Inside each whitespace-delimited
//! chunk every CJK codepoint is its own token, and every maximal run of
//! non-CJK characters is one token. `"你好 world"` is three tokens,
//! `"hello你好world"` is four.
//!
//! Token counts drive every length threshold in the pipeline, so the rule
//! must stay stable across releases.

use std::ops::Range;

/// Returns true for codepoints that count as one token each.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3000..=0x303F   // CJK symbols and punctuation
        | 0x3040..=0x30FF // Hiragana, Katakana
        | 0x3100..=0x312F // Bopomofo
        | 0x3400..=0x4DBF // Extension A
        | 0x4E00..=0x9FFF // Unified ideographs
        | 0xAC00..=0xD7AF // Hangul syllables
        | 0xF900..=0xFAFF // Compatibility ideographs
        | 0xFF00..=0xFFEF // Halfwidth and fullwidth forms
        | 0x20000..=0x2FA1F)
}

/// Number of tokens in `text`.
pub fn count_tokens(text: &str) -> usize {
    let mut n = 0;
    // true while inside a non-CJK run
    let mut in_word = false;
    for c in text.chars() {
        if c.is_whitespace() {
            in_word = false;
        } else if is_cjk(c) {
            n += 1;
            in_word = false;
        } else if !in_word {
            n += 1;
            in_word = true;
        }
    }
    n
}

/// Byte ranges of every token, in order. `token_spans(t).len() == count_tokens(t)`.
pub fn token_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || is_cjk(c) {
            if let Some(s) = word_start.take() {
                spans.push(s..i);
            }
            if !c.is_whitespace() {
                spans.push(i..i + c.len_utf8());
            }
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    if let Some(s) = word_start {
        spans.push(s..text.len());
    }
    spans
}

/// Token strings, borrowing from `text`.
pub fn tokens(text: &str) -> Vec<&str> {
    token_spans(text).into_iter().map(|r| &text[r]).collect()
}
