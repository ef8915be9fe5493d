use serde::{Deserialize, Serialize};

use crate::tokenize::token_spans;

const SENTENCE_ENDS: &[char] = &['.', '!', '?', '。', '！', '？'];

/// A byte range of one packing unit's text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub doc_id: String,
    /// UTF-8 byte offsets into the unit's text, half-open.
    pub start: usize,
    pub end: usize,
    pub token_count: usize,
}

/// Splits `text` into pieces of at most `threshold` tokens.
///
/// A split lands after the last sentence-ending token (or a token followed by
/// a newline) within the budget; without one it falls exactly at the budget.
/// Whitespace between two pieces stays with the earlier piece, so the pieces
/// concatenate back to `text`.
pub fn segment_text(doc_id: &str, text: &str, threshold: usize) -> Vec<Segment> {
    assert!(threshold >= 1, "segment threshold must be at least 1");
    if text.is_empty() {
        return Vec::new();
    }
    let spans = token_spans(text);
    if spans.len() <= threshold {
        return vec![Segment { doc_id: doc_id.to_string(), start: 0, end: text.len(), token_count: spans.len() }];
    }

    // boundary[i]: a sentence ends with token i
    let boundary: Vec<bool> = spans
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let tok = &text[s.clone()];
            let gap_end = spans.get(i + 1).map_or(text.len(), |n| n.start);
            tok.ends_with(SENTENCE_ENDS) || text[s.end..gap_end].contains('\n')
        })
        .collect();

    let mut out = Vec::new();
    let mut first = 0usize; // first token of the current piece
    let mut start = 0usize; // byte start of the current piece
    while spans.len() - first > threshold {
        let window = first..first + threshold;
        let last = window.clone().rev().find(|&i| boundary[i]).unwrap_or(window.end - 1);
        let next = last + 1;
        let end = spans[next].start;
        out.push(Segment { doc_id: doc_id.to_string(), start, end, token_count: next - first });
        first = next;
        start = end;
    }
    out.push(Segment { doc_id: doc_id.to_string(), start, end: text.len(), token_count: spans.len() - first });
    out
}
