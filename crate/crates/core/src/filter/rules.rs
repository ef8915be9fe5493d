use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::FilterConfig;
use crate::model::Document;

static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[a-zA-Z!/][^>]*>").unwrap());

const SENTENCE_ENDS: &[char] = &['.', '!', '?', '。', '！', '？', '\n'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleHit {
    Html,
    Repetition,
    TooShort,
    TooLong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Keep,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub doc_id: String,
    pub decision: Decision,
    pub rule_hits: Vec<RuleHit>,
    pub quality_score: Option<f64>,
    pub reason: String,
}

/// Whitespace-normalized, non-empty sentences.
pub fn sentences(text: &str) -> Vec<String> {
    text.split(SENTENCE_ENDS)
        .map(|s| s.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|s| !s.is_empty())
        .collect()
}

/// `1 - unique/total` over sentences; 0 when there are none.
pub fn repetition_ratio(text: &str) -> f64 {
    let sents = sentences(text);
    if sents.is_empty() {
        return 0.0;
    }
    let unique: HashSet<&str> = sents.iter().map(String::as_str).collect();
    1.0 - unique.len() as f64 / sents.len() as f64
}

pub fn has_html_tag(text: &str) -> bool {
    HTML_TAG.is_match(text)
}

/// Runs every local-defect rule and reports all hits, not only the first.
pub fn apply_rule_filters(doc: &Document, cfg: &FilterConfig) -> FilterVerdict {
    let mut hits = Vec::new();
    if has_html_tag(&doc.text) {
        hits.push(RuleHit::Html);
    }
    if repetition_ratio(&doc.text) > cfg.repetition_threshold {
        hits.push(RuleHit::Repetition);
    }
    let tokens = doc.token_count();
    if tokens < cfg.min_tokens {
        hits.push(RuleHit::TooShort);
    }
    if tokens > cfg.max_tokens {
        hits.push(RuleHit::TooLong);
    }
    let (decision, reason) = if hits.is_empty() {
        (Decision::Keep, "passed rule filters".to_string())
    } else {
        let names: Vec<&str> = hits.iter().map(|h| h.name()).collect();
        (Decision::Reject, format!("rule: {}", names.join(",")))
    };
    FilterVerdict { doc_id: doc.id.clone(), decision, rule_hits: hits, quality_score: None, reason }
}

impl RuleHit {
    pub fn name(self) -> &'static str {
        match self {
            RuleHit::Html => "html",
            RuleHit::Repetition => "repetition",
            RuleHit::TooShort => "too_short",
            RuleHit::TooLong => "too_long",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Source;
    use proptest::prelude::*;

    fn doc(text: &str) -> Document {
        Document { id: "d".into(), source: Source::General, domain: "web".into(), text: text.into(), interactions: None }
    }

    #[test]
    fn repetition_examples() {
        assert_eq!(repetition_ratio("a. b. c."), 0.0);
        assert!((repetition_ratio("same thing. same thing. same thing. same thing. same thing.") - 0.8).abs() < 1e-12);
        assert!((repetition_ratio("x. y. x. z.") - 0.25).abs() < 1e-12);
        assert_eq!(repetition_ratio(""), 0.0);
        assert_eq!(repetition_ratio("  ...  "), 0.0);
    }

    #[test]
    fn whitespace_normalized_before_compare() {
        assert!((repetition_ratio("the  cat sat.\nthe cat   sat!") - 0.5).abs() < 1e-12);
        assert!((repetition_ratio("你好世界。你好世界！") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn html_rejects() {
        let v = apply_rule_filters(
            &doc("<div> one two three four five six seven eight nine ten eleven"),
            &FilterConfig::default(),
        );
        assert_eq!(v.decision, Decision::Reject);
        assert_eq!(v.rule_hits, vec![RuleHit::Html]);
    }

    #[test]
    fn html_pattern_shapes() {
        assert!(has_html_tag("a <br/> b"));
        assert!(has_html_tag("<!DOCTYPE html>"));
        assert!(has_html_tag("</p>"));
        assert!(!has_html_tag("3 < 4 and 5 > 2"));
        assert!(!has_html_tag("<>"));
    }

    #[test]
    fn too_short() {
        let v = apply_rule_filters(&doc("one two three four five"), &FilterConfig::default());
        assert_eq!(v.rule_hits, vec![RuleHit::TooShort]);
    }

    #[test]
    fn too_long() {
        let cfg = FilterConfig { max_tokens: 12, ..FilterConfig::default() };
        let text = (0..13).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        assert_eq!(apply_rule_filters(&doc(&text), &cfg).rule_hits, vec![RuleHit::TooLong]);
    }

    #[test]
    fn clean_fifty_tokens_kept() {
        let text = (0..10)
            .map(|i| format!("sentence {i} has unique words."))
            .collect::<Vec<_>>()
            .join(" ");
        assert_eq!(crate::tokenize::count_tokens(&text), 50);
        let v = apply_rule_filters(&doc(&text), &FilterConfig::default());
        assert_eq!(v.decision, Decision::Keep);
        assert!(v.rule_hits.is_empty());
    }

    #[test]
    fn lists_all_hits() {
        let v = apply_rule_filters(&doc("<b>x. x. x."), &FilterConfig::default());
        assert_eq!(v.rule_hits, vec![RuleHit::Html, RuleHit::Repetition, RuleHit::TooShort]);
        assert_eq!(v.reason, "rule: html,repetition,too_short");
    }

    proptest! {
        #[test]
        fn ratio_in_unit_interval(s in "\\PC{0,80}") {
            let r = repetition_ratio(&s);
            prop_assert!((0.0..=1.0).contains(&r));
        }

        #[test]
        fn doubled_text_at_least_half(sents in proptest::collection::vec("[a-z ]{1,10}", 1..6)) {
            let text = sents.iter().map(|s| format!("{s}.")).collect::<Vec<_>>().join(" ");
            prop_assume!(!sentences(&text).is_empty());
            let doubled = format!("{text} {text}");
            prop_assert!(repetition_ratio(&doubled) >= 0.5);
        }
    }
}
