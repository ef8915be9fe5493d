//! Two-stage corpus filtering: local-defect rules, then a global quality cut
//! sized to hit a token retention target.

mod rules;
mod scorer;

pub use rules::{
    apply_rule_filters, has_html_tag, repetition_ratio, sentences, Decision, FilterVerdict, RuleHit,
};
pub use scorer::{events, train_quality_scorer, DocScorer, Event, NgramCounts, QualityScorer};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Document;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("seed corpus is empty")]
    EmptySeedCorpus,
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("smoothing constant must be positive and finite, got {0}")]
    InvalidSmoothing(f64),
    #[error("cannot score empty text")]
    EmptyText,
    #[error("invalid filter config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub repetition_threshold: f64,
    /// Fraction of input tokens to keep after the quality cut.
    pub retention_target: f64,
    pub scorer_order: usize,
    pub smoothing_k: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_tokens: 10,
            max_tokens: 65536,
            repetition_threshold: 0.3,
            retention_target: 0.20,
            scorer_order: 2,
            smoothing_k: 1.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        if self.min_tokens == 0 || self.max_tokens == 0 || self.min_tokens > self.max_tokens {
            return Err(FilterError::Config(format!(
                "token bounds must satisfy 1 <= min_tokens <= max_tokens (got {}..{})",
                self.min_tokens, self.max_tokens
            )));
        }
        if !(self.repetition_threshold > 0.0 && self.repetition_threshold <= 1.0) {
            return Err(FilterError::Config(format!(
                "repetition_threshold must be in (0, 1], got {}",
                self.repetition_threshold
            )));
        }
        if !(self.retention_target > 0.0 && self.retention_target <= 1.0) {
            return Err(FilterError::Config(format!(
                "retention_target must be in (0, 1], got {}",
                self.retention_target
            )));
        }
        if self.scorer_order == 0 {
            return Err(FilterError::InvalidOrder);
        }
        if !(self.smoothing_k > 0.0 && self.smoothing_k.is_finite()) {
            return Err(FilterError::InvalidSmoothing(self.smoothing_k));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleHitCounts {
    pub html: usize,
    pub repetition: usize,
    pub too_short: usize,
    pub too_long: usize,
}

impl RuleHitCounts {
    fn add(&mut self, hit: RuleHit) {
        match hit {
            RuleHit::Html => self.html += 1,
            RuleHit::Repetition => self.repetition += 1,
            RuleHit::TooShort => self.too_short += 1,
            RuleHit::TooLong => self.too_long += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_docs: usize,
    pub input_tokens: usize,
    pub kept_docs: usize,
    pub kept_tokens: usize,
    pub retention: f64,
    pub rule_hits: RuleHitCounts,
}

#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub kept: Vec<Document>,
    pub rejected: Vec<Document>,
    /// One verdict per input document, in input order.
    pub verdicts: Vec<FilterVerdict>,
    pub report: FilterReport,
}

/// Index into `cumulative` (prefix token sums, starting at 0) whose value is
/// closest to `target`; later indices win ties.
fn closest_prefix(cumulative: &[usize], target: f64) -> usize {
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (i, &c) in cumulative.iter().enumerate() {
        let gap = (c as f64 - target).abs();
        if gap <= best_gap {
            best = i;
            best_gap = gap;
        }
    }
    best
}

/// Filters `corpus`. Rule rejects come first; the survivors are ranked by
/// quality score and the best-scoring prefix whose token total is nearest to
/// `retention_target * input_tokens` is kept. Output order follows input order.
pub fn run_filter(
    corpus: &[Document],
    cfg: &FilterConfig,
    scorer: &dyn DocScorer,
) -> Result<FilterOutput, FilterError> {
    cfg.validate()?;
    let mut verdicts: Vec<FilterVerdict> = corpus.par_iter().map(|d| apply_rule_filters(d, cfg)).collect();
    let tokens: Vec<usize> = corpus.par_iter().map(Document::token_count).collect();
    let input_tokens: usize = tokens.iter().sum();

    let survivors: Vec<usize> =
        (0..corpus.len()).filter(|&i| verdicts[i].decision == Decision::Keep).collect();
    let scores: Vec<f64> = survivors
        .par_iter()
        .map(|&i| scorer.score(&corpus[i].text))
        .collect::<Result<_, _>>()?;

    let mut ranked: Vec<(usize, f64)> = survivors.iter().copied().zip(scores.iter().copied()).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut cumulative = Vec::with_capacity(ranked.len() + 1);
    cumulative.push(0usize);
    for &(i, _) in &ranked {
        cumulative.push(cumulative.last().unwrap() + tokens[i]);
    }
    let cut = closest_prefix(&cumulative, cfg.retention_target * input_tokens as f64);
    let cutoff = if cut > 0 { Some(ranked[cut - 1].1) } else { None };

    for (rank, &(i, score)) in ranked.iter().enumerate() {
        let v = &mut verdicts[i];
        v.quality_score = Some(score);
        if rank >= cut {
            v.decision = Decision::Reject;
            v.reason = match cutoff {
                Some(c) => format!("quality: score {score:.6} outside retention cut (last kept {c:.6})"),
                None => format!("quality: score {score:.6} outside retention cut (nothing kept)"),
            };
        } else {
            v.reason = format!("kept: quality score {score:.6}");
        }
    }

    let mut rule_hits = RuleHitCounts::default();
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    let mut kept_tokens = 0;
    for ((doc, v), &t) in corpus.iter().zip(&verdicts).zip(&tokens) {
        for &h in &v.rule_hits {
            rule_hits.add(h);
        }
        match v.decision {
            Decision::Keep => {
                kept_tokens += t;
                kept.push(doc.clone());
            }
            Decision::Reject => rejected.push(doc.clone()),
        }
    }
    let retention = if input_tokens == 0 { 0.0 } else { kept_tokens as f64 / input_tokens as f64 };
    let report = FilterReport {
        input_docs: corpus.len(),
        input_tokens,
        kept_docs: kept.len(),
        kept_tokens,
        retention,
        rule_hits,
    };
    Ok(FilterOutput { kept, rejected, verdicts, report })
}
