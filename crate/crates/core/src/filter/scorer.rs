//! Character n-gram language model used as the global quality scorer.

use std::collections::{HashMap, HashSet};

use super::FilterError;
use crate::model::Document;

/// Left padding for the first characters of a text.
const BOS: char = '\u{0}';

/// Scores a document; higher means more in-domain. Implementations must be
/// deterministic and thread-safe.
pub trait DocScorer: Sync {
    fn score(&self, text: &str) -> Result<f64, FilterError>;
}

/// Context of `order - 1` preceding characters plus the predicted character.
pub type Event = (String, char);

/// Yields every (context, next char) event of `text` for an n-gram model of `order`.
pub fn events(text: &str, order: usize) -> impl Iterator<Item = Event> + '_ {
    let width = order.saturating_sub(1);
    let mut history: Vec<char> = vec![BOS; width];
    text.chars().map(move |c| {
        let ctx: String = history.iter().collect();
        if width > 0 {
            history.remove(0);
            history.push(c);
        }
        (ctx, c)
    })
}

/// Real-valued n-gram count tables. Counts are `f64` so tables can be
/// reweighted and summed when blending domains.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NgramCounts {
    pub order: usize,
    pub context_totals: HashMap<String, f64>,
    pub transitions: HashMap<Event, f64>,
    pub vocab: HashSet<char>,
    /// Total number of events counted.
    pub total: f64,
}

impl NgramCounts {
    pub fn new(order: usize) -> Self {
        NgramCounts { order, ..Default::default() }
    }

    pub fn add_text(&mut self, text: &str) {
        for (ctx, c) in events(text, self.order) {
            *self.context_totals.entry(ctx.clone()).or_default() += 1.0;
            *self.transitions.entry((ctx, c)).or_default() += 1.0;
            self.vocab.insert(c);
            self.total += 1.0;
        }
    }

    pub fn from_texts<'a>(order: usize, texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts = NgramCounts::new(order);
        for t in texts {
            counts.add_text(t);
        }
        counts
    }

    /// Smoothed vocabulary size: seen characters plus one unknown bucket.
    pub fn vocab_size(&self) -> f64 {
        (self.vocab.len() + 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityScorer {
    pub order: usize,
    pub smoothing_k: f64,
    pub counts: NgramCounts,
}

impl QualityScorer {
    /// Natural-log probability of `c` after `ctx` under add-k smoothing.
    pub fn log_prob(&self, ctx: &str, c: char) -> f64 {
        let k = self.smoothing_k;
        let joint = self.counts.transitions.get(&(ctx.to_string(), c)).copied().unwrap_or(0.0);
        let total = self.counts.context_totals.get(ctx).copied().unwrap_or(0.0);
        ((joint + k) / (total + k * self.counts.vocab_size())).ln()
    }

    /// Mean negative log-likelihood per character, in nats.
    pub fn cross_entropy(&self, text: &str) -> Result<f64, FilterError> {
        if text.is_empty() {
            return Err(FilterError::EmptyText);
        }
        let mut sum = 0.0;
        let mut n = 0usize;
        for (ctx, c) in events(text, self.order) {
            sum -= self.log_prob(&ctx, c);
            n += 1;
        }
        Ok(sum / n as f64)
    }

    pub fn perplexity(&self, text: &str) -> Result<f64, FilterError> {
        Ok(self.cross_entropy(text)?.exp())
    }

    pub fn quality_score(&self, doc: &Document) -> Result<f64, FilterError> {
        self.score(&doc.text)
    }
}

impl DocScorer for QualityScorer {
    fn score(&self, text: &str) -> Result<f64, FilterError> {
        Ok(-self.cross_entropy(text)?)
    }
}

/// Fits a character n-gram model on `seed_corpus`.
pub fn train_quality_scorer(
    seed_corpus: &[Document],
    order: usize,
    smoothing_k: f64,
) -> Result<QualityScorer, FilterError> {
    if seed_corpus.is_empty() {
        return Err(FilterError::EmptySeedCorpus);
    }
    if order == 0 {
        return Err(FilterError::InvalidOrder);
    }
    if !(smoothing_k > 0.0 && smoothing_k.is_finite()) {
        return Err(FilterError::InvalidSmoothing(smoothing_k));
    }
    let counts = NgramCounts::from_texts(order, seed_corpus.iter().map(|d| d.text.as_str()));
    Ok(QualityScorer { order, smoothing_k, counts })
}
