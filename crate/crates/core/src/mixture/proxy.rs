use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::MixtureError;
use crate::filter::{events, NgramCounts};

/// Maps a candidate mixture to a proxy loss (lower is better).
pub trait ProxyEvaluator: Sync {
    fn evaluate(&self, weights: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> ProxyEvaluator for F {
    fn evaluate(&self, weights: &[f64]) -> f64 {
        self(weights)
    }
}

/// Held-out event of one domain, with each training domain's normalized counts.
struct HeldOutEvent {
    /// Occurrences of this (context, char) in the held-out split.
    count: f64,
    /// Per training domain: transition count / domain event total.
    joint: Vec<f64>,
    /// Per training domain: context count / domain event total.
    context: Vec<f64>,
}

/// Character n-gram proxy: a candidate mixture blends each domain's training
/// counts in proportion to its weight, and the loss is the mean over domains
/// of held-out cross-entropy (nats per character) under the blended model.
pub struct NgramProxy {
    k: usize,
    smoothing_k: f64,
    vocab_size: f64,
    /// Scale of the blended table, in events.
    scale: f64,
    held_out: Vec<(f64, Vec<HeldOutEvent>)>,
}

impl NgramProxy {
    /// `domains[d]` holds the texts of domain `d`. Every `stride`-th text
    /// (1-based) is held out; each domain needs at least one text on each side.
    pub fn new(domains: &[Vec<String>], order: usize, smoothing_k: f64, stride: usize) -> Result<Self, MixtureError> {
        if domains.is_empty() {
            return Err(MixtureError::NoDomains);
        }
        if order == 0 || smoothing_k.is_nan() || smoothing_k <= 0.0 || stride < 2 {
            return Err(MixtureError::Proxy(format!(
                "need order >= 1, smoothing > 0 and stride >= 2 (got {order}, {smoothing_k}, {stride})"
            )));
        }
        let mut train = Vec::new();
        let mut held = Vec::new();
        for (d, texts) in domains.iter().enumerate() {
            type Indexed<'a> = Vec<(usize, &'a String)>;
            let (h, t): (Indexed, Indexed) =
                texts.iter().enumerate().partition(|(i, _)| i % stride == stride - 1);
            if h.is_empty() || t.is_empty() {
                return Err(MixtureError::Proxy(format!(
                    "domain {d} has {} texts; need at least {stride} to split off a held-out part",
                    texts.len()
                )));
            }
            train.push(NgramCounts::from_texts(order, t.iter().map(|(_, s)| s.as_str())));
            held.push(h.into_iter().map(|(_, s)| s.as_str()).collect::<Vec<_>>());
        }
        if train.iter().any(|c| c.total == 0.0) {
            return Err(MixtureError::Proxy("a domain has no training characters".into()));
        }

        let vocab: HashSet<char> = train.iter().flat_map(|c| c.vocab.iter().copied()).collect();
        let scale = train.iter().map(|c| c.total).sum::<f64>() / train.len() as f64;

        let held_out = held
            .iter()
            .map(|texts| {
                let mut tally: HashMap<(String, char), f64> = HashMap::new();
                for t in texts {
                    for e in events(t, order) {
                        *tally.entry(e).or_default() += 1.0;
                    }
                }
                let total: f64 = tally.values().sum();
                let mut evs: Vec<((String, char), f64)> = tally.into_iter().collect();
                evs.sort_by(|a, b| a.0.cmp(&b.0));
                let evs = evs
                    .into_iter()
                    .map(|(key, count)| HeldOutEvent {
                        count,
                        joint: train.iter().map(|c| c.transitions.get(&key).copied().unwrap_or(0.0) / c.total).collect(),
                        context: train
                            .iter()
                            .map(|c| c.context_totals.get(&key.0).copied().unwrap_or(0.0) / c.total)
                            .collect(),
                    })
                    .collect();
                (total, evs)
            })
            .collect();

        Ok(NgramProxy { k: domains.len(), smoothing_k, vocab_size: (vocab.len() + 1) as f64, scale, held_out })
    }

    pub fn domains(&self) -> usize {
        self.k
    }
}

impl ProxyEvaluator for NgramProxy {
    fn evaluate(&self, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.k);
        let dot = |v: &[f64]| v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() * self.scale;
        let kv = self.smoothing_k * self.vocab_size;
        let per_domain: Vec<f64> = self
            .held_out
            .par_iter()
            .map(|(total, evs)| {
                let nll: f64 = evs
                    .iter()
                    .map(|e| -e.count * ((dot(&e.joint) + self.smoothing_k) / (dot(&e.context) + kv)).ln())
                    .sum();
                nll / total
            })
            .collect();
        per_domain.iter().sum::<f64>() / per_domain.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(seed: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{seed} {seed} number {i}")).collect()
    }

    #[test]
    fn balanced_beats_one_sided() {
        let proxy = NgramProxy::new(&[corpus("aaaa bbb", 10), corpus("xyz xyzzy", 10)], 2, 1.0, 5).unwrap();
        let both = proxy.evaluate(&[0.5, 0.5]);
        assert!(both < proxy.evaluate(&[1.0, 0.0]));
        assert!(both < proxy.evaluate(&[0.0, 1.0]));
        assert!(both.is_finite() && both > 0.0);
    }

    #[test]
    fn deterministic() {
        let proxy = NgramProxy::new(&[corpus("one two", 6), corpus("three", 6)], 3, 0.5, 3).unwrap();
        assert_eq!(proxy.evaluate(&[0.3, 0.7]).to_bits(), proxy.evaluate(&[0.3, 0.7]).to_bits());
    }

    #[test]
    fn rejects_tiny_domains() {
        assert!(NgramProxy::new(&[corpus("a", 1)], 2, 1.0, 5).is_err());
        assert!(NgramProxy::new(&[], 2, 1.0, 5).is_err());
    }

    #[test]
    fn closures_are_evaluators() {
        let f = |w: &[f64]| w[0] * 2.0;
        assert_eq!(ProxyEvaluator::evaluate(&f, &[0.25]), 0.5);
    }
}
