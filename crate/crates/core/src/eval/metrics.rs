use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;

use super::EvalError;
use crate::tokenize::tokens;

pub const BLEU_MAX_ORDER: usize = 4;
/// Numerator used in place of a zero n-gram match count.
pub const BLEU_SMOOTHING_EPSILON: f64 = 0.1;
pub const CHRF_CHAR_ORDER: usize = 6;
pub const CHRF_WORD_ORDER: usize = 2;
pub const CHRF_BETA: f64 = 2.0;

/// Percentage of positions where prediction equals gold (after trimming).
pub fn mc_accuracy<S: AsRef<str>>(preds: &[S], golds: &[S]) -> Result<f64, EvalError> {
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch { preds: preds.len(), golds: golds.len() });
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = preds.iter().zip(golds).filter(|(p, g)| p.as_ref().trim() == g.as_ref().trim()).count();
    Ok(100.0 * hits as f64 / preds.len() as f64)
}

fn counts<T: Hash + Eq, I: IntoIterator<Item = T>>(items: I) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for it in items {
        *m.entry(it).or_insert(0) += 1;
    }
    m
}

fn overlap<T: Hash + Eq>(a: &HashMap<T, usize>, b: &HashMap<T, usize>) -> usize {
    a.iter().map(|(k, &n)| n.min(b.get(k).copied().unwrap_or(0))).sum()
}

/// Token-level F1 over multiset overlap, times 100.
pub fn span_f1(pred: &str, gold: &str) -> f64 {
    let p = tokens(pred);
    let g = tokens(gold);
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return 100.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let common = overlap(&counts(p.iter().copied()), &counts(g.iter().copied()));
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    100.0 * 2.0 * precision * recall / (precision + recall)
}

fn ngrams<'a, T: Clone + Hash + Eq>(seq: &'a [T], n: usize) -> impl Iterator<Item = &'a [T]> + 'a {
    seq.windows(n)
}

/// Corpus-level n-gram statistics for BLEU; merges by addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [usize; BLEU_MAX_ORDER],
    pub totals: [usize; BLEU_MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn sentence(hyp: &str, reference: &str) -> Self {
        let h = tokens(hyp);
        let r = tokens(reference);
        let mut s = BleuStats { hyp_len: h.len(), ref_len: r.len(), ..Default::default() };
        for n in 1..=BLEU_MAX_ORDER {
            let hc = counts(ngrams(&h, n));
            let rc = counts(ngrams(&r, n));
            s.matches[n - 1] = overlap(&hc, &rc);
            s.totals[n - 1] = hc.values().sum();
        }
        s
    }

    pub fn merge(mut self, other: BleuStats) -> Self {
        for i in 0..BLEU_MAX_ORDER {
            self.matches[i] += other.matches[i];
            self.totals[i] += other.totals[i];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
        self
    }

    /// Geometric mean of clipped precisions over orders that have at least
    /// one hypothesis n-gram, times the brevity penalty.
    pub fn score(&self) -> f64 {
        let logs: Vec<f64> = (0..BLEU_MAX_ORDER)
            .filter(|&i| self.totals[i] > 0)
            .map(|i| {
                let num = if self.matches[i] == 0 { BLEU_SMOOTHING_EPSILON } else { self.matches[i] as f64 };
                (num / self.totals[i] as f64).ln()
            })
            .collect();
        if logs.is_empty() {
            return if self.ref_len == 0 { 100.0 } else { 0.0 };
        }
        let bp = if self.hyp_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        };
        let geo = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
        (100.0 * bp * geo).clamp(0.0, 100.0)
    }
}

/// Corpus BLEU with orders 1-4 and a 0.1 numerator floor for zero matches.
pub fn bleu<S: AsRef<str> + Sync>(hyps: &[S], refs: &[S]) -> Result<f64, EvalError> {
    if hyps.len() != refs.len() {
        return Err(EvalError::LengthMismatch { preds: hyps.len(), golds: refs.len() });
    }
    if hyps.is_empty() {
        return Err(EvalError::Empty);
    }
    let stats = hyps
        .par_iter()
        .zip(refs.par_iter())
        .map(|(h, r)| BleuStats::sentence(h.as_ref(), r.as_ref()))
        .reduce(BleuStats::default, BleuStats::merge);
    Ok(stats.score())
}

/// F-beta for one n-gram order, `None` when neither side has n-grams.
fn order_f<T: Hash + Eq + Clone>(hyp: &[T], reference: &[T], n: usize, beta: f64) -> Option<f64> {
    let hc = counts(ngrams(hyp, n));
    let rc = counts(ngrams(reference, n));
    let th: usize = hc.values().sum();
    let tr: usize = rc.values().sum();
    if th == 0 && tr == 0 {
        return None;
    }
    if th == 0 || tr == 0 {
        return Some(0.0);
    }
    let m = overlap(&hc, &rc) as f64;
    let p = m / th as f64;
    let r = m / tr as f64;
    if p + r == 0.0 {
        return Some(0.0);
    }
    let b2 = beta * beta;
    Some((1.0 + b2) * p * r / (b2 * p + r))
}

/// chrF++: mean F-beta (beta 2) over character orders 1-6 (whitespace
/// removed) and word orders 1-2, skipping orders where both sides are
/// empty. Two empty strings score 100.
pub fn chrf_pp(hyp: &str, reference: &str) -> f64 {
    let hc: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let rc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let hw: Vec<&str> = hyp.split_whitespace().collect();
    let rw: Vec<&str> = reference.split_whitespace().collect();
    let fs: Vec<f64> = (1..=CHRF_CHAR_ORDER)
        .filter_map(|n| order_f(&hc, &rc, n, CHRF_BETA))
        .chain((1..=CHRF_WORD_ORDER).filter_map(|n| order_f(&hw, &rw, n, CHRF_BETA)))
        .collect();
    if fs.is_empty() {
        100.0
    } else {
        100.0 * fs.iter().sum::<f64>() / fs.len() as f64
    }
}

/// Mean sentence-level chrF++ over aligned pairs.
pub fn corpus_chrf_pp<S: AsRef<str> + Sync>(hyps: &[S], refs: &[S]) -> Result<f64, EvalError> {
    if hyps.len() != refs.len() {
        return Err(EvalError::LengthMismatch { preds: hyps.len(), golds: refs.len() });
    }
    if hyps.is_empty() {
        return Err(EvalError::Empty);
    }
    let scores: Vec<f64> = hyps.par_iter().zip(refs.par_iter()).map(|(h, r)| chrf_pp(h.as_ref(), r.as_ref())).collect();
    Ok(crate::numeric::neumaier_sum(scores) / hyps.len() as f64)
}

/// Mean span F1 over aligned pairs.
pub fn corpus_span_f1<S: AsRef<str> + Sync>(preds: &[S], golds: &[S]) -> Result<f64, EvalError> {
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch { preds: preds.len(), golds: golds.len() });
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let scores: Vec<f64> = preds.par_iter().zip(golds.par_iter()).map(|(p, g)| span_f1(p.as_ref(), g.as_ref())).collect();
    Ok(crate::numeric::neumaier_sum(scores) / preds.len() as f64)
}
