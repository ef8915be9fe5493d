use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SftError;
use crate::model::{CategoryLabels, Capability};
use crate::numeric::nearest_rank;

pub const GENERAL_BUCKET: &str = "general";
pub const UNLABELED_BUCKET: &str = "unlabeled";

/// One sample as seen by the statistics pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsItem {
    pub tokens: usize,
    pub task: Option<String>,
    pub capability: Option<Capability>,
    pub labels: Option<CategoryLabels>,
}

/// Power-of-two length bucket `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_samples: usize,
    pub median_tokens: usize,
    pub p95_tokens: usize,
    pub max_tokens: usize,
    pub max_len: usize,
    /// Samples longer than `max_len`.
    pub clipped: usize,
    pub per_capability: BTreeMap<String, usize>,
    pub per_task: BTreeMap<String, usize>,
    pub primary_labels: BTreeMap<String, usize>,
    pub secondary_labels: BTreeMap<String, usize>,
    pub histogram: Vec<HistogramBin>,
}

fn bucket(len: usize) -> usize {
    if len == 0 {
        0
    } else {
        usize::BITS as usize - len.leading_zeros() as usize
    }
}

fn bucket_bounds(b: usize) -> (usize, usize) {
    if b == 0 {
        (0, 1)
    } else {
        (1 << (b - 1), 1 << b)
    }
}

/// Length distribution and category counts. Percentiles are nearest-rank.
pub fn corpus_stats(items: &[StatsItem], max_len: usize) -> Result<CorpusStats, SftError> {
    if items.is_empty() {
        return Err(SftError::EmptyStats);
    }
    let mut lengths: Vec<usize> = items.par_iter().map(|i| i.tokens).collect();
    lengths.par_sort_unstable();

    let mut per_capability = BTreeMap::new();
    let mut per_task = BTreeMap::new();
    let mut primary_labels = BTreeMap::new();
    let mut secondary_labels = BTreeMap::new();
    let mut bins: BTreeMap<usize, usize> = BTreeMap::new();
    for it in items {
        let cap = it.capability.map_or(GENERAL_BUCKET, Capability::as_str);
        *per_capability.entry(cap.to_string()).or_insert(0) += 1;
        *per_task.entry(it.task.clone().unwrap_or_else(|| GENERAL_BUCKET.to_string())).or_insert(0) += 1;
        let (p, s) = match &it.labels {
            Some(l) => (l.primary.clone(), l.secondary.clone().unwrap_or_else(|| UNLABELED_BUCKET.to_string())),
            None => (UNLABELED_BUCKET.to_string(), UNLABELED_BUCKET.to_string()),
        };
        *primary_labels.entry(p).or_insert(0) += 1;
        *secondary_labels.entry(s).or_insert(0) += 1;
        *bins.entry(bucket(it.tokens)).or_insert(0) += 1;
    }
    let max_b = *bins.keys().last().unwrap();
    let histogram = (0..=max_b)
        .map(|b| {
            let (lo, hi) = bucket_bounds(b);
            HistogramBin { lo, hi, count: bins.get(&b).copied().unwrap_or(0) }
        })
        .collect();

    Ok(CorpusStats {
        n_samples: items.len(),
        median_tokens: nearest_rank(&lengths, 0.5).unwrap(),
        p95_tokens: nearest_rank(&lengths, 0.95).unwrap(),
        max_tokens: *lengths.last().unwrap(),
        max_len,
        clipped: lengths.iter().filter(|&&l| l > max_len).count(),
        per_capability,
        per_task,
        primary_labels,
        secondary_labels,
        histogram,
    })
}

/// Plain-text histogram with a log-scaled bar per bucket.
pub fn render_histogram(stats: &CorpusStats) -> String {
    let width = 40.0;
    let top = stats.histogram.iter().map(|b| b.count).max().unwrap_or(0).max(1) as f64;
    let mut out = String::new();
    for b in &stats.histogram {
        let bar = if b.count == 0 { 0 } else { (((b.count as f64).ln_1p() / top.ln_1p()) * width).ceil() as usize };
        out.push_str(&format!("{:>7}-{:<7} {:>8} {}\n", b.lo, b.hi - 1, b.count, "#".repeat(bar)));
    }
    out.push_str(&format!("median={} p95={} max={}\n", stats.median_tokens, stats.p95_tokens, stats.max_tokens));
    out
}
