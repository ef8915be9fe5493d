//! Interaction grouping, segmentation and first-fit-decreasing packing of
//! continued-pretraining text into fixed token budgets.

mod group;
mod segment;

pub use group::{group_by_interaction, InteractionGroup};
pub use segment::{segment_text, Segment};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Document;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PackError {
    #[error("threshold must be at least 1")]
    ZeroThreshold,
    #[error("segment of {doc_id} has {tokens} tokens, over the threshold of {threshold}")]
    Oversized { doc_id: String, tokens: usize, threshold: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PackConfig {
    pub threshold: usize,
}

impl Default for PackConfig {
    fn default() -> Self {
        PackConfig { threshold: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackedSequence {
    pub segments: Vec<SegmentRef>,
    pub token_count: usize,
}

/// Splits a document's text into segments of at most `threshold` tokens.
pub fn segment_document(doc: &Document, threshold: usize) -> Result<Vec<Segment>, PackError> {
    if threshold == 0 {
        return Err(PackError::ZeroThreshold);
    }
    Ok(segment_text(&doc.id, &doc.text, threshold))
}

/// First-fit-decreasing bin packing. Segments are placed largest first (ties
/// keep input order) into the earliest sequence with room, so each sequence
/// lists its segments in descending size.
pub fn pack_segments(segments: &[Segment], threshold: usize) -> Result<Vec<PackedSequence>, PackError> {
    if threshold == 0 {
        return Err(PackError::ZeroThreshold);
    }
    if let Some(s) = segments.iter().find(|s| s.token_count > threshold) {
        return Err(PackError::Oversized { doc_id: s.doc_id.clone(), tokens: s.token_count, threshold });
    }
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by(|&a, &b| segments[b].token_count.cmp(&segments[a].token_count).then(a.cmp(&b)));

    let mut bins: Vec<PackedSequence> = Vec::new();
    for i in order {
        let s = &segments[i];
        let slot = bins.iter().position(|b| b.token_count + s.token_count <= threshold);
        let bin = match slot {
            Some(j) => &mut bins[j],
            None => {
                bins.push(PackedSequence { segments: Vec::new(), token_count: 0 });
                bins.last_mut().unwrap()
            }
        };
        bin.segments.push(SegmentRef { doc_id: s.doc_id.clone(), start: s.start, end: s.end });
        bin.token_count += s.token_count;
    }
    Ok(bins)
}

/// Summary of one packing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackReport {
    pub threshold: usize,
    pub input_docs: usize,
    pub groups: usize,
    pub orphans: usize,
    pub segments: usize,
    pub sequences: usize,
    pub total_tokens: usize,
    /// Mean fraction of the token budget used per sequence.
    pub fill_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct PackOutput {
    /// Packing units: one per interaction group plus one per orphan. A group
    /// unit carries the context id and the combined text.
    pub units: Vec<Document>,
    pub sequences: Vec<PackedSequence>,
    pub report: PackReport,
}

/// Groups interactions, segments every unit and packs the segments.
pub fn pack_corpus(docs: &[Document], threshold: usize) -> Result<PackOutput, PackError> {
    if threshold == 0 {
        return Err(PackError::ZeroThreshold);
    }
    let (groups, orphans) = group_by_interaction(docs);
    let by_id: std::collections::HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut units: Vec<Document> = groups
        .iter()
        .map(|g| {
            let ctx = by_id[g.context_id.as_str()];
            Document { text: g.combined_text.clone(), ..ctx.clone() }
        })
        .collect();
    units.extend(orphans.iter().cloned());

    let segments: Vec<Segment> = {
        use rayon::prelude::*;
        units.par_iter().flat_map_iter(|u| segment_text(&u.id, &u.text, threshold)).collect()
    };
    let sequences = pack_segments(&segments, threshold)?;
    let total_tokens: usize = sequences.iter().map(|s| s.token_count).sum();
    let fill_ratio = if sequences.is_empty() {
        0.0
    } else {
        total_tokens as f64 / (sequences.len() * threshold) as f64
    };
    let report = PackReport {
        threshold,
        input_docs: docs.len(),
        groups: groups.len(),
        orphans: orphans.len(),
        segments: segments.len(),
        sequences: sequences.len(),
        total_tokens,
        fill_ratio,
    };
    Ok(PackOutput { units, sequences, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(id: &str, tokens: usize) -> Segment {
        Segment { doc_id: id.into(), start: 0, end: tokens, token_count: tokens }
    }

    fn sizes(seqs: &[PackedSequence]) -> Vec<Vec<usize>> {
        seqs.iter().map(|s| s.segments.iter().map(|r| r.end).collect()).collect()
    }

    #[test]
    fn ffd_hand_run() {
        let seqs = pack_segments(&[seg("a", 3000), seg("b", 1500), seg("c", 600)], 4096).unwrap();
        assert_eq!(sizes(&seqs), vec![vec![3000, 600], vec![1500]]);
        assert_eq!(seqs[0].token_count, 3600);
    }

    #[test]
    fn exact_fits() {
        let seqs = pack_segments(&[seg("a", 4096), seg("b", 4096)], 4096).unwrap();
        assert_eq!(seqs.len(), 2);
        assert!(seqs.iter().all(|s| s.token_count == 4096));
    }

    #[test]
    fn empty() {
        assert!(pack_segments(&[], 4096).unwrap().is_empty());
    }

    #[test]
    fn oversized_is_contract_violation() {
        let err = pack_segments(&[seg("a", 5000)], 4096).unwrap_err();
        assert_eq!(err, PackError::Oversized { doc_id: "a".into(), tokens: 5000, threshold: 4096 });
    }

    #[test]
    fn unsorted_input_sorted_within_bins() {
        let seqs = pack_segments(&[seg("a", 100), seg("b", 700), seg("c", 300), seg("d", 700)], 1000).unwrap();
        assert_eq!(sizes(&seqs), vec![vec![700, 300], vec![700, 100]]);
        assert_eq!(seqs[0].segments[0].doc_id, "b");
        assert_eq!(seqs[1].segments[0].doc_id, "d");
    }

    #[test]
    fn corpus_packing_groups_first() {
        use crate::model::{InteractionMeta, Source};
        let mk = |id: &str, parent: Option<&str>, text: &str| Document {
            id: id.into(),
            source: Source::Sns,
            domain: "notes".into(),
            text: text.into(),
            interactions: Some(InteractionMeta { parent_id: parent.map(Into::into), likes: 1 }),
        };
        let docs = vec![mk("n1", None, "a b c."), mk("c1", Some("n1"), "d e."), mk("c2", Some("gone"), "f.")];
        let out = pack_corpus(&docs, 4).unwrap();
        assert_eq!(out.report.groups, 1);
        assert_eq!(out.report.orphans, 1);
        assert_eq!(out.units[0].text, "a b c.\nd e.");
        assert_eq!(out.report.total_tokens, 6);
        assert!(out.sequences.iter().all(|s| s.token_count <= 4));
    }
}
