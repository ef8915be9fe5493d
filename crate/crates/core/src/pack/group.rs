use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::Document;

/// A context document followed by the comments that reply to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionGroup {
    pub context_id: String,
    /// Context first, then comments by likes descending, ties by id ascending.
    pub members: Vec<String>,
    pub combined_text: String,
}

/// Joins each comment to the root context it (transitively) replies to.
///
/// Comments whose parent chain reaches an id that is not in `docs`, or that
/// loops back on itself, go to the orphan bucket. Groups are emitted in the
/// input order of their context document.
pub fn group_by_interaction(docs: &[Document]) -> (Vec<InteractionGroup>, Vec<Document>) {
    let index: HashMap<&str, usize> = docs.iter().enumerate().map(|(i, d)| (d.id.as_str(), i)).collect();

    // root[i]: Some(root index) or None for orphans
    let root: Vec<Option<usize>> = (0..docs.len())
        .map(|i| {
            let mut cur = i;
            let mut steps = 0;
            while let Some(pid) = docs[cur].parent_id() {
                cur = *index.get(pid)?;
                steps += 1;
                if steps > docs.len() {
                    return None;
                }
            }
            Some(cur)
        })
        .collect();

    let mut comments: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut orphans = Vec::new();
    for (i, r) in root.iter().enumerate() {
        match *r {
            None => orphans.push(docs[i].clone()),
            Some(r) if r != i => comments.entry(r).or_default().push(i),
            Some(_) => {}
        }
    }

    let groups = (0..docs.len())
        .filter(|&i| root[i] == Some(i))
        .map(|ctx| {
            let mut members = comments.remove(&ctx).unwrap_or_default();
            members.sort_by(|&a, &b| docs[b].likes().cmp(&docs[a].likes()).then_with(|| docs[a].id.cmp(&docs[b].id)));
            members.insert(0, ctx);
            InteractionGroup {
                context_id: docs[ctx].id.clone(),
                combined_text: members.iter().map(|&m| docs[m].text.as_str()).collect::<Vec<_>>().join("\n"),
                members: members.into_iter().map(|m| docs[m].id.clone()).collect(),
            }
        })
        .collect();
    (groups, orphans)
}
