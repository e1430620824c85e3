//! Function integration: grouping documents with overlapping functionality
//! and merging each group into one interface.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::PipelineError;
use crate::model::{ParameterSpec, ToolDocument};

pub const DESCRIPTION_JACCARD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeGroup {
    /// Ascending, zero-based document indices.
    pub ids: Vec<usize>,
    pub merged: ToolDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MergePlan {
    pub groups: Vec<MergeGroup>,
    pub untouched: Vec<usize>,
}

impl MergePlan {
    /// Checks that groups and untouched indices partition `0..n`.
    pub fn check(&self, n: usize) -> Result<(), String> {
        let mut seen = vec![false; n];
        let all = self
            .groups
            .iter()
            .flat_map(|g| g.ids.iter())
            .chain(self.untouched.iter());
        for &i in all {
            match seen.get_mut(i) {
                None => return Err(format!("index {i} out of range for {n} documents")),
                Some(true) => return Err(format!("index {i} listed twice")),
                Some(slot) => *slot = true,
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(format!("index {i} missing from plan"));
        }
        for g in &self.groups {
            if g.ids.is_empty() || g.ids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("group {:?} is not ascending and non-empty", g.ids));
            }
        }
        Ok(())
    }
}

fn name_tokens(name: &str) -> BTreeSet<String> {
    name.split('_').filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

fn description_tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn overlaps(a: &ToolDocument, b: &ToolDocument) -> bool {
    if name_tokens(&a.name) == name_tokens(&b.name) {
        return true;
    }
    let shared = a.parameters.iter().any(|p| b.parameter(&p.name).is_some());
    shared && jaccard(&description_tokens(&a.description), &description_tokens(&b.description)) >= DESCRIPTION_JACCARD
}

fn compatible(group: &[usize], other: &[usize], docs: &[ToolDocument]) -> bool {
    group.iter().all(|&i| {
        other.iter().all(|&j| {
            docs[i].parameters.iter().all(|p| match docs[j].parameter(&p.name) {
                Some(q) => q.value_type == p.value_type,
                None => true,
            })
        })
    })
}

fn merge_group(ids: &[usize], docs: &[ToolDocument]) -> ToolDocument {
    let first = &docs[ids[0]];
    let mut merged = ToolDocument::new(first.name.clone(), first.description.clone());
    for &i in ids {
        for p in &docs[i].parameters {
            if merged.parameter(&p.name).is_some() {
                continue;
            }
            let holders: Vec<&ParameterSpec> = ids.iter().filter_map(|&j| docs[j].parameter(&p.name)).collect();
            let mut spec = p.clone();
            spec.required = holders.len() == ids.len() && holders.iter().all(|h| h.required);
            spec.enum_values = if holders.iter().all(|h| h.enum_values.is_some()) {
                let mut union: Vec<Value> = Vec::new();
                for v in holders.iter().flat_map(|h| h.enum_values.iter().flatten()) {
                    if !union.contains(v) {
                        union.push(v.clone());
                    }
                }
                Some(union)
            } else {
                None
            };
            if spec.description.is_empty() {
                if let Some(h) = holders.iter().find(|h| !h.description.is_empty()) {
                    spec.description = h.description.clone();
                }
            }
            merged.parameters.push(spec);
        }
    }
    merged
}

/// Deterministic merge planning. Two documents overlap when their name
/// token sets are equal, or when their descriptions have token Jaccard at
/// least [`DESCRIPTION_JACCARD`] and they share a parameter name. Groups
/// only join when every shared parameter has the same type.
pub fn integrate_functions(docs: &[ToolDocument]) -> MergePlan {
    let mut groups: Vec<Vec<usize>> = (0..docs.len()).map(|i| vec![i]).collect();
    let mut owner: Vec<usize> = (0..docs.len()).collect();
    for i in 0..docs.len() {
        for j in i + 1..docs.len() {
            let (gi, gj) = (owner[i], owner[j]);
            if gi == gj || !overlaps(&docs[i], &docs[j]) || !compatible(&groups[gi], &groups[gj], docs) {
                continue;
            }
            let moved = std::mem::take(&mut groups[gj]);
            for &m in &moved {
                owner[m] = gi;
            }
            groups[gi].extend(moved);
            groups[gi].sort_unstable();
        }
    }
    let mut plan = MergePlan::default();
    for ids in groups.into_iter().filter(|g| !g.is_empty()) {
        if ids.len() == 1 {
            plan.untouched.push(ids[0]);
        } else {
            let merged = merge_group(&ids, docs);
            plan.groups.push(MergeGroup { ids, merged });
        }
    }
    plan.groups.sort_by_key(|g| g.ids[0]);
    plan
}

/// The merged toolset plus, for each input document, the index of the
/// output document that now serves it.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeResult {
    pub documents: Vec<ToolDocument>,
    pub assignment: Vec<usize>,
}

/// Applies `plan`. Output documents are ordered by the lowest input index
/// they cover.
pub fn apply_merge_plan(docs: &[ToolDocument], plan: &MergePlan) -> Result<MergeResult, PipelineError> {
    plan.check(docs.len()).map_err(|message| PipelineError::BackendFailure {
        message: format!("invalid merge plan: {message}"),
        raw: serde_json::to_string(plan).unwrap_or_default(),
    })?;
    let mut slots: Vec<(usize, &[usize], ToolDocument)> = plan
        .groups
        .iter()
        .map(|g| (g.ids[0], g.ids.as_slice(), g.merged.clone()))
        .collect();
    for i in &plan.untouched {
        slots.push((*i, std::slice::from_ref(i), docs[*i].clone()));
    }
    slots.sort_by_key(|s| s.0);
    let mut assignment = vec![0; docs.len()];
    let mut documents = Vec::with_capacity(slots.len());
    for (slot, (_, ids, doc)) in slots.into_iter().enumerate() {
        for &i in ids {
            assignment[i] = slot;
        }
        documents.push(doc);
    }
    Ok(MergeResult { documents, assignment })
}
