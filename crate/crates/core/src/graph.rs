//! Sub-question dependency DAG: scenario classification and frontier
//! computation.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{ScenarioKind, SubQuestion};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("CLASSIFY_INVALID: {0}")]
    ClassifyInvalid(String),
}

/// Nodes are sub-question ids; an edge `(from, to)` means `to` depends on
/// `from`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
}

impl DependencyGraph {
    pub fn new<N, E>(nodes: N, edges: E) -> Self
    where
        N: IntoIterator,
        N::Item: Into<String>,
        E: IntoIterator<Item = (N::Item, N::Item)>,
    {
        DependencyGraph {
            nodes: nodes.into_iter().map(Into::into).collect(),
            edges: edges
                .into_iter()
                .map(|(a, b)| (a.into(), b.into()))
                .collect(),
        }
    }

    pub fn from_sub_questions(sub_questions: &[SubQuestion]) -> Self {
        let nodes = sub_questions.iter().map(|q| q.id.clone()).collect();
        let edges = sub_questions
            .iter()
            .flat_map(|q| q.depends_on.iter().map(move |d| (d.clone(), q.id.clone())))
            .collect();
        DependencyGraph { nodes, edges }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    fn dependencies(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut deps: BTreeMap<&str, Vec<&str>> =
            self.nodes.iter().map(|n| (n.as_str(), Vec::new())).collect();
        for (from, to) in &self.edges {
            deps.entry(to.as_str()).or_default().push(from.as_str());
        }
        deps
    }

    /// Structural problems other than cycles: unknown endpoints, duplicate
    /// nodes or edges, self loops.
    fn structural_error(&self) -> Option<String> {
        let node_set: BTreeSet<&str> = self.nodes.iter().map(String::as_str).collect();
        if node_set.len() != self.nodes.len() {
            return Some("duplicate node".into());
        }
        let mut seen = BTreeSet::new();
        for (a, b) in &self.edges {
            if !node_set.contains(a.as_str()) || !node_set.contains(b.as_str()) {
                return Some(format!("edge ({a}, {b}) has an undeclared endpoint"));
            }
            if a == b {
                return Some(format!("self loop on {a}"));
            }
            if !seen.insert((a, b)) {
                return Some(format!("duplicate edge ({a}, {b})"));
            }
        }
        None
    }

    /// Kahn order over declared nodes; `None` when a cycle exists.
    pub fn topological_order(&self) -> Option<Vec<String>> {
        let mut solved = BTreeSet::new();
        let mut order = Vec::with_capacity(self.nodes.len());
        loop {
            let frontier = self.solvable_frontier(&solved);
            if frontier.is_empty() {
                break;
            }
            for n in frontier {
                solved.insert(n.clone());
                order.push(n);
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Single-hop: one node. Parallel single-hop: no edges. Multi-hop: the
    /// edges form one directed path through every node. Anything else is
    /// parallel multi-hop.
    pub fn classify(&self) -> Result<ScenarioKind, GraphError> {
        if self.nodes.is_empty() {
            return Err(GraphError::ClassifyInvalid("empty graph".into()));
        }
        if let Some(why) = self.structural_error() {
            return Err(GraphError::ClassifyInvalid(why));
        }
        if !self.is_acyclic() {
            return Err(GraphError::ClassifyInvalid("graph has a cycle".into()));
        }
        let n = self.nodes.len();
        Ok(if n == 1 {
            ScenarioKind::SingleHop
        } else if self.edges.is_empty() {
            ScenarioKind::ParallelSingleHop
        } else if self.is_chain() {
            ScenarioKind::MultiHop
        } else {
            ScenarioKind::ParallelMultiHop
        })
    }

    fn is_chain(&self) -> bool {
        let n = self.nodes.len();
        if self.edges.len() != n - 1 {
            return false;
        }
        let mut indeg: BTreeMap<&str, usize> = BTreeMap::new();
        let mut next: BTreeMap<&str, &str> = BTreeMap::new();
        for (a, b) in &self.edges {
            *indeg.entry(b.as_str()).or_default() += 1;
            if next.insert(a.as_str(), b.as_str()).is_some() {
                return false;
            }
        }
        if indeg.values().any(|&d| d > 1) {
            return false;
        }
        let roots: Vec<&str> = self
            .nodes
            .iter()
            .map(String::as_str)
            .filter(|n| !indeg.contains_key(n))
            .collect();
        let [mut cur] = roots[..] else {
            return false;
        };
        let mut visited = 1;
        while let Some(&nxt) = next.get(cur) {
            cur = nxt;
            visited += 1;
        }
        visited == n
    }

    /// Unsolved nodes whose dependencies are all in `solved`, in declaration
    /// order.
    pub fn solvable_frontier(&self, solved: &BTreeSet<String>) -> Vec<String> {
        let deps = self.dependencies();
        self.nodes
            .iter()
            .filter(|n| !solved.contains(*n))
            .filter(|n| deps[n.as_str()].iter().all(|d| solved.contains(*d)))
            .cloned()
            .collect()
    }
}
