//! Scope trees and scope DAGs.
//!
//! Non-terminal nodes are quantifiers with a restriction (left) and a body
//! (right); leaves are unary predicate applications or the tautology.
//! Sharing a node between parents is explicit: the same [`NodeId`] appears
//! as a child more than once, and a shared vague quantifier carries a single
//! threshold.
//!
//! Role structure (which pixie is the agent of which event) lives in the
//! joint distribution, not in the leaves. A node is therefore evaluated
//! conditionally on every variable bound above it, and its free variables
//! are its *scope context*: the variables bound by enclosing quantifiers,
//! plus any variable its leaves mention without binding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{SituationModel, VagueLexicon};
use crate::quant::QuantifierKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScopeNode {
    Tautology,
    Application { predicate: String, variable: String },
    Conjunction(Vec<NodeId>),
    Quantifier { kind: QuantifierKind, bound: Vec<String>, restriction: NodeId, body: NodeId },
}

impl ScopeNode {
    pub fn children(&self) -> Vec<NodeId> {
        match self {
            ScopeNode::Tautology | ScopeNode::Application { .. } => Vec::new(),
            ScopeNode::Conjunction(c) => c.clone(),
            ScopeNode::Quantifier { restriction, body, .. } => vec![*restriction, *body],
        }
    }
}

/// 1-based source position of a node, when it came from text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourcePos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub struct ScopeGraph {
    nodes: Vec<ScopeNode>,
    root: NodeId,
    aliases: BTreeMap<String, NodeId>,
    positions: Vec<Option<SourcePos>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {0} does not exist")]
    MissingNode(NodeId),
    #[error("cycle through node {0}")]
    CycleDetected(NodeId),
}

impl ScopeGraph {
    /// Builds a graph; child and alias references must exist. Cycles are
    /// allowed here and reported by [`validate`] and [`topological_order`].
    pub fn new(nodes: Vec<ScopeNode>, root: NodeId, aliases: BTreeMap<String, NodeId>) -> Result<Self, GraphError> {
        let n = nodes.len();
        let check = |id: NodeId| if id.0 < n { Ok(()) } else { Err(GraphError::MissingNode(id)) };
        check(root)?;
        for node in &nodes {
            for c in node.children() {
                check(c)?;
            }
        }
        for id in aliases.values() {
            check(*id)?;
        }
        Ok(Self { positions: vec![None; n], nodes, root, aliases })
    }

    pub(crate) fn with_positions(mut self, positions: Vec<Option<SourcePos>>) -> Self {
        debug_assert_eq!(positions.len(), self.nodes.len());
        self.positions = positions;
        self
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[ScopeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &ScopeNode {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn aliases(&self) -> &BTreeMap<String, NodeId> {
        &self.aliases
    }

    pub fn position(&self, id: NodeId) -> Option<SourcePos> {
        self.positions.get(id.0).copied().flatten()
    }

    /// Predicate names used by the graph's leaves.
    pub fn predicates(&self) -> BTreeSet<&str> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                ScopeNode::Application { predicate, .. } => Some(predicate.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Variables mentioned anywhere, bound or applied.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for n in &self.nodes {
            match n {
                ScopeNode::Application { variable, .. } => {
                    out.insert(variable.as_str());
                }
                ScopeNode::Quantifier { bound, .. } => out.extend(bound.iter().map(String::as_str)),
                _ => {}
            }
        }
        out
    }

    /// In-degree of every node, counting the root as referenced once.
    pub fn reference_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.nodes.len()];
        counts[self.root.0] += 1;
        for n in &self.nodes {
            for c in n.children() {
                counts[c.0] += 1;
            }
        }
        counts
    }

    /// Structural equality up to node numbering, preserving sharing.
    pub fn structurally_eq(&self, other: &ScopeGraph) -> bool {
        let mut fwd: BTreeMap<usize, usize> = BTreeMap::new();
        let mut back: BTreeMap<usize, usize> = BTreeMap::new();
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            match (fwd.get(&a.0), back.get(&b.0)) {
                (Some(&x), Some(&y)) if x == b.0 && y == a.0 => continue,
                (None, None) => {
                    fwd.insert(a.0, b.0);
                    back.insert(b.0, a.0);
                }
                _ => return false,
            }
            let pairs: Vec<(NodeId, NodeId)> = match (self.node(a), other.node(b)) {
                (ScopeNode::Tautology, ScopeNode::Tautology) => vec![],
                (
                    ScopeNode::Application { predicate: p1, variable: v1 },
                    ScopeNode::Application { predicate: p2, variable: v2 },
                ) if p1 == p2 && v1 == v2 => vec![],
                (ScopeNode::Conjunction(c1), ScopeNode::Conjunction(c2)) if c1.len() == c2.len() => {
                    c1.iter().copied().zip(c2.iter().copied()).collect()
                }
                (
                    ScopeNode::Quantifier { kind: k1, bound: b1, restriction: r1, body: y1 },
                    ScopeNode::Quantifier { kind: k2, bound: b2, restriction: r2, body: y2 },
                ) if k1 == k2 && b1 == b2 => vec![(*r1, *r2), (*y1, *y2)],
                _ => return false,
            };
            stack.extend(pairs);
        }
        true
    }
}

/// Children before parents. Nodes reachable from the root come first, in
/// depth-first post-order; unreachable nodes follow in index order.
pub fn topological_order(graph: &ScopeGraph) -> Result<Vec<NodeId>, GraphError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut marks = vec![Mark::New; graph.len()];
    let mut order = Vec::with_capacity(graph.len());
    let starts = std::iter::once(graph.root).chain((0..graph.len()).map(NodeId));
    for start in starts {
        if marks[start.0] != Mark::New {
            continue;
        }
        // (node, next child position)
        let mut stack = vec![(start, 0usize)];
        marks[start.0] = Mark::Open;
        while let Some((id, pos)) = stack.pop() {
            let children = graph.node(id).children();
            if pos < children.len() {
                stack.push((id, pos + 1));
                let c = children[pos];
                match marks[c.0] {
                    Mark::Open => return Err(GraphError::CycleDetected(c)),
                    Mark::Done => {}
                    Mark::New => {
                        marks[c.0] = Mark::Open;
                        stack.push((c, 0));
                    }
                }
            } else {
                marks[id.0] = Mark::Done;
                order.push(id);
            }
        }
    }
    Ok(order)
}

/// Nodes reachable from the root, children before parents.
pub(crate) fn reachable_order(graph: &ScopeGraph) -> Result<Vec<NodeId>, GraphError> {
    let reach = reachable(graph);
    Ok(topological_order(graph)?.into_iter().filter(|id| reach[id.0]).collect())
}

fn reachable(graph: &ScopeGraph) -> Vec<bool> {
    let mut seen = vec![false; graph.len()];
    let mut stack = vec![graph.root];
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut seen[id.0], true) {
            continue;
        }
        stack.extend(graph.node(id).children());
    }
    seen
}

/// Scope information for an acyclic graph.
#[derive(Debug, Clone)]
pub(crate) struct ScopeInfo {
    /// Variables bound above each node (union over all parents).
    pub context: Vec<BTreeSet<String>>,
    /// Classical free variables, bottom-up.
    pub syntactic: Vec<BTreeSet<String>>,
    /// Nodes reached with different contexts from different parents.
    pub conflicts: Vec<(NodeId, BTreeSet<String>, BTreeSet<String>)>,
    /// Quantifiers re-binding a variable already in their context.
    pub shadowing: Vec<(NodeId, BTreeSet<String>)>,
}

pub(crate) fn analyze(graph: &ScopeGraph, order: &[NodeId]) -> ScopeInfo {
    let n = graph.len();
    let mut syntactic: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n];
    for &id in order {
        let set = match graph.node(id) {
            ScopeNode::Tautology => BTreeSet::new(),
            ScopeNode::Application { variable, .. } => BTreeSet::from([variable.clone()]),
            ScopeNode::Conjunction(cs) => cs.iter().flat_map(|c| syntactic[c.0].iter().cloned()).collect(),
            ScopeNode::Quantifier { bound, restriction, body, .. } => syntactic[restriction.0]
                .union(&syntactic[body.0])
                .filter(|v| !bound.contains(v))
                .cloned()
                .collect(),
        };
        syntactic[id.0] = set;
    }

    let reach = reachable(graph);
    let mut context: Vec<Option<BTreeSet<String>>> = vec![None; n];
    let mut conflicts = Vec::new();
    let mut shadowing = Vec::new();
    context[graph.root.0] = Some(BTreeSet::new());
    // parents are visited before children in reverse topological order
    for &id in order.iter().rev() {
        if !reach[id.0] {
            continue;
        }
        let ctx = context[id.0].clone().unwrap_or_default();
        let (child_ctx, children) = match graph.node(id) {
            ScopeNode::Quantifier { bound, restriction, body, .. } => {
                let clash: BTreeSet<String> = bound.iter().filter(|b| ctx.contains(*b)).cloned().collect();
                if !clash.is_empty() {
                    shadowing.push((id, clash));
                }
                let mut c = ctx.clone();
                c.extend(bound.iter().cloned());
                (c, vec![*restriction, *body])
            }
            ScopeNode::Conjunction(cs) => (ctx.clone(), cs.clone()),
            _ => continue,
        };
        for c in children {
            match &mut context[c.0] {
                slot @ None => *slot = Some(child_ctx.clone()),
                Some(existing) if *existing != child_ctx => {
                    if !conflicts.iter().any(|(id, _, _)| *id == c) {
                        conflicts.push((c, existing.clone(), child_ctx.clone()));
                    }
                    existing.extend(child_ctx.iter().cloned());
                }
                Some(_) => {}
            }
        }
    }
    ScopeInfo {
        context: context.into_iter().map(Option::unwrap_or_default).collect(),
        syntactic,
        conflicts,
        shadowing,
    }
}

/// Free variables of a node: the variables bound above it plus any it
/// mentions without binding. For a cyclic graph, the classical bottom-up
/// rule is applied to the acyclic part only.
pub fn free_vars(graph: &ScopeGraph, node: NodeId) -> BTreeSet<String> {
    let order = match topological_order(graph) {
        Ok(o) => o,
        Err(_) => return BTreeSet::new(),
    };
    let info = analyze(graph, &order);
    info.context[node.0].union(&info.syntactic[node.0]).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    Cycle,
    OpenRoot,
    UnknownPredicate,
    UnknownVariable,
    Shadowing,
    EmptyConjunction,
    EmptyBinding,
    DuplicateBinding,
    InconsistentSharing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScopeDiagnostic {
    pub kind: DiagnosticKind,
    pub node: Option<NodeId>,
    pub message: String,
}

impl fmt::Display for ScopeDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(n) => write!(f, "{} (at node {})", self.message, n),
            None => f.write_str(&self.message),
        }
    }
}

pub(crate) fn fmt_set<'a>(set: impl IntoIterator<Item = &'a String>) -> String {
    let items: Vec<&str> = set.into_iter().map(String::as_str).collect();
    format!("{{{}}}", items.join(", "))
}

/// Checks well-formedness against a model and lexicon. Diagnostics are
/// returned, never thrown.
pub fn validate(graph: &ScopeGraph, model: &SituationModel, lexicon: &VagueLexicon) -> Result<(), Vec<ScopeDiagnostic>> {
    let mut out = Vec::new();
    let diag = |kind, node: Option<NodeId>, message: String| ScopeDiagnostic { kind, node, message };

    let order = match topological_order(graph) {
        Ok(o) => o,
        Err(GraphError::CycleDetected(id)) => {
            out.push(diag(DiagnosticKind::Cycle, Some(id), format!("cycle through node {id}")));
            return Err(out);
        }
        Err(GraphError::MissingNode(id)) => {
            out.push(diag(DiagnosticKind::Cycle, Some(id), format!("node {id} does not exist")));
            return Err(out);
        }
    };
    let info = analyze(graph, &order);
    let reach = reachable(graph);

    let root_free = &info.syntactic[graph.root.0];
    if !root_free.is_empty() {
        out.push(diag(
            DiagnosticKind::OpenRoot,
            Some(graph.root),
            format!("root has free variables {}", fmt_set(root_free)),
        ));
    }
    for (i, node) in graph.nodes().iter().enumerate() {
        if !reach[i] {
            continue;
        }
        let id = NodeId(i);
        match node {
            ScopeNode::Application { predicate, variable } => {
                if !lexicon.contains(predicate) {
                    out.push(diag(DiagnosticKind::UnknownPredicate, Some(id), format!("unknown predicate `{predicate}`")));
                }
                if model.variable_index(variable).is_none() {
                    out.push(diag(DiagnosticKind::UnknownVariable, Some(id), format!("unknown variable `{variable}`")));
                }
            }
            ScopeNode::Conjunction(cs) if cs.is_empty() => {
                out.push(diag(DiagnosticKind::EmptyConjunction, Some(id), "empty conjunction".into()));
            }
            ScopeNode::Quantifier { kind, bound, .. } => {
                if bound.is_empty() {
                    out.push(diag(DiagnosticKind::EmptyBinding, Some(id), format!("`{kind}` binds no variables")));
                }
                let mut seen = BTreeSet::new();
                for b in bound {
                    if !seen.insert(b) {
                        out.push(diag(DiagnosticKind::DuplicateBinding, Some(id), format!("`{kind}` binds `{b}` twice")));
                    }
                    if model.variable_index(b).is_none() {
                        out.push(diag(DiagnosticKind::UnknownVariable, Some(id), format!("unknown variable `{b}`")));
                    }
                }
            }
            _ => {}
        }
    }
    for (id, clash) in &info.shadowing {
        out.push(diag(
            DiagnosticKind::Shadowing,
            Some(*id),
            format!("quantifier binds {} which is already free at this node", fmt_set(clash)),
        ));
    }
    for (id, a, b) in &info.conflicts {
        out.push(diag(
            DiagnosticKind::InconsistentSharing,
            Some(*id),
            format!("shared node is used under different scopes {} and {}", fmt_set(a), fmt_set(b)),
        ));
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
