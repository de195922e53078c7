//! Proper rule hierarchies: DAGs whose edges are single atom-addition
//! (A) or single variable-instantiation (I) subsumption steps.
//!
//! Because every A-edge adds exactly one atom and every I-edge exactly one
//! constant, no edge of `Φa ∪ Φi` can be inferred through two others; the
//! builders therefore never run a transitive reduction. [`is_proper`] checks
//! that claim against an arbitrary decider.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::error::HierarchyError;
use crate::par::{self, Execution};
use crate::rule::{Rule, Term};
use crate::store::{EntityId, RelationId, Vocab};
use crate::subsume::{a_subsumes, i_subsumes};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Addition,
    Instantiation,
    /// Orphan hooked under the top rule because its generalization was never
    /// sampled.
    Attached,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub parent: usize,
    pub child: usize,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, Default)]
pub struct Hierarchy {
    nodes: Vec<Rule>,
    index: HashMap<Rule, usize>,
    edges: Vec<Edge>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
}

impl Hierarchy {
    /// Nodes only, deduplicated, in first-seen order.
    pub fn from_rules<'a>(rules: impl IntoIterator<Item = &'a Rule>) -> Self {
        let mut h = Hierarchy::default();
        for r in rules {
            h.add_node(r.clone());
        }
        h
    }

    pub fn add_node(&mut self, rule: Rule) -> usize {
        if let Some(&i) = self.index.get(&rule) {
            return i;
        }
        let i = self.nodes.len();
        self.index.insert(rule.clone(), i);
        self.nodes.push(rule);
        self.children.push(Vec::new());
        self.parents.push(Vec::new());
        i
    }

    pub fn add_edge(&mut self, parent: usize, child: usize, kind: EdgeKind) {
        if self.children[parent].contains(&child) {
            return;
        }
        self.edges.push(Edge { parent, child, kind });
        self.children[parent].push(child);
        self.parents[child].push(parent);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Rule] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Rule {
        &self.nodes[i]
    }

    pub fn index_of(&self, rule: &Rule) -> Option<usize> {
        self.index.get(rule).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.len()).filter(|i| self.parents[*i].is_empty()).collect()
    }

    pub fn has_edge(&self, parent: &Rule, child: &Rule) -> bool {
        match (self.index_of(parent), self.index_of(child)) {
            (Some(p), Some(c)) => self.children[p].contains(&c),
            _ => false,
        }
    }

    /// Edges as `(parent, child)` rule pairs.
    pub fn edge_pairs(&self) -> HashSet<(Rule, Rule)> {
        self.edges
            .iter()
            .map(|e| (self.nodes[e.parent].clone(), self.nodes[e.child].clone()))
            .collect()
    }

    /// Hooks every parentless non-top rule under the top rule of its target,
    /// when that top rule is present. Returns the number of rules attached.
    pub fn attach_orphans_to_top(&mut self) -> usize {
        let tops: HashMap<RelationId, usize> = (0..self.len())
            .filter(|i| self.nodes[*i].is_top())
            .map(|i| (self.nodes[i].target(), i))
            .collect();
        let mut attached = 0;
        for i in self.roots() {
            if self.nodes[i].is_top() {
                continue;
            }
            if let Some(&top) = tops.get(&self.nodes[i].target()) {
                self.add_edge(top, i, EdgeKind::Attached);
                attached += 1;
            }
        }
        attached
    }

    /// Topological order, or an error when the graph has a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>, HierarchyError> {
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|i| indeg[*i] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for &c in &self.children[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() == self.len() {
            Ok(order)
        } else {
            Err(HierarchyError::Cyclic)
        }
    }

    /// True when some edge `(p, q)` is also implied by a longer path.
    pub fn has_redundant_edges(&self) -> bool {
        self.edges.iter().any(|e| {
            let mut seen = vec![false; self.len()];
            let mut stack: Vec<usize> = self.children[e.parent]
                .iter()
                .copied()
                .filter(|c| *c != e.child)
                .collect();
            while let Some(n) = stack.pop() {
                if n == e.child {
                    return true;
                }
                if !std::mem::replace(&mut seen[n], true) {
                    stack.extend(self.children[n].iter().copied());
                }
            }
            false
        })
    }

    /// Breadth-first traversal from the roots. Each visited node is kept or
    /// pruned by `visit`; a node is visited exactly once, and only if at
    /// least one of its parents was kept. Each level is evaluated with
    /// `exec`. Returns every visited node with its decision and value, in
    /// visit order.
    pub fn traverse<T, F>(&self, exec: Execution, visit: F) -> Result<Vec<Visited<T>>, HierarchyError>
    where
        T: Send,
        F: Fn(usize, &Rule) -> (bool, T) + Sync + Send,
    {
        self.topological_order()?;
        let mut enqueued = vec![false; self.len()];
        let mut frontier = self.roots();
        for &r in &frontier {
            enqueued[r] = true;
        }
        let mut out = Vec::new();
        while !frontier.is_empty() {
            let results = par::map(exec, &frontier, |&i| visit(i, &self.nodes[i]));
            let mut next = Vec::new();
            for (&node, (kept, value)) in frontier.iter().zip(results) {
                if kept {
                    for &c in &self.children[node] {
                        if !std::mem::replace(&mut enqueued[c], true) {
                            next.push(c);
                        }
                    }
                }
                out.push(Visited { node, kept, value });
            }
            frontier = next;
        }
        Ok(out)
    }

    /// Sequential [`Hierarchy::traverse`] returning only the kept nodes.
    pub fn bfs_with_pruning<F>(&self, visit: F) -> Result<Vec<usize>, HierarchyError>
    where
        F: Fn(&Rule) -> bool + Sync + Send,
    {
        Ok(self
            .traverse(Execution::Sequential, |_, r| (visit(r), ()))?
            .into_iter()
            .filter(|v| v.kept)
            .map(|v| v.node)
            .collect())
    }

    /// Graphviz rendering: solid A-edges, dashed I-edges, dotted attachments.
    pub fn to_dot(&self, vocab: &Vocab) -> String {
        let mut s = String::from("digraph hierarchy {\n  node [shape=box];\n");
        for (i, r) in self.nodes.iter().enumerate() {
            let label = r.display(vocab).to_string().replace('\\', "\\\\").replace('"', "\\\"");
            let _ = writeln!(s, "  n{i} [label=\"{label}\"];");
        }
        for e in &self.edges {
            let style = match e.kind {
                EdgeKind::Addition => "solid",
                EdgeKind::Instantiation => "dashed",
                EdgeKind::Attached => "dotted",
            };
            let _ = writeln!(s, "  n{} -> n{} [style={style}];", e.parent, e.child);
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Visited<T> {
    pub node: usize,
    pub kept: bool,
    pub value: T,
}

fn pred_key(rule: &Rule, atoms: usize) -> Vec<RelationId> {
    (0..=atoms).map(|i| rule.atom(i).pred).collect()
}

/// `Φa`: every pair with [`a_subsumes`]. Only rules whose body lengths
/// differ by one and whose leading predicates agree are compared.
pub fn build_a_hierarchy(rules: &[Rule]) -> Hierarchy {
    let mut h = Hierarchy::from_rules(rules);
    let mut by_prefix: HashMap<Vec<RelationId>, Vec<usize>> = HashMap::new();
    for (i, r) in h.nodes.iter().enumerate() {
        by_prefix.entry(pred_key(r, r.body_length())).or_default().push(i);
    }
    let mut found = Vec::new();
    for (qi, q) in h.nodes.iter().enumerate() {
        if q.body_length() == 0 {
            continue;
        }
        if let Some(cands) = by_prefix.get(&pred_key(q, q.body_length() - 1)) {
            for &pi in cands {
                if a_subsumes(&h.nodes[pi], q) {
                    found.push((pi, qi));
                }
            }
        }
    }
    for (p, q) in found {
        h.add_edge(p, q, EdgeKind::Addition);
    }
    h
}

/// Constant positions `(atom index, is_object, constant)` in atom order.
fn constant_slots(rule: &Rule) -> Vec<(usize, bool, EntityId)> {
    let mut out = Vec::new();
    for i in 0..=rule.body_length() {
        let a = rule.atom(i);
        if let Term::Const(c) = a.subj {
            out.push((i, false, c));
        }
        if let Term::Const(c) = a.obj {
            out.push((i, true, c));
        }
    }
    out
}

/// `Φi`: every pair with [`i_subsumes`]. Rules are grouped by their
/// predicate sequence; a parent with constants is only compared with the
/// children that carry its first constant at the same position, so HARs
/// meet only the BARs sharing their head constant.
pub fn build_i_hierarchy(rules: &[Rule]) -> Hierarchy {
    let mut h = Hierarchy::from_rules(rules);
    // (predicate sequence, deduction level) -> members
    let mut groups: HashMap<(Vec<RelationId>, usize), Vec<usize>> = HashMap::new();
    for (i, r) in h.nodes.iter().enumerate() {
        groups
            .entry((pred_key(r, r.body_length()), r.deduction_level()))
            .or_default()
            .push(i);
    }
    let mut found = Vec::new();
    for ((key, level), parents) in &groups {
        let Some(children) = groups.get(&(key.clone(), level + 1)) else {
            continue;
        };
        let mut by_slot: HashMap<(usize, bool, EntityId), Vec<usize>> = HashMap::new();
        if *level > 0 {
            for &c in children {
                for slot in constant_slots(&h.nodes[c]) {
                    by_slot.entry(slot).or_default().push(c);
                }
            }
        }
        for &p in parents {
            let pr = &h.nodes[p];
            let cands: &[usize] = match constant_slots(pr).first() {
                None => children,
                Some(slot) => by_slot.get(slot).map(Vec::as_slice).unwrap_or(&[]),
            };
            for &c in cands {
                if i_subsumes(pr, &h.nodes[c]) {
                    found.push((p, c));
                }
            }
        }
    }
    found.sort_unstable();
    for (p, c) in found {
        h.add_edge(p, c, EdgeKind::Instantiation);
    }
    h
}

/// Node and edge union.
pub fn union(a: &Hierarchy, b: &Hierarchy) -> Hierarchy {
    let mut h = a.clone();
    for e in &b.edges {
        let p = h.add_node(b.nodes[e.parent].clone());
        let c = h.add_node(b.nodes[e.child].clone());
        h.add_edge(p, c, e.kind);
    }
    for r in &b.nodes {
        h.add_node(r.clone());
    }
    debug_assert!(h.topological_order().is_ok());
    debug_assert!(h.len() > 256 || !h.has_redundant_edges());
    h
}

/// True iff the edge set of `h` equals the transitive reduction of the
/// relation `decider` induces on `h`'s nodes.
#[allow(clippy::needless_range_loop)]
pub fn is_proper<F: Fn(&Rule, &Rule) -> bool>(h: &Hierarchy, decider: F) -> bool {
    let n = h.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = i != j && decider(&h.nodes[i], &h.nodes[j]);
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut reduced = HashSet::new();
    for i in 0..n {
        for j in 0..n {
            if reach[i][j] && !(0..n).any(|k| k != i && k != j && reach[i][k] && reach[k][j]) {
                reduced.insert((i, j));
            }
        }
    }
    let edges: HashSet<(usize, usize)> = h.edges.iter().map(|e| (e.parent, e.child)).collect();
    edges == reduced
}
