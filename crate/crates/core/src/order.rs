//! Inclusion order between classes as a DAG of immediate successors.
//!
//! The identified pairs are transitively closed over the full class set and
//! then restricted to the classes that can contain signals; the restricted
//! relation is reduced to its Hasse diagram. Reachability is answered from
//! the closure through per-node bitsets.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use petgraph::algo::toposort;
use petgraph::algo::tred::{dag_to_toposorted_adjacency_list, dag_transitive_reduction_closure};
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::IntoNeighbors;
use thiserror::Error;

use crate::classes::{ClassId, ClassSet};

#[derive(Debug, Error, PartialEq)]
pub enum OrderError {
    #[error("inclusion relation has a cycle through class {0}")]
    CycleDetected(ClassId),
    #[error("pair references class {0} outside the node set")]
    UnknownClass(ClassId),
}

/// Closure and reduction of a strict relation on `0..n`.
struct Closed {
    reduction: Vec<(usize, usize)>,
    descendants: Vec<FixedBitSet>,
}

fn close_and_reduce(n: usize, edges: &[(usize, usize)]) -> Result<Closed, usize> {
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, edges.len());
    for _ in 0..n {
        g.add_node(());
    }
    let mut seen = BTreeSet::new();
    for &(a, b) in edges {
        if a != b && seen.insert((a, b)) {
            g.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
        }
    }
    let order = toposort(&g, None).map_err(|c| c.node_id().index())?;
    let (list, _) = dag_to_toposorted_adjacency_list::<_, NodeIndex>(&g, &order);
    let (red, clos) = dag_transitive_reduction_closure(&list);
    let mut reduction = Vec::new();
    let mut descendants = vec![FixedBitSet::with_capacity(n); n];
    for (rank, &node) in order.iter().enumerate() {
        let from = node.index();
        for to in (&red).neighbors(NodeIndex::new(rank)) {
            reduction.push((from, order[to.index()].index()));
        }
        for to in (&clos).neighbors(NodeIndex::new(rank)) {
            descendants[from].insert(order[to.index()].index());
        }
    }
    reduction.sort_unstable();
    Ok(Closed {
        reduction,
        descendants,
    })
}

/// Transitive closure of `pairs` over `nodes`, reflexive pairs dropped.
pub fn transitive_closure(
    nodes: &[ClassId],
    pairs: &[(ClassId, ClassId)],
) -> Result<Vec<(ClassId, ClassId)>, OrderError> {
    let dag = OrderDag::from_relation(nodes, pairs)?;
    Ok(dag.closure_pairs())
}

/// Transitive reduction of `pairs` over `nodes`.
pub fn transitive_reduction(
    nodes: &[ClassId],
    pairs: &[(ClassId, ClassId)],
) -> Result<Vec<(ClassId, ClassId)>, OrderError> {
    Ok(OrderDag::from_relation(nodes, pairs)?.edges().to_vec())
}

#[derive(Debug, Clone)]
pub struct OrderDag {
    nodes: Vec<ClassId>,
    position: HashMap<ClassId, usize>,
    edges: Vec<(ClassId, ClassId)>,
    successors: Vec<Vec<usize>>,
    descendants: Vec<FixedBitSet>,
    ancestors: Vec<FixedBitSet>,
    /// Node positions in a topological order of the reduction.
    topo: Vec<usize>,
}

impl OrderDag {
    /// DAG over the classes that can contain signals.
    pub fn build(classes: &ClassSet) -> Result<Self, OrderError> {
        Self::build_filtered(classes, |c| !classes.get(c).empty)
    }

    /// DAG over every class, empty ones included.
    pub fn build_full(classes: &ClassSet) -> Result<Self, OrderError> {
        Self::build_filtered(classes, |_| true)
    }

    fn build_filtered(
        classes: &ClassSet,
        keep: impl Fn(ClassId) -> bool,
    ) -> Result<Self, OrderError> {
        let all: Vec<ClassId> = classes.classes().iter().map(|c| c.id).collect();
        Self::restricted(&all, classes.order_pairs(), keep)
    }

    /// DAG of an explicit relation over `nodes`.
    pub fn from_relation(
        nodes: &[ClassId],
        pairs: &[(ClassId, ClassId)],
    ) -> Result<Self, OrderError> {
        Self::restricted(nodes, pairs, |_| true)
    }

    fn restricted(
        all: &[ClassId],
        pairs: &[(ClassId, ClassId)],
        keep: impl Fn(ClassId) -> bool,
    ) -> Result<Self, OrderError> {
        let index: HashMap<ClassId, usize> = all.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let lookup = |c: ClassId| index.get(&c).copied().ok_or(OrderError::UnknownClass(c));
        let edges = pairs
            .iter()
            .map(|&(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>, OrderError>>()?;
        let full =
            close_and_reduce(all.len(), &edges).map_err(|i| OrderError::CycleDetected(all[i]))?;

        let mut nodes: Vec<ClassId> = all.iter().copied().filter(|&c| keep(c)).collect();
        nodes.sort_unstable();
        let position: HashMap<ClassId, usize> =
            nodes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let n = nodes.len();
        let mut closed_edges = Vec::new();
        for (i, &c) in nodes.iter().enumerate() {
            for d in full.descendants[index[&c]].ones() {
                if let Some(&j) = position.get(&all[d]) {
                    closed_edges.push((i, j));
                }
            }
        }
        let restricted = close_and_reduce(n, &closed_edges)
            .expect("restriction of an acyclic relation is acyclic");

        let mut successors = vec![Vec::new(); n];
        for &(a, b) in &restricted.reduction {
            successors[a].push(b);
        }
        for s in &mut successors {
            s.sort_unstable();
        }
        let mut ancestors = vec![FixedBitSet::with_capacity(n); n];
        for (a, desc) in restricted.descendants.iter().enumerate() {
            for d in desc.ones() {
                ancestors[d].insert(a);
            }
        }
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, restricted.reduction.len());
        for _ in 0..n {
            g.add_node(());
        }
        for &(a, b) in &restricted.reduction {
            g.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
        }
        let topo = toposort(&g, None)
            .expect("reduction is acyclic")
            .into_iter()
            .map(NodeIndex::index)
            .collect();
        let mut edges: Vec<(ClassId, ClassId)> = restricted
            .reduction
            .iter()
            .map(|&(a, b)| (nodes[a], nodes[b]))
            .collect();
        edges.sort_unstable();
        Ok(OrderDag {
            nodes,
            position,
            edges,
            successors,
            descendants: restricted.descendants,
            ancestors,
            topo,
        })
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> &[ClassId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.position.contains_key(&id)
    }

    /// Immediate-successor edges, sorted.
    pub fn edges(&self) -> &[(ClassId, ClassId)] {
        &self.edges
    }

    /// Whether `b` is strictly above `a` in the order.
    pub fn reaches(&self, a: ClassId, b: ClassId) -> bool {
        match (self.position.get(&a), self.position.get(&b)) {
            (Some(&i), Some(&j)) => self.descendants[i].contains(j),
            _ => false,
        }
    }

    /// Classes strictly above `id` (supersets), ascending.
    pub fn descendants(&self, id: ClassId) -> Vec<ClassId> {
        self.collect(&self.descendants, id)
    }

    /// Classes strictly below `id` (subsets), ascending.
    pub fn ancestors(&self, id: ClassId) -> Vec<ClassId> {
        self.collect(&self.ancestors, id)
    }

    fn collect(&self, sets: &[FixedBitSet], id: ClassId) -> Vec<ClassId> {
        self.position
            .get(&id)
            .map(|&i| sets[i].ones().map(|j| self.nodes[j]).collect())
            .unwrap_or_default()
    }

    /// All strict pairs of the closed relation, sorted.
    pub fn closure_pairs(&self) -> Vec<(ClassId, ClassId)> {
        let mut out: Vec<_> = self
            .descendants
            .iter()
            .enumerate()
            .flat_map(|(i, d)| d.ones().map(move |j| (i, j)))
            .map(|(i, j)| (self.nodes[i], self.nodes[j]))
            .collect();
        out.sort_unstable();
        out
    }

    /// Nodes with no predecessor in the DAG.
    pub fn minimal(&self) -> Vec<ClassId> {
        (0..self.len())
            .filter(|&i| self.ancestors[i].is_clear())
            .map(|i| self.nodes[i])
            .collect()
    }

    /// A longest directed path through the subgraph induced by `remaining`.
    ///
    /// Among paths of maximal length the lexicographically smallest id
    /// sequence wins. Returns an empty path when nothing remains.
    pub fn longest_path(&self, remaining: &BTreeSet<ClassId>) -> Vec<ClassId> {
        let n = self.len();
        let mut alive = FixedBitSet::with_capacity(n);
        for id in remaining {
            if let Some(&i) = self.position.get(id) {
                alive.insert(i);
            }
        }
        // length of the best path starting at each node, and its next hop
        let mut length = vec![0usize; n];
        let mut next = vec![None; n];
        for &v in self.topo.iter().rev() {
            if !alive.contains(v) {
                continue;
            }
            length[v] = 1;
            // successors are sorted, so the first strict improvement is the
            // smallest id among the longest continuations
            for &w in &self.successors[v] {
                if alive.contains(w) && length[w] + 1 > length[v] {
                    length[v] = length[w] + 1;
                    next[v] = Some(w);
                }
            }
        }
        let start = alive.ones().fold(None::<usize>, |best, v| match best {
            Some(b) if length[b] >= length[v] => Some(b),
            _ => Some(v),
        });
        let mut path = Vec::new();
        let mut cur = start;
        while let Some(v) = cur {
            path.push(self.nodes[v]);
            cur = next[v];
        }
        path
    }

    /// Graphviz rendering labelled with canonical class text.
    pub fn to_dot(&self, classes: &ClassSet) -> String {
        self.to_dot_styled(classes, |_| String::new())
    }

    /// Like [`OrderDag::to_dot`], with extra node attributes per class
    /// (e.g. `color=red`), appended verbatim.
    pub fn to_dot_styled(&self, classes: &ClassSet, style: impl Fn(ClassId) -> String) -> String {
        let mut out = String::from("digraph classes {\n  rankdir=TB;\n  node [shape=box];\n");
        for &id in &self.nodes {
            let label = classes
                .get(id)
                .canonical()
                .replace('\\', "\\\\")
                .replace('"', "\\\"");
            let extra = style(id);
            let sep = if extra.is_empty() { "" } else { ", " };
            let _ = writeln!(out, "  {id} [label=\"{id}: {label}\"{sep}{extra}];");
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "  {a} -> {b};");
        }
        out.push_str("}\n");
        out
    }
}
