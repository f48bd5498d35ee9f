//! Simple directed graphs over dense node indices, plus the graph algorithms
//! the rest of the crate is built on: strongly connected components, reduced
//! graphs, source components and vertex-disjoint paths.

mod flow;
mod io;

use std::collections::HashMap;

use thiserror::Error;

pub use crate::nodeset::{NodeId, NodeSet, MAX_NODES};
pub use flow::{max_disjoint_paths, PathSet};
pub(crate) use flow::{disjoint_path_count, DisjointPaths};
pub use io::{GraphDoc, IoError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have between 1 and {MAX_NODES} nodes, got {0}")]
    NodeCount(usize),
    #[error("node index {0} is out of range for a graph with {1} nodes")]
    OutOfRange(usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("duplicate node name {0:?}")]
    DuplicateName(String),
    #[error("unknown node name {0:?}")]
    UnknownName(String),
    #[error("invalid node sets: {0}")]
    Precondition(String),
}

/// An immutable simple directed graph. No self-loops, no parallel edges.
#[derive(Clone, PartialEq, Eq)]
pub struct DiGraph {
    names: Vec<String>,
    out: Vec<NodeSet>,
    inn: Vec<NodeSet>,
}

impl std::fmt::Debug for DiGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiGraph")
            .field("n", &self.n())
            .field("edges", &self.edge_count())
            .finish()
    }
}

impl DiGraph {
    /// Builds a graph with nodes named `"0"`, `"1"`, ... from an edge list.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let names = (0..n).map(|i| i.to_string()).collect();
        Self::with_names(names, edges)
    }

    /// Builds a graph with the given display names (position = index).
    pub fn with_names<I>(names: Vec<String>, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = names.len();
        if n == 0 || n > MAX_NODES {
            return Err(GraphError::NodeCount(n));
        }
        let mut seen = HashMap::with_capacity(n);
        for (i, name) in names.iter().enumerate() {
            if seen.insert(name.as_str(), i).is_some() {
                return Err(GraphError::DuplicateName(name.clone()));
            }
        }
        let mut out = vec![NodeSet::EMPTY; n];
        let mut inn = vec![NodeSet::EMPTY; n];
        for (i, j) in edges {
            if i >= n {
                return Err(GraphError::OutOfRange(i, n));
            }
            if j >= n {
                return Err(GraphError::OutOfRange(j, n));
            }
            if i == j {
                return Err(GraphError::SelfLoop(names[i].clone()));
            }
            if out[i].contains(NodeId(j)) {
                return Err(GraphError::DuplicateEdge(names[i].clone(), names[j].clone()));
            }
            out[i].insert(NodeId(j));
            inn[j].insert(NodeId(i));
        }
        Ok(DiGraph { names, out, inn })
    }

    /// The complete digraph on `names`.
    pub fn complete(names: Vec<String>) -> Result<Self, GraphError> {
        let n = names.len();
        let edges = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)));
        Self::with_names(names, edges)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.names.len()
    }

    /// The node set `V`.
    #[inline]
    pub fn nodes(&self) -> NodeSet {
        NodeSet::full(self.n())
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.names[v.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id_of(&self, name: &str) -> Result<NodeId, GraphError> {
        self.names
            .iter()
            .position(|s| s == name)
            .map(NodeId)
            .ok_or_else(|| GraphError::UnknownName(name.to_string()))
    }

    /// Resolves a list of names into a node set.
    pub fn set_of<S: AsRef<str>>(&self, names: &[S]) -> Result<NodeSet, GraphError> {
        names.iter().map(|s| self.id_of(s.as_ref())).collect()
    }

    pub fn names_of(&self, set: NodeSet) -> Vec<String> {
        set.iter().map(|v| self.names[v.0].clone()).collect()
    }

    #[inline]
    pub fn out_neighbors(&self, v: NodeId) -> NodeSet {
        self.out[v.0]
    }

    #[inline]
    pub fn in_neighbors(&self, v: NodeId) -> NodeSet {
        self.inn[v.0]
    }

    pub(crate) fn out_masks(&self) -> &[NodeSet] {
        &self.out
    }

    #[inline]
    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.out[i.0].contains(j)
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(|s| s.len()).sum()
    }

    /// All edges in ascending `(tail, head)` order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |j| (NodeId(i), j)))
    }

    pub(crate) fn check_set(&self, set: NodeSet) -> Result<(), GraphError> {
        if set.is_subset(self.nodes()) {
            Ok(())
        } else {
            let bad = (set - self.nodes()).first().unwrap();
            Err(GraphError::OutOfRange(bad.0, self.n()))
        }
    }

    /// Nodes outside `set` with an edge into `set`.
    pub fn incoming_neighbors(&self, set: NodeSet) -> Result<NodeSet, GraphError> {
        self.check_set(set)?;
        Ok(self.incoming_neighbors_unchecked(set))
    }

    #[inline]
    pub(crate) fn incoming_neighbors_unchecked(&self, set: NodeSet) -> NodeSet {
        let mut acc = NodeSet::EMPTY;
        for v in set {
            acc |= self.inn[v.0];
        }
        acc - set
    }

    /// The whole graph as a [`SubGraph`].
    pub fn view(&self) -> SubGraph {
        SubGraph {
            nodes: self.nodes(),
            out: self.out.clone(),
        }
    }

    /// `G_{-F}`: the graph with `removed` and every incident edge deleted.
    pub fn without(&self, removed: NodeSet) -> SubGraph {
        let keep = self.nodes() - removed;
        let out = self
            .out
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if keep.contains(NodeId(i)) {
                    *s & keep
                } else {
                    NodeSet::EMPTY
                }
            })
            .collect();
        SubGraph { nodes: keep, out }
    }

    /// Strongly connected components of the whole graph.
    pub fn scc_decomposition(&self) -> Condensation {
        self.view().condensation()
    }
}

/// A subgraph indexed by the parent graph's node ids.
///
/// `out[v]` is empty for nodes outside `nodes`, and always a subset of
/// `nodes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubGraph {
    nodes: NodeSet,
    out: Vec<NodeSet>,
}

impl SubGraph {
    pub fn nodes(&self) -> NodeSet {
        self.nodes
    }

    pub fn out_neighbors(&self, v: NodeId) -> NodeSet {
        self.out[v.0]
    }

    pub fn in_neighbors(&self, v: NodeId) -> NodeSet {
        self.nodes
            .iter()
            .filter(|u| self.out[u.0].contains(v))
            .collect()
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.out[i.0].contains(j)
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes
            .iter()
            .flat_map(move |i| self.out[i.0].iter().map(move |j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(|s| s.len()).sum()
    }

    /// Nodes reachable from `start` (including `start`).
    pub fn reach_from(&self, start: NodeSet) -> NodeSet {
        let mut seen = start & self.nodes;
        let mut frontier = seen;
        while !frontier.is_empty() {
            let mut next = NodeSet::EMPTY;
            for v in frontier {
                next |= self.out[v.0];
            }
            frontier = next - seen;
            seen |= frontier;
        }
        seen
    }

    /// Nodes that can reach some node of `goal` (including `goal`).
    pub fn reach_to(&self, goal: NodeSet) -> NodeSet {
        let mut seen = goal & self.nodes;
        loop {
            let before = seen;
            for v in self.nodes - seen {
                if !self.out[v.0].is_disjoint(seen) {
                    seen.insert(v);
                }
            }
            if seen == before {
                return seen;
            }
        }
    }

    /// Whether every ordered pair of `set` is joined by a path in this
    /// subgraph (paths may leave `set`).
    pub fn is_strongly_connected(&self, set: NodeSet) -> bool {
        match set.first() {
            None => false,
            Some(v) => {
                set.is_subset(self.nodes)
                    && set.is_subset(self.reach_from(NodeSet::singleton(v)))
                    && set.is_subset(self.reach_to(NodeSet::singleton(v)))
            }
        }
    }

    pub fn condensation(&self) -> Condensation {
        let n = self.out.len();
        let mut reach = vec![NodeSet::EMPTY; n];
        for v in self.nodes {
            reach[v.0] = self.reach_from(NodeSet::singleton(v));
        }
        let mut component_of = vec![None; n];
        let mut components: Vec<NodeSet> = Vec::new();
        for v in self.nodes {
            if component_of[v.0].is_some() {
                continue;
            }
            let comp: NodeSet = reach[v.0]
                .iter()
                .filter(|u| reach[u.0].contains(v))
                .collect();
            for u in comp {
                component_of[u.0] = Some(components.len());
            }
            components.push(comp);
        }
        let k = components.len();
        let mut comp_reach = vec![0u64; k];
        let mut direct = vec![0u64; k];
        for (c, comp) in components.iter().enumerate() {
            let rep = comp.first().unwrap();
            for u in reach[rep.0] - *comp {
                comp_reach[c] |= 1u64 << component_of[u.0].unwrap();
            }
            for u in *comp {
                for w in self.out[u.0] - *comp {
                    direct[c] |= 1u64 << component_of[w.0].unwrap();
                }
            }
        }
        Condensation {
            components,
            component_of,
            reach: comp_reach,
            direct,
        }
    }

    /// Source components, ordered by their smallest node index.
    pub fn source_components(&self) -> Vec<NodeSet> {
        let c = self.condensation();
        c.source_components()
            .into_iter()
            .map(|k| c.components[k])
            .collect()
    }
}

/// The strongly connected components of a (sub)graph and the acyclic
/// component graph over them.
#[derive(Clone, Debug)]
pub struct Condensation {
    /// Components ordered by smallest member.
    pub components: Vec<NodeSet>,
    /// Component index of every node of the graph (`None` outside the view).
    pub component_of: Vec<Option<usize>>,
    reach: Vec<u64>,
    direct: Vec<u64>,
}

impl Condensation {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Whether some node of component `k` has a path to component `l`.
    pub fn has_path(&self, k: usize, l: usize) -> bool {
        self.reach[k] & (1u64 << l) != 0
    }

    /// Component-graph edges: `(k, l)` whenever nodes of `k` reach `l`.
    pub fn dag_edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|k| (0..self.len()).filter(move |&l| self.has_path(k, l)).map(move |l| (k, l)))
            .collect()
    }

    /// Edges of the condensation proper (direct links between components).
    pub fn direct_edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|k| {
                (0..self.len())
                    .filter(move |&l| self.direct[k] & (1u64 << l) != 0)
                    .map(move |l| (k, l))
            })
            .collect()
    }

    /// Components no other component can reach.
    pub fn source_components(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&l| (0..self.len()).all(|k| k == l || !self.has_path(k, l)))
            .collect()
    }

    /// A topological order of the components, or `None` if the component
    /// graph has a cycle (which would be a bug).
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let k = self.len();
        let mut indeg = vec![0usize; k];
        for (_, l) in self.direct_edges() {
            indeg[l] += 1;
        }
        let mut ready: Vec<usize> = (0..k).filter(|&c| indeg[c] == 0).collect();
        ready.reverse();
        let mut order = Vec::with_capacity(k);
        while let Some(c) = ready.pop() {
            order.push(c);
            for l in (0..k).rev() {
                if self.direct[c] & (1u64 << l) != 0 {
                    indeg[l] -= 1;
                    if indeg[l] == 0 {
                        ready.push(l);
                    }
                }
            }
        }
        (order.len() == k).then_some(order)
    }
}

fn check_reduction_sets(
    g: &DiGraph,
    faulty: NodeSet,
    cut: NodeSet,
    f: usize,
) -> Result<(), GraphError> {
    g.check_set(faulty)?;
    g.check_set(cut)?;
    if !faulty.is_disjoint(cut) {
        return Err(GraphError::Precondition("F and F1 overlap".into()));
    }
    if faulty.len() > f || cut.len() > f {
        return Err(GraphError::Precondition(format!(
            "|F| = {} and |F1| = {} must both be at most f = {f}",
            faulty.len(),
            cut.len()
        )));
    }
    if (faulty | cut) == g.nodes() {
        return Err(GraphError::Precondition("F1 must be a proper subset of V - F".into()));
    }
    Ok(())
}

/// The reduced graph `G_{F,F1}`: nodes `V - F`, with every edge incident on
/// `faulty` and every edge leaving `cut` removed.
pub fn reduced_graph(g: &DiGraph, faulty: NodeSet, cut: NodeSet, f: usize) -> Result<SubGraph, GraphError> {
    check_reduction_sets(g, faulty, cut, f)?;
    Ok(reduced_unchecked(g, faulty, cut))
}

pub(crate) fn reduced_unchecked(g: &DiGraph, faulty: NodeSet, cut: NodeSet) -> SubGraph {
    let mut view = g.without(faulty);
    for v in cut {
        view.out[v.0] = NodeSet::EMPTY;
    }
    view
}

/// Node set of the source component of `G_{F,F1}`.
///
/// When several source components exist, the one with the smallest node
/// index among those disjoint from `cut` is returned. A node of `cut` has no
/// outgoing edges in the reduced graph, so it can only ever be a singleton
/// component, and some source component always avoids `cut`.
pub fn source_component(g: &DiGraph, faulty: NodeSet, cut: NodeSet, f: usize) -> Result<NodeSet, GraphError> {
    check_reduction_sets(g, faulty, cut, f)?;
    Ok(source_component_unchecked(g, faulty, cut))
}

pub(crate) fn source_component_unchecked(g: &DiGraph, faulty: NodeSet, cut: NodeSet) -> NodeSet {
    let sources = reduced_unchecked(g, faulty, cut).source_components();
    sources
        .iter()
        .copied()
        .find(|c| c.is_disjoint(cut))
        .unwrap_or(sources[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c3() -> DiGraph {
        DiGraph::with_names(
            vec!["a".into(), "b".into(), "c".into()],
            [(0, 1), (1, 2), (2, 0)],
        )
        .unwrap()
    }

    fn fig1() -> DiGraph {
        crate::generators::gen_clique_sink(4).unwrap()
    }

    fn set(g: &DiGraph, names: &[&str]) -> NodeSet {
        g.set_of(names).unwrap()
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(matches!(DiGraph::from_edges(2, [(0, 0)]), Err(GraphError::SelfLoop(_))));
        assert!(matches!(
            DiGraph::from_edges(2, [(0, 1), (0, 1)]),
            Err(GraphError::DuplicateEdge(..))
        ));
        assert!(matches!(DiGraph::from_edges(2, [(0, 5)]), Err(GraphError::OutOfRange(5, 2))));
        assert!(matches!(
            DiGraph::with_names(vec!["a".into(), "a".into()], []),
            Err(GraphError::DuplicateName(_))
        ));
    }

    #[test]
    fn incoming_neighbors_examples() {
        let g = fig1();
        assert_eq!(
            g.incoming_neighbors(set(&g, &["x"])).unwrap(),
            set(&g, &["v1", "v2", "v3", "v4"])
        );
        assert_eq!(g.incoming_neighbors(g.nodes()).unwrap(), NodeSet::EMPTY);
        let tc = crate::generators::gen_two_clique(2).unwrap();
        let k1 = set(&tc, &["u1", "u2", "u3", "u4", "u5", "u6", "u7"]);
        assert_eq!(tc.incoming_neighbors(k1).unwrap(), set(&tc, &["w4", "w5", "w6", "w7"]));
        assert!(g.incoming_neighbors(NodeSet::singleton(NodeId(9))).is_err());
    }

    #[test]
    fn scc_examples() {
        let g = c3();
        let c = g.scc_decomposition();
        assert_eq!(c.components, vec![g.nodes()]);

        let g = fig1();
        let c = g.scc_decomposition();
        assert_eq!(c.components, vec![set(&g, &["v1", "v2", "v3", "v4"]), set(&g, &["x"])]);
        assert_eq!(c.dag_edges(), vec![(0, 1)]);
        assert_eq!(c.source_components(), vec![0]);

        let g = DiGraph::from_edges(3, []).unwrap();
        let c = g.scc_decomposition();
        assert_eq!(c.len(), 3);
        assert!(c.dag_edges().is_empty());
    }

    #[test]
    fn reduced_graph_examples() {
        let g = c3();
        assert_eq!(reduced_graph(&g, NodeSet::EMPTY, NodeSet::EMPTY, 1).unwrap(), g.view());

        let r = reduced_graph(&g, set(&g, &["c"]), NodeSet::EMPTY, 1).unwrap();
        assert_eq!(r.nodes(), set(&g, &["a", "b"]));
        assert_eq!(r.edges().collect::<Vec<_>>(), vec![(NodeId(0), NodeId(1))]);

        let r = reduced_graph(&g, NodeSet::EMPTY, set(&g, &["a"]), 1).unwrap();
        assert_eq!(
            r.edges().collect::<Vec<_>>(),
            vec![(NodeId(1), NodeId(2)), (NodeId(2), NodeId(0))]
        );

        assert!(reduced_graph(&g, set(&g, &["a"]), set(&g, &["a"]), 1).is_err());
        assert!(reduced_graph(&g, set(&g, &["a", "b"]), NodeSet::EMPTY, 1).is_err());
    }

    #[test]
    fn source_component_examples() {
        let g = c3();
        assert_eq!(source_component(&g, NodeSet::EMPTY, NodeSet::EMPTY, 1).unwrap(), g.nodes());
        assert_eq!(
            source_component(&g, NodeSet::EMPTY, set(&g, &["a"]), 1).unwrap(),
            set(&g, &["b"])
        );
        let g = fig1();
        assert_eq!(
            source_component(&g, NodeSet::EMPTY, NodeSet::EMPTY, 1).unwrap(),
            set(&g, &["v1", "v2", "v3", "v4"])
        );
    }

    #[test]
    fn source_component_skips_cut_singletons() {
        // 0 has no in-edges, and as a cut node it loses its out-edge as well.
        let g = DiGraph::from_edges(3, [(0, 1), (1, 2), (2, 1)]).unwrap();
        let s = source_component(&g, NodeSet::EMPTY, NodeSet::singleton(NodeId(0)), 1).unwrap();
        assert_eq!(s, [1usize, 2].into_iter().collect());
    }

    #[test]
    fn strongly_connected_allows_outside_paths() {
        // 0 -> 2 -> 1 -> 0: {0, 1} is strongly connected through 2.
        let g = DiGraph::from_edges(3, [(0, 2), (2, 1), (1, 0)]).unwrap();
        let v = g.view();
        assert!(v.is_strongly_connected([0usize, 1].into_iter().collect()));
        assert!(!g.without(NodeSet::singleton(NodeId(2))).is_strongly_connected([0usize, 1].into_iter().collect()));
    }
}
