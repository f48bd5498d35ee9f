//! Vertex-disjoint `(S, t)`-paths by unit-capacity max-flow on the
//! node-split graph.
//!
//! Every node `v` becomes `In(v) -> Out(v)` with capacity one; graph edges
//! become `Out(u) -> In(v)` with unbounded capacity; a virtual super-source
//! feeds `In(s)` for every source `s`. Flow is kept as per-node bitmasks, and
//! augmenting paths are found by BFS that always expands neighbours in
//! ascending index order, so the result depends on the graph alone.

use super::{DiGraph, GraphError, NodeId, NodeSet, MAX_NODES};

const NONE: u8 = u8::MAX;
const SRC: u8 = u8::MAX - 1;

/// A family of pairwise vertex-disjoint paths into one target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSet {
    pub target: NodeId,
    pub sources: NodeSet,
    pub excluded: NodeSet,
    /// Each path starts at a distinct source and ends at `target`.
    pub paths: Vec<Vec<NodeId>>,
    /// A separating vertex set of size `paths.len()`, present when fewer
    /// paths than requested exist.
    pub cut: Option<NodeSet>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Checks the structural invariants against `g`: edges exist, sources
    /// are declared, no excluded node is used, and paths only share the
    /// target.
    pub fn verify(&self, g: &DiGraph) -> Result<(), String> {
        let mut used = NodeSet::EMPTY;
        for p in &self.paths {
            let (first, last) = match (p.first(), p.last()) {
                (Some(a), Some(b)) => (*a, *b),
                _ => return Err("empty path".into()),
            };
            if !self.sources.contains(first) {
                return Err(format!("path starts at {first:?}, not a source"));
            }
            if last != self.target {
                return Err(format!("path ends at {last:?}, not the target"));
            }
            for w in p.windows(2) {
                if !g.has_edge(w[0], w[1]) {
                    return Err(format!("no edge {:?} -> {:?}", w[0], w[1]));
                }
            }
            for &v in &p[..p.len() - 1] {
                if self.excluded.contains(v) {
                    return Err(format!("path uses excluded node {v:?}"));
                }
                if used.contains(v) || v == self.target {
                    return Err(format!("node {v:?} shared between paths"));
                }
                used.insert(v);
            }
        }
        if let Some(cut) = self.cut {
            if cut.len() != self.paths.len() {
                return Err("cut size differs from path count".into());
            }
            let allowed = g.nodes() - self.excluded - cut;
            let view = g.without(g.nodes() - allowed - NodeSet::singleton(self.target));
            if view
                .reach_from(self.sources - cut)
                .contains(self.target)
            {
                return Err("cut does not separate sources from target".into());
            }
        }
        Ok(())
    }
}

/// Incremental vertex-disjoint path search with a fixed source set and
/// target.
pub(crate) struct DisjointPaths<'a> {
    out: &'a [NodeSet],
    allowed: NodeSet,
    sources: NodeSet,
    target: NodeId,
    starts: NodeSet,
    fin: [NodeSet; MAX_NODES],
    fout: [NodeSet; MAX_NODES],
    vis_in: NodeSet,
    vis_out: NodeSet,
}

impl<'a> DisjointPaths<'a> {
    /// `allowed` must contain `sources` and `target`; paths never leave it.
    pub(crate) fn new(out: &'a [NodeSet], allowed: NodeSet, sources: NodeSet, target: NodeId) -> Self {
        DisjointPaths {
            out,
            allowed,
            sources: sources & allowed,
            target,
            starts: NodeSet::EMPTY,
            fin: [NodeSet::EMPTY; MAX_NODES],
            fout: [NodeSet::EMPTY; MAX_NODES],
            vis_in: NodeSet::EMPTY,
            vis_out: NodeSet::EMPTY,
        }
    }

    pub(crate) fn flow(&self) -> usize {
        self.starts.len()
    }

    #[inline]
    fn used(&self, v: usize) -> bool {
        self.starts.contains(NodeId(v)) || !self.fin[v].is_empty()
    }

    /// Finds one more path. Returns `false` once the flow is maximum.
    pub(crate) fn augment(&mut self) -> bool {
        let n = self.out.len();
        // States: In(v) = v, Out(v) = n + v.
        let mut parent = [NONE; 2 * MAX_NODES];
        let mut queue = [0u8; 2 * MAX_NODES];
        let (mut head, mut tail) = (0usize, 0usize);
        self.vis_in = NodeSet::EMPTY;
        self.vis_out = NodeSet::EMPTY;
        let t = self.target.0;

        for a in self.sources {
            self.vis_in.insert(a);
            parent[a.0] = SRC;
            queue[tail] = a.0 as u8;
            tail += 1;
        }
        let mut found = false;
        'bfs: while head < tail {
            let s = queue[head] as usize;
            head += 1;
            if s < n {
                let v = s;
                if v == t {
                    found = true;
                    break 'bfs;
                }
                if !self.used(v) {
                    if !self.vis_out.contains(NodeId(v)) {
                        self.vis_out.insert(NodeId(v));
                        parent[n + v] = v as u8;
                        queue[tail] = (n + v) as u8;
                        tail += 1;
                    }
                } else {
                    for u in self.fin[v] - self.vis_out {
                        self.vis_out.insert(u);
                        parent[n + u.0] = v as u8;
                        queue[tail] = (n + u.0) as u8;
                        tail += 1;
                    }
                }
            } else {
                let v = s - n;
                for w in (self.out[v] & self.allowed) - self.vis_in {
                    self.vis_in.insert(w);
                    parent[w.0] = s as u8;
                    queue[tail] = w.0 as u8;
                    tail += 1;
                    if w.0 == t {
                        found = true;
                        break 'bfs;
                    }
                }
                if self.used(v) && !self.vis_in.contains(NodeId(v)) {
                    self.vis_in.insert(NodeId(v));
                    parent[v] = s as u8;
                    queue[tail] = v as u8;
                    tail += 1;
                }
            }
        }
        if !found {
            return false;
        }

        let mut cur = t;
        loop {
            let p = parent[cur];
            if p == SRC {
                self.starts.insert(NodeId(cur));
                break;
            }
            let p = p as usize;
            match (p < n, cur < n) {
                // Out(p) -> In(cur): push flow along p -> cur.
                (false, true) if p - n != cur => {
                    self.fout[p - n].insert(NodeId(cur));
                    self.fin[cur].insert(NodeId(p - n));
                }
                // In(p) -> Out(u): cancel flow u -> p.
                (true, false) if cur - n != p => {
                    let u = cur - n;
                    self.fout[u].remove(NodeId(p));
                    self.fin[p].remove(NodeId(u));
                }
                // Split edges carry no explicit state.
                _ => {}
            }
            cur = p;
        }
        true
    }

    /// Augments until `k` paths exist or no more can be found.
    pub(crate) fn run(&mut self, k: usize) -> usize {
        while self.flow() < k && self.augment() {}
        self.flow()
    }

    /// Minimum vertex cut; only meaningful after [`augment`](Self::augment)
    /// has returned `false`.
    pub(crate) fn min_cut(&self) -> NodeSet {
        self.vis_in - self.vis_out - NodeSet::singleton(self.target)
    }

    pub(crate) fn paths(&self) -> Vec<Vec<NodeId>> {
        let mut paths = Vec::with_capacity(self.starts.len());
        for a in self.starts {
            let mut p = vec![a];
            let mut cur = a;
            while cur != self.target {
                match self.fout[cur.0].first() {
                    Some(next) if p.len() <= MAX_NODES => {
                        p.push(next);
                        cur = next;
                    }
                    _ => unreachable!("flow path from {a:?} does not reach the target"),
                }
            }
            paths.push(p);
        }
        paths
    }
}

/// Number of disjoint paths, capped at `k`, without building them.
pub(crate) fn disjoint_path_count(
    g: &DiGraph,
    sources: NodeSet,
    target: NodeId,
    excluded: NodeSet,
    k: usize,
) -> usize {
    let allowed = g.nodes() - excluded;
    let direct = (g.in_neighbors(target) & sources & allowed).len();
    if direct >= k {
        return k;
    }
    DisjointPaths::new(g.out_masks(), allowed, sources, target).run(k)
}

/// Up to `k` pairwise vertex-disjoint paths from `sources` to `target`
/// avoiding `excluded`.
///
/// When fewer than `k` exist the result carries a minimum vertex cut, whose
/// size equals the number of paths returned.
pub fn max_disjoint_paths(
    g: &DiGraph,
    sources: NodeSet,
    target: NodeId,
    excluded: NodeSet,
    k: usize,
) -> Result<PathSet, GraphError> {
    g.check_set(sources)?;
    g.check_set(excluded)?;
    if target.0 >= g.n() {
        return Err(GraphError::OutOfRange(target.0, g.n()));
    }
    if sources.contains(target) || excluded.contains(target) {
        return Err(GraphError::Precondition(
            "target must not be a source or excluded".into(),
        ));
    }
    if !sources.is_disjoint(excluded) {
        return Err(GraphError::Precondition(
            "sources and excluded nodes overlap".into(),
        ));
    }
    let allowed = g.nodes() - excluded;
    let mut search = DisjointPaths::new(g.out_masks(), allowed, sources, target);
    let got = search.run(k);
    let cut = (got < k).then(|| search.min_cut());
    Ok(PathSet {
        target,
        sources,
        excluded,
        paths: search.paths(),
        cut,
    })
}
