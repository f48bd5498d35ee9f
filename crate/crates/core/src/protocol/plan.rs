//! Iteration planning. Every plan is a pure function of the topology and
//! `f`, so all fault-free nodes derive identical plans without talking.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::condition::{
    bipartitions, check_degree_bounds, check_screened, check_theorem1, fault_sets, ConditionError, PartitionWitness,
    MAX_SCAN_NODES,
};
use crate::digraph::{source_component_unchecked, DiGraph, DisjointPaths, GraphError, NodeId, NodeSet};
use crate::relations::propagates_unchecked;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("the graph does not admit consensus with f = {f}; violating partition {desc}")]
    Condition {
        f: usize,
        witness: PartitionWitness,
        desc: String,
    },
    #[error("planning supports at most {MAX_SCAN_NODES} nodes, got {0}")]
    TooLarge(usize),
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("set construction failed: {0}")]
    Construction(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl PlanError {
    fn condition(g: &DiGraph, f: usize, witness: PartitionWitness) -> Self {
        PlanError::Condition {
            f,
            witness,
            desc: witness.describe(g),
        }
    }
}

impl From<ConditionError> for PlanError {
    fn from(e: ConditionError) -> Self {
        match e {
            ConditionError::TooLarge(n) | ConditionError::ExhaustiveTooLarge(n) | ConditionError::TooSmall(n) => {
                PlanError::TooLarge(n)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseKind {
    /// `f + 1` disjoint paths per receiver; sources send `t`.
    Propagate,
    /// One route between every ordered pair of `S`; members send `t`.
    Equality,
    /// One-edge routes from `N_k` to each `k` in `F`; senders send `v`.
    Adopt,
    /// One route from the root to every other node; the root sends `v`.
    Broadcast,
}

impl PhaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseKind::Propagate => "propagate",
            PhaseKind::Equality => "equality",
            PhaseKind::Adopt => "adopt",
            PhaseKind::Broadcast => "broadcast",
        }
    }

    /// Whether senders transmit `v` rather than `t`.
    pub fn sends_v(self) -> bool {
        matches!(self, PhaseKind::Adopt | PhaseKind::Broadcast)
    }
}

/// The routes of one phase, grouped by receiver (ascending). Route `r` is a
/// node sequence from its sender to its receiver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteBundle {
    pub kind: PhaseKind,
    nodes: Vec<u8>,
    offsets: Vec<u32>,
    groups: Vec<(NodeId, u32, u32)>,
    hops: usize,
}

impl RouteBundle {
    fn build(kind: PhaseKind, groups: Vec<(NodeId, Vec<Vec<NodeId>>)>) -> Self {
        let mut nodes = Vec::new();
        let mut offsets = vec![0u32];
        let mut ranges = Vec::with_capacity(groups.len());
        let mut hops = 0;
        for (receiver, routes) in groups {
            let start = offsets.len() as u32 - 1;
            for r in routes {
                debug_assert_eq!(r.last(), Some(&receiver));
                hops = hops.max(r.len() - 1);
                nodes.extend(r.iter().map(|v| v.0 as u8));
                offsets.push(nodes.len() as u32);
            }
            ranges.push((receiver, start, offsets.len() as u32 - 1));
        }
        RouteBundle {
            kind,
            nodes,
            offsets,
            groups: ranges,
            hops,
        }
    }

    pub fn empty(kind: PhaseKind) -> Self {
        Self::build(kind, Vec::new())
    }

    /// Number of routes.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Route `r` as raw node indices.
    #[inline]
    pub fn route(&self, r: usize) -> &[u8] {
        &self.nodes[self.offsets[r] as usize..self.offsets[r + 1] as usize]
    }

    pub fn route_ids(&self, r: usize) -> Vec<NodeId> {
        self.route(r).iter().map(|&v| NodeId(v as usize)).collect()
    }

    /// Length of the longest route, in edges.
    pub fn hops(&self) -> usize {
        self.hops
    }

    /// Rounds the phase occupies: one to send plus one per hop, or none for
    /// an empty phase.
    pub fn rounds(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            self.hops + 1
        }
    }

    /// Each receiver with the range of its route ids.
    pub fn groups(&self) -> impl Iterator<Item = (NodeId, Range<usize>)> + '_ {
        self.groups.iter().map(|&(v, s, e)| (v, s as usize..e as usize))
    }

    pub fn receivers(&self) -> NodeSet {
        self.groups.iter().map(|g| g.0).collect()
    }

    /// The first node of every route.
    pub fn senders(&self) -> NodeSet {
        (0..self.len()).map(|r| self.route(r)[0] as usize).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Case {
    /// Only `A` propagates to `B`; `S` lies inside `A`.
    One,
    /// Both sides propagate; `S` may straddle them.
    Two,
}

impl Case {
    pub fn number(self) -> u8 {
        match self {
            Case::One => 1,
            Case::Two => 2,
        }
    }
}

/// One INNER iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationPlan {
    pub faulty: NodeSet,
    pub a: NodeSet,
    pub b: NodeSet,
    pub case: Case,
    pub s: NodeSet,
    /// Phases in execution order: `[Equality(S), Propagate(S, V-F-S)]` in
    /// Case 1 and `[Propagate(A, S-A), Equality(S), Propagate(S, V-F-S)]` in
    /// Case 2. Empty bundles take no rounds.
    pub phases: Vec<Arc<RouteBundle>>,
    /// Step (j) routes, shared by every iteration of the same `F`.
    pub adopt: Arc<RouteBundle>,
}

impl IterationPlan {
    /// Nodes that copy `v` into `t` when the iteration starts.
    pub fn seeded(&self) -> NodeSet {
        match self.case {
            Case::One => self.s,
            Case::Two => self.a,
        }
    }

    /// Nodes that may overwrite `v` with a non-⊥ `t` after the last phase.
    pub fn updated(&self) -> NodeSet {
        match self.case {
            Case::One => (self.a | self.b) - self.s,
            Case::Two => (self.a | self.b) - (self.a & self.s),
        }
    }

    pub fn rounds(&self) -> usize {
        self.phases.iter().map(|p| p.rounds()).sum::<usize>() + self.adopt.rounds()
    }
}

/// All INNER iterations for one fault set.
#[derive(Clone, Debug)]
pub struct OuterPlan {
    pub faulty: NodeSet,
    pub iterations: Vec<IterationPlan>,
    /// `(k, N_k)` for every `k` in `F`.
    pub watchers: Vec<(NodeId, NodeSet)>,
}

#[derive(Clone, Debug)]
pub enum Schedule {
    /// `f = 0`: the root routes its input to everyone.
    Broadcast {
        root: NodeId,
        source: NodeSet,
        bundle: Arc<RouteBundle>,
    },
    /// `f > 0`: the full OUTER/INNER loop.
    Iterative(Vec<OuterPlan>),
}

/// Every plan the algorithm needs on one graph, built once and shared
/// across executions.
#[derive(Clone, Debug)]
pub struct PlanBook {
    g: DiGraph,
    f: usize,
    schedule: Schedule,
}

impl PlanBook {
    /// Plans every iteration. Fails with a witness if the graph does not
    /// satisfy the feasibility condition for `f`.
    pub fn new(g: &DiGraph, f: usize) -> Result<Self, PlanError> {
        if g.n() > MAX_SCAN_NODES {
            return Err(PlanError::TooLarge(g.n()));
        }
        let schedule = if f == 0 {
            let view = g.view();
            let sources = view.source_components();
            if sources.len() != 1 || view.reach_from(sources[0]) != g.nodes() {
                let v = check_theorem1(g, 0)?;
                let w = v.witness.ok_or_else(|| PlanError::Construction("no single reaching source".into()))?;
                return Err(PlanError::condition(g, 0, w));
            }
            let source = sources[0];
            let root = source.first().unwrap();
            let routes = g
                .nodes()
                .iter()
                .filter(|&j| j != root)
                .map(|j| Ok((j, vec![shortest_route(g, NodeSet::EMPTY, root, j)?])))
                .collect::<Result<Vec<_>, PlanError>>()?;
            Schedule::Broadcast {
                root,
                source,
                bundle: Arc::new(RouteBundle::build(PhaseKind::Broadcast, routes)),
            }
        } else {
            let screen = check_degree_bounds(g, f);
            if let (false, Some(w)) = (screen.passed, screen.witness) {
                return Err(PlanError::condition(g, f, w));
            }
            let outers: Vec<Result<OuterPlan, PlanError>> = fault_sets(g, f)
                .into_par_iter()
                .map(|faulty| Planner::new(g, f, faulty).and_then(|p| p.plan_all()))
                .collect();
            Schedule::Iterative(outers.into_iter().collect::<Result<_, _>>()?)
        };
        Ok(PlanBook {
            g: g.clone(),
            f,
            schedule,
        })
    }

    pub fn graph(&self) -> &DiGraph {
        &self.g
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// The OUTER iterations (empty for `f = 0`).
    pub fn outers(&self) -> &[OuterPlan] {
        match &self.schedule {
            Schedule::Iterative(o) => o,
            Schedule::Broadcast { .. } => &[],
        }
    }

    pub fn iteration_count(&self) -> usize {
        self.outers().iter().map(|o| o.iterations.len()).sum()
    }

    /// Length of every execution, in rounds.
    pub fn total_rounds(&self) -> usize {
        match &self.schedule {
            Schedule::Broadcast { bundle, .. } => bundle.rounds(),
            Schedule::Iterative(o) => o
                .iter()
                .flat_map(|o| o.iterations.iter())
                .map(|it| it.rounds())
                .sum(),
        }
    }
}

/// The OUTER loop fault sets: all subsets of size at most `f`, by size and
/// then lexicographically. Checks the feasibility condition first.
pub fn plan_outer(g: &DiGraph, f: usize) -> Result<Vec<NodeSet>, PlanError> {
    let v = check_screened(g, f)?;
    if let Some(w) = v.witness {
        return Err(PlanError::condition(g, f, w));
    }
    Ok(fault_sets(g, f))
}

fn check_partition(g: &DiGraph, f: usize, faulty: NodeSet, x: NodeSet, y: NodeSet) -> Result<(), PlanError> {
    g.check_set(faulty | x | y)?;
    if faulty.len() > f {
        return Err(PlanError::BadPartition(format!("|F| = {} exceeds f = {f}", faulty.len())));
    }
    if x.is_empty() || y.is_empty() || !x.is_disjoint(y) || (x | y) != g.nodes() - faulty {
        return Err(PlanError::BadPartition("sides must be non-empty and partition V - F".into()));
    }
    Ok(())
}

/// Orients a split `{X, Y}` of `V - F` into `(A, B, case)`: `A` is the side
/// that propagates, or in Case 2 the side holding the smallest node.
pub fn orient_partition(
    g: &DiGraph,
    f: usize,
    faulty: NodeSet,
    x: NodeSet,
    y: NodeSet,
) -> Result<(NodeSet, NodeSet, Case), PlanError> {
    check_partition(g, f, faulty, x, y)?;
    orient_unchecked(g, f, faulty, x, y)
}

fn orient_unchecked(
    g: &DiGraph,
    f: usize,
    faulty: NodeSet,
    x: NodeSet,
    y: NodeSet,
) -> Result<(NodeSet, NodeSet, Case), PlanError> {
    let xy = propagates_unchecked(g, x, y, faulty, f);
    let yx = propagates_unchecked(g, y, x, faulty, f);
    match (xy, yx) {
        (true, false) => Ok((x, y, Case::One)),
        (false, true) => Ok((y, x, Case::One)),
        (true, true) if x.first() < y.first() => Ok((x, y, Case::Two)),
        (true, true) => Ok((y, x, Case::Two)),
        (false, false) => Err(PlanError::condition(g, f, PartitionWitness::Propagate { a: x, b: y, faulty })),
    }
}

/// The intermediate sets of the Case 1 construction of `S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CaseOneConstruction {
    /// Smallest `a` in `A` with at most `f` disjoint `(B, a)`-paths.
    pub pivot: NodeId,
    /// Minimum vertex cut between `B` and the pivot.
    pub cut: NodeSet,
    /// Nodes that still reach the pivot once the cut is removed.
    pub a_prime: NodeSet,
    pub b_prime: NodeSet,
    /// Incoming neighbours of `A'` inside `B'`.
    pub cut_prime: NodeSet,
    /// Source component of `G_{F, cut_prime}`.
    pub s: NodeSet,
}

/// Case 1: `A` propagates to `B` but not conversely.
pub fn choose_s_case1(
    g: &DiGraph,
    f: usize,
    faulty: NodeSet,
    a: NodeSet,
    b: NodeSet,
) -> Result<CaseOneConstruction, PlanError> {
    check_partition(g, f, faulty, a, b)?;
    case_one_unchecked(g, f, faulty, a, b)
}

fn case_one_unchecked(
    g: &DiGraph,
    f: usize,
    faulty: NodeSet,
    a: NodeSet,
    b: NodeSet,
) -> Result<CaseOneConstruction, PlanError> {
    let universe = a | b;
    let allowed = g.nodes() - faulty;
    for pivot in a {
        let mut search = DisjointPaths::new(g.out_masks(), allowed, b, pivot);
        if search.run(f + 1) > f {
            continue;
        }
        let cut = search.min_cut();
        let a_prime = g.without(faulty | cut).reach_to(NodeSet::singleton(pivot));
        let b_prime = universe - a_prime;
        if !a_prime.is_subset(a) {
            return Err(PlanError::Construction(format!("A' = {a_prime:?} leaves A = {a:?}")));
        }
        let cut_prime = g.incoming_neighbors_unchecked(a_prime) & universe;
        if cut_prime.len() > f {
            return Err(PlanError::Construction(format!("{} incoming neighbours of A'", cut_prime.len())));
        }
        let s = source_component_unchecked(g, faulty, cut_prime);
        return Ok(CaseOneConstruction {
            pivot,
            cut,
            a_prime,
            b_prime,
            cut_prime,
            s,
        });
    }
    Err(PlanError::Construction("B propagates to A; not a Case 1 split".into()))
}

/// Case 2: `F1` is the `f` smallest nodes of `V - F`; returns `(F1, S)`.
pub fn choose_s_case2(g: &DiGraph, f: usize, faulty: NodeSet, a: NodeSet, b: NodeSet) -> Result<(NodeSet, NodeSet), PlanError> {
    check_partition(g, f, faulty, a, b)?;
    case_two_unchecked(g, f, faulty)
}

fn case_two_unchecked(g: &DiGraph, f: usize, faulty: NodeSet) -> Result<(NodeSet, NodeSet), PlanError> {
    let universe = g.nodes() - faulty;
    if f == 0 || universe.len() <= f {
        return Err(PlanError::Construction(format!("need 0 < f < |V - F|, got f = {f}")));
    }
    let cut = universe.smallest(f);
    Ok((cut, source_component_unchecked(g, faulty, cut)))
}

/// A shortest route from `from` to `to` in `G_{-faulty}`, each step taking
/// the smallest next hop that stays on a shortest route.
fn shortest_route(g: &DiGraph, faulty: NodeSet, from: NodeId, to: NodeId) -> Result<Vec<NodeId>, PlanError> {
    let dist = distances_to(g, faulty, to);
    route_by_distance(g, faulty, &dist, from, to)
}

fn distances_to(g: &DiGraph, faulty: NodeSet, to: NodeId) -> [u8; 64] {
    let mut dist = [u8::MAX; 64];
    dist[to.0] = 0;
    let mut frontier = NodeSet::singleton(to);
    let mut seen = frontier;
    let mut d = 0u8;
    while !frontier.is_empty() {
        d += 1;
        let mut next = NodeSet::EMPTY;
        for v in frontier {
            next |= g.in_neighbors(v);
        }
        next = next - seen - faulty;
        for v in next {
            dist[v.0] = d;
        }
        seen |= next;
        frontier = next;
    }
    dist
}

fn route_by_distance(
    g: &DiGraph,
    faulty: NodeSet,
    dist: &[u8; 64],
    from: NodeId,
    to: NodeId,
) -> Result<Vec<NodeId>, PlanError> {
    if dist[from.0] == u8::MAX {
        return Err(PlanError::Construction(format!("no route {from:?} -> {to:?} avoiding F")));
    }
    let mut route = vec![from];
    let mut cur = from;
    while cur != to {
        let want = dist[cur.0] - 1;
        cur = (g.out_neighbors(cur) - faulty)
            .iter()
            .find(|w| dist[w.0] == want)
            .expect("distance labels are consistent");
        route.push(cur);
    }
    Ok(route)
}

/// Plans a single iteration from scratch, without the caches the
/// [`PlanBook`] shares between iterations.
pub fn plan_iteration(g: &DiGraph, f: usize, faulty: NodeSet, x: NodeSet, y: NodeSet) -> Result<IterationPlan, PlanError> {
    check_partition(g, f, faulty, x, y)?;
    if f == 0 {
        return Err(PlanError::Construction("iterations are planned only for f > 0".into()));
    }
    Planner::new(g, f, faulty)?.plan(x, y)
}

/// Per-fault-set planning state with route caches.
struct Planner<'g> {
    g: &'g DiGraph,
    f: usize,
    faulty: NodeSet,
    adopt: Arc<RouteBundle>,
    watchers: Vec<(NodeId, NodeSet)>,
    case_two_s: Option<NodeSet>,
    equality: HashMap<NodeSet, Arc<RouteBundle>>,
    propagate: HashMap<(NodeSet, NodeSet), Arc<RouteBundle>>,
}

impl<'g> Planner<'g> {
    fn new(g: &'g DiGraph, f: usize, faulty: NodeSet) -> Result<Self, PlanError> {
        let mut watchers = Vec::new();
        let mut groups = Vec::new();
        for k in faulty {
            let watch = (g.in_neighbors(k) - faulty).smallest(f + 1);
            if watch.len() < f + 1 {
                return Err(PlanError::Construction(format!(
                    "{} has only {} incoming neighbours outside F",
                    g.name(k),
                    watch.len()
                )));
            }
            watchers.push((k, watch));
            groups.push((k, watch.iter().map(|n| vec![n, k]).collect()));
        }
        Ok(Planner {
            g,
            f,
            faulty,
            adopt: Arc::new(RouteBundle::build(PhaseKind::Adopt, groups)),
            watchers,
            case_two_s: None,
            equality: HashMap::new(),
            propagate: HashMap::new(),
        })
    }

    fn plan_all(mut self) -> Result<OuterPlan, PlanError> {
        let universe = self.g.nodes() - self.faulty;
        let iterations = bipartitions(universe)
            .map(|(x, y)| self.plan(x, y))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(OuterPlan {
            faulty: self.faulty,
            iterations,
            watchers: self.watchers,
        })
    }

    fn plan(&mut self, x: NodeSet, y: NodeSet) -> Result<IterationPlan, PlanError> {
        let (g, f, faulty) = (self.g, self.f, self.faulty);
        let (a, b, case) = orient_unchecked(g, f, faulty, x, y)?;
        let universe = a | b;
        let (s, phases) = match case {
            Case::One => {
                let s = case_one_unchecked(g, f, faulty, a, b)?.s;
                (s, vec![self.equality_bundle(s)?, self.propagate_bundle(s, universe - s)?])
            }
            Case::Two => {
                let s = match self.case_two_s {
                    Some(s) => s,
                    None => {
                        let s = case_two_unchecked(g, f, faulty)?.1;
                        self.case_two_s = Some(s);
                        s
                    }
                };
                (
                    s,
                    vec![
                        self.propagate_bundle(a, s - a)?,
                        self.equality_bundle(s)?,
                        self.propagate_bundle(s, universe - s)?,
                    ],
                )
            }
        };
        Ok(IterationPlan {
            faulty,
            a,
            b,
            case,
            s,
            phases,
            adopt: self.adopt.clone(),
        })
    }

    fn equality_bundle(&mut self, s: NodeSet) -> Result<Arc<RouteBundle>, PlanError> {
        if let Some(b) = self.equality.get(&s) {
            return Ok(b.clone());
        }
        let mut groups = Vec::with_capacity(s.len());
        if s.len() >= 2 {
            for j in s {
                let dist = distances_to(self.g, self.faulty, j);
                let routes = (s - NodeSet::singleton(j))
                    .iter()
                    .map(|i| route_by_distance(self.g, self.faulty, &dist, i, j))
                    .collect::<Result<Vec<_>, _>>()?;
                groups.push((j, routes));
            }
        }
        let bundle = Arc::new(RouteBundle::build(PhaseKind::Equality, groups));
        self.equality.insert(s, bundle.clone());
        Ok(bundle)
    }

    fn propagate_bundle(&mut self, from: NodeSet, to: NodeSet) -> Result<Arc<RouteBundle>, PlanError> {
        if let Some(b) = self.propagate.get(&(from, to)) {
            return Ok(b.clone());
        }
        let allowed = self.g.nodes() - self.faulty;
        let mut groups = Vec::with_capacity(to.len());
        for d in to {
            let mut search = DisjointPaths::new(self.g.out_masks(), allowed, from, d);
            if search.run(self.f + 1) <= self.f {
                return Err(PlanError::Construction(format!(
                    "{:?} does not propagate to {}",
                    from,
                    self.g.name(d)
                )));
            }
            groups.push((d, search.paths()));
        }
        let bundle = Arc::new(RouteBundle::build(PhaseKind::Propagate, groups));
        self.propagate.insert((from, to), bundle.clone());
        Ok(bundle)
    }
}

/// Re-checks an iteration plan against the raw relations: the Case 1 or
/// Case 2 requirements on `S`, and the shape of every route bundle.
pub fn verify_iteration(g: &DiGraph, f: usize, plan: &IterationPlan) -> Result<(), String> {
    let IterationPlan { faulty, a, b, s, .. } = *plan;
    let universe = g.nodes() - faulty;
    if a.is_empty() || b.is_empty() || !a.is_disjoint(b) || (a | b) != universe {
        return Err("A, B do not partition V - F".into());
    }
    if s.is_empty() {
        return Err("S is empty".into());
    }
    let within = match plan.case {
        Case::One => a,
        Case::Two => a | b,
    };
    if !s.is_subset(within) {
        return Err(format!("S = {s:?} is not inside {within:?}"));
    }
    if !g.without(faulty).is_strongly_connected(s) {
        return Err("S is not strongly connected in G_{-F}".into());
    }
    if !propagates_unchecked(g, s, universe - s, faulty, f) {
        return Err("S does not propagate to V - F - S".into());
    }
    if plan.case == Case::Two && !propagates_unchecked(g, a, s - a, faulty, f) {
        return Err("A does not propagate to S - A".into());
    }
    let expected: Vec<(PhaseKind, NodeSet, NodeSet)> = match plan.case {
        Case::One => vec![(PhaseKind::Equality, s, s), (PhaseKind::Propagate, s, universe - s)],
        Case::Two => vec![
            (PhaseKind::Propagate, a, s - a),
            (PhaseKind::Equality, s, s),
            (PhaseKind::Propagate, s, universe - s),
        ],
    };
    if plan.phases.len() != expected.len() {
        return Err("wrong number of phases".into());
    }
    for (bundle, (kind, from, to)) in plan.phases.iter().zip(expected) {
        if bundle.kind != kind {
            return Err(format!("expected a {} phase", kind.as_str()));
        }
        match kind {
            PhaseKind::Propagate => verify_propagate_bundle(g, f, faulty, bundle, from, to)?,
            _ => verify_equality_bundle(g, faulty, bundle, s)?,
        }
    }
    verify_adopt_bundle(g, f, faulty, &plan.adopt)
}

fn check_route(g: &DiGraph, faulty: NodeSet, route: &[NodeId]) -> Result<(), String> {
    let set: NodeSet = route.iter().copied().collect();
    if set.len() != route.len() {
        return Err(format!("route {route:?} repeats a node"));
    }
    if !set.is_disjoint(faulty) {
        return Err(format!("route {route:?} touches F"));
    }
    if route.windows(2).any(|w| !g.has_edge(w[0], w[1])) {
        return Err(format!("route {route:?} leaves the graph"));
    }
    Ok(())
}

fn verify_propagate_bundle(
    g: &DiGraph,
    f: usize,
    faulty: NodeSet,
    bundle: &RouteBundle,
    from: NodeSet,
    to: NodeSet,
) -> Result<(), String> {
    if bundle.receivers() != to || bundle.groups().count() != to.len() {
        return Err("propagate receivers differ from the target set".into());
    }
    for (d, range) in bundle.groups() {
        if range.len() != f + 1 {
            return Err(format!("{} routes into {}", range.len(), g.name(d)));
        }
        let mut used = NodeSet::EMPTY;
        for r in range {
            let route = bundle.route_ids(r);
            check_route(g, faulty, &route)?;
            if !from.contains(route[0]) || *route.last().unwrap() != d {
                return Err(format!("route {route:?} has the wrong ends"));
            }
            for &v in &route[..route.len() - 1] {
                if used.contains(v) {
                    return Err(format!("routes into {} share {}", g.name(d), g.name(v)));
                }
                used.insert(v);
            }
        }
    }
    Ok(())
}

fn verify_equality_bundle(g: &DiGraph, faulty: NodeSet, bundle: &RouteBundle, s: NodeSet) -> Result<(), String> {
    let want = if s.len() >= 2 { s } else { NodeSet::EMPTY };
    if bundle.receivers() != want {
        return Err("equality receivers differ from S".into());
    }
    for (j, range) in bundle.groups() {
        let mut senders = NodeSet::EMPTY;
        for r in range {
            let route = bundle.route_ids(r);
            check_route(g, faulty, &route)?;
            if *route.last().unwrap() != j {
                return Err("equality route ends elsewhere".into());
            }
            senders.insert(route[0]);
        }
        if senders != s - NodeSet::singleton(j) {
            return Err(format!("{} does not hear from every other member of S", g.name(j)));
        }
    }
    Ok(())
}

fn verify_adopt_bundle(g: &DiGraph, f: usize, faulty: NodeSet, bundle: &RouteBundle) -> Result<(), String> {
    if bundle.receivers() != faulty {
        return Err("adopt receivers differ from F".into());
    }
    for (k, range) in bundle.groups() {
        let mut senders = NodeSet::EMPTY;
        for r in range {
            let route = bundle.route_ids(r);
            if route.len() != 2 || route[1] != k || !g.has_edge(route[0], k) || faulty.contains(route[0]) {
                return Err(format!("bad adopt route {route:?}"));
            }
            senders.insert(route[0]);
        }
        if senders.len() != f + 1 {
            return Err(format!("{} watches {} neighbours", g.name(k), senders.len()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_clique_sink, gen_complete, gen_two_clique};

    fn c3() -> DiGraph {
        DiGraph::with_names(vec!["a".into(), "b".into(), "c".into()], [(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn outer_sets() {
        let g = gen_clique_sink(4).unwrap();
        let sets = plan_outer(&g, 1).unwrap();
        let names: Vec<Vec<String>> = sets.iter().map(|s| g.names_of(*s)).collect();
        assert_eq!(names, vec![vec![], vec!["v1"], vec!["v2"], vec!["v3"], vec!["v4"], vec!["x"]]);
        assert_eq!(plan_outer(&g, 0).unwrap(), vec![NodeSet::EMPTY]);
        assert_eq!(plan_outer(&gen_two_clique(2).unwrap(), 2).unwrap().len(), 106);
        assert!(matches!(plan_outer(&c3(), 1), Err(PlanError::Condition { .. })));
    }

    #[test]
    fn orientation_examples() {
        let g = gen_two_clique(2).unwrap();
        let f = g.set_of(&["u1", "u2"]).unwrap();
        let x = g.set_of(&["u3", "u4", "u5", "u6", "u7"]).unwrap();
        let y = g.nodes() - f - x;
        assert_eq!(orient_partition(&g, 2, f, x, y).unwrap(), (y, x, Case::One));

        let g = gen_clique_sink(4).unwrap();
        let x = g.set_of(&["v1", "v2", "v3", "v4"]).unwrap();
        let y = g.set_of(&["x"]).unwrap();
        assert_eq!(orient_partition(&g, 1, NodeSet::EMPTY, x, y).unwrap(), (x, y, Case::One));

        let g = gen_complete(4).unwrap();
        let x = g.set_of(&["v1", "v2"]).unwrap();
        let y = g.set_of(&["v3", "v4"]).unwrap();
        assert_eq!(orient_partition(&g, 1, NodeSet::EMPTY, y, x).unwrap(), (x, y, Case::Two));
    }

    #[test]
    fn case_one_on_fig1() {
        let g = gen_clique_sink(4).unwrap();
        let a = g.set_of(&["v1", "v2", "v3", "v4"]).unwrap();
        let b = g.set_of(&["x"]).unwrap();
        let c = choose_s_case1(&g, 1, NodeSet::EMPTY, a, b).unwrap();
        assert_eq!(c.s, a);
        assert!(c.s.is_disjoint(c.cut_prime));
    }

    #[test]
    fn case_one_on_two_clique() {
        let g = gen_two_clique(2).unwrap();
        let f = g.set_of(&["u1", "u2"]).unwrap();
        let b = g.set_of(&["u3", "u4", "u5", "u6", "u7"]).unwrap();
        let a = g.nodes() - f - b;
        let c = choose_s_case1(&g, 2, f, a, b).unwrap();
        assert!(c.s.is_subset(a) && c.s.len() >= 3);
        assert!(c.s.is_disjoint(c.cut_prime));
        assert!(c.a_prime.is_subset(a) && b.is_subset(c.b_prime));
        let plan = plan_iteration(&g, 2, f, a, b).unwrap();
        verify_iteration(&g, 2, &plan).unwrap();
    }

    #[test]
    fn case_two_on_complete_four() {
        let g = gen_complete(4).unwrap();
        let a = g.set_of(&["v1", "v2"]).unwrap();
        let b = g.set_of(&["v3", "v4"]).unwrap();
        let (cut, s) = choose_s_case2(&g, 1, NodeSet::EMPTY, a, b).unwrap();
        assert_eq!(cut, g.set_of(&["v1"]).unwrap());
        assert_eq!(s, g.set_of(&["v2", "v3", "v4"]).unwrap());
        assert!(propagates_unchecked(&g, a, s - a, NodeSet::EMPTY, 1));
        let plan = plan_iteration(&g, 1, NodeSet::EMPTY, a, b).unwrap();
        assert_eq!(plan.case, Case::Two);
        verify_iteration(&g, 1, &plan).unwrap();
    }

    #[test]
    fn case_two_on_two_clique() {
        let g = gen_two_clique(2).unwrap();
        let k1 = g.set_of(&["u1", "u2", "u3", "u4", "u5", "u6", "u7"]).unwrap();
        let (a, b, case) = orient_partition(&g, 2, NodeSet::EMPTY, k1, g.nodes() - k1).unwrap();
        if case == Case::Two {
            let (cut, s) = choose_s_case2(&g, 2, NodeSet::EMPTY, a, b).unwrap();
            assert_eq!(cut, g.set_of(&["u1", "u2"]).unwrap());
            assert!(s.is_disjoint(cut));
        }
        let plan = plan_iteration(&g, 2, NodeSet::EMPTY, k1, g.nodes() - k1).unwrap();
        verify_iteration(&g, 2, &plan).unwrap();
    }

    #[test]
    fn book_for_fig1() {
        let g = gen_clique_sink(4).unwrap();
        let book = PlanBook::new(&g, 1).unwrap();
        // F = {} splits 5 nodes 15 ways; each singleton F splits 4 nodes 7 ways.
        assert_eq!(book.iteration_count(), 15 + 5 * 7);
        for outer in book.outers() {
            for it in &outer.iterations {
                verify_iteration(&g, 1, it).unwrap();
            }
            for &(k, watch) in &outer.watchers {
                assert_eq!(watch.len(), 2);
                assert!(watch.is_subset(g.in_neighbors(k)));
            }
        }
        let again = PlanBook::new(&g, 1).unwrap();
        for (x, y) in book.outers().iter().zip(again.outers()) {
            assert_eq!(x.iterations, y.iterations);
        }
    }

    #[test]
    fn book_for_no_faults() {
        let g = c3();
        let book = PlanBook::new(&g, 0).unwrap();
        match book.schedule() {
            Schedule::Broadcast { root, bundle, .. } => {
                assert_eq!(*root, NodeId(0));
                assert_eq!(bundle.len(), 2);
                assert_eq!(bundle.route_ids(1), vec![NodeId(0), NodeId(1), NodeId(2)]);
            }
            _ => panic!("expected a broadcast schedule"),
        }
        let split = DiGraph::from_edges(3, [(0, 1)]).unwrap();
        assert!(matches!(PlanBook::new(&split, 0), Err(PlanError::Condition { .. })));
        assert!(matches!(PlanBook::new(&c3(), 1), Err(PlanError::Condition { .. })));
    }

    #[test]
    fn equality_routes_are_shortest_with_small_hops() {
        // 0 -> {1, 2} -> 3: both are shortest; 1 wins.
        let g = DiGraph::from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3), (3, 0)]).unwrap();
        assert_eq!(
            shortest_route(&g, NodeSet::EMPTY, NodeId(0), NodeId(3)).unwrap(),
            vec![NodeId(0), NodeId(1), NodeId(3)]
        );
        assert_eq!(
            shortest_route(&g, NodeSet::singleton(NodeId(1)), NodeId(0), NodeId(3)).unwrap(),
            vec![NodeId(0), NodeId(2), NodeId(3)]
        );
    }
}
