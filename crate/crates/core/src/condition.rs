//! Feasibility checks: the propagate-form condition, the equivalent
//! arrow-form condition, a cheap degree screen, and a fuzzer that
//! cross-checks the two exact forms.
//!
//! Both exact checks scan every fault set `F` with `|F| <= f` in size-then-
//! lexicographic order. Scans run in parallel over `F`, but the reported
//! witness is always the first violation in that canonical order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::digraph::{DiGraph, NodeId, NodeSet};
use crate::generators::{gen_random, graph_from_code};
use crate::nodeset::subsets_up_to;
use crate::relations::{arrow_unchecked, propagates_unchecked};

/// Largest graph either exact check accepts.
pub const MAX_SCAN_NODES: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConditionError {
    #[error("exact checks support at most {MAX_SCAN_NODES} nodes, got {0}")]
    TooLarge(usize),
    #[error("exhaustive enumeration supports at most 4 nodes, got {0}")]
    ExhaustiveTooLarge(usize),
    #[error("need at least 2 nodes, got {0}")]
    TooSmall(usize),
}

/// A partition certifying that a condition fails.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionWitness {
    /// Neither `a` nor `b` propagates to the other in `V - faulty`.
    Propagate { a: NodeSet, b: NodeSet, faulty: NodeSet },
    /// Neither `l | c -> r` nor `r | c -> l`.
    Arrow { l: NodeSet, c: NodeSet, r: NodeSet, faulty: NodeSet },
}

impl PartitionWitness {
    /// Re-checks the witness against the relations directly.
    pub fn verify(&self, g: &DiGraph, f: usize) -> Result<(), String> {
        match *self {
            PartitionWitness::Propagate { a, b, faulty } => {
                if a.is_empty() || b.is_empty() || faulty.len() > f {
                    return Err("witness sets out of shape".into());
                }
                if (a | b | faulty) != g.nodes() || !a.is_disjoint(b) || !(a | b).is_disjoint(faulty) {
                    return Err("witness is not a partition".into());
                }
                if propagates_unchecked(g, a, b, faulty, f) || propagates_unchecked(g, b, a, faulty, f) {
                    return Err("one side propagates".into());
                }
                Ok(())
            }
            PartitionWitness::Arrow { l, c, r, faulty } => {
                if l.is_empty() || r.is_empty() || faulty.len() > f {
                    return Err("witness sets out of shape".into());
                }
                let parts = [l, c, r, faulty];
                let union = parts.iter().fold(NodeSet::EMPTY, |acc, s| acc | *s);
                if union != g.nodes() || parts.iter().map(|s| s.len()).sum::<usize>() != g.n() {
                    return Err("witness is not a partition".into());
                }
                if arrow_unchecked(g, l | c, r, f) || arrow_unchecked(g, r | c, l, f) {
                    return Err("one side absorbs the other".into());
                }
                Ok(())
            }
        }
    }

    pub fn to_json(&self, g: &DiGraph) -> Value {
        match *self {
            PartitionWitness::Propagate { a, b, faulty } => json!({
                "form": "propagate",
                "A": g.names_of(a),
                "B": g.names_of(b),
                "F": g.names_of(faulty),
            }),
            PartitionWitness::Arrow { l, c, r, faulty } => json!({
                "form": "arrow",
                "L": g.names_of(l),
                "C": g.names_of(c),
                "R": g.names_of(r),
                "F": g.names_of(faulty),
            }),
        }
    }

    pub fn describe(&self, g: &DiGraph) -> String {
        let fmt = |s: NodeSet| format!("{{{}}}", g.names_of(s).join(","));
        match *self {
            PartitionWitness::Propagate { a, b, faulty } => {
                format!("A={} B={} F={}", fmt(a), fmt(b), fmt(faulty))
            }
            PartitionWitness::Arrow { l, c, r, faulty } => {
                format!("L={} C={} R={} F={}", fmt(l), fmt(c), fmt(r), fmt(faulty))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Propagate,
    Arrow,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Propagate => "propagate",
            Method::Arrow => "arrow",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionVerdict {
    pub method: Method,
    pub f: usize,
    pub satisfied: bool,
    pub witness: Option<PartitionWitness>,
    /// Fault sets scanned, up to and including the one holding the witness.
    pub fault_sets: u64,
    /// Candidates evaluated in canonical order up to the witness: two-way
    /// partitions for [`Method::Propagate`], candidate sets `L` for
    /// [`Method::Arrow`].
    pub examined: u64,
}

impl ConditionVerdict {
    pub fn to_json(&self, g: &DiGraph) -> Value {
        json!({
            "method": self.method.as_str(),
            "f": self.f,
            "satisfied": self.satisfied,
            "witness": self.witness.map(|w| w.to_json(g)),
            "fault_sets": self.fault_sets,
            "examined": self.examined,
        })
    }
}

/// Unordered two-way splits `{X, Y}` of `universe`, both non-empty, with `X`
/// holding the smallest member. The `T`-th split puts the members of the
/// rest selected by the bits of `T` into `X`.
pub(crate) fn bipartitions(universe: NodeSet) -> impl Iterator<Item = (NodeSet, NodeSet)> {
    let m = universe.len();
    let (root, rest, count) = match universe.first() {
        Some(r) if m >= 2 => (NodeSet::singleton(r), universe - NodeSet::singleton(r), (1u64 << (m - 1)) - 1),
        _ => (NodeSet::EMPTY, NodeSet::EMPTY, 0),
    };
    (0..count).map(move |t| {
        let x = root | rest.select(t);
        (x, universe - x)
    })
}

pub(crate) fn fault_sets(g: &DiGraph, f: usize) -> Vec<NodeSet> {
    subsets_up_to(g.nodes(), f)
}

fn guard(g: &DiGraph) -> Result<(), ConditionError> {
    if g.n() > MAX_SCAN_NODES {
        Err(ConditionError::TooLarge(g.n()))
    } else {
        Ok(())
    }
}

/// Reduces per-fault-set scan results to the canonical first witness.
fn first_violation(
    method: Method,
    f: usize,
    scans: Vec<(u64, Option<PartitionWitness>)>,
) -> ConditionVerdict {
    let mut examined = 0;
    for (i, (count, witness)) in scans.iter().enumerate() {
        examined += count;
        if witness.is_some() {
            return ConditionVerdict {
                method,
                f,
                satisfied: false,
                witness: *witness,
                fault_sets: i as u64 + 1,
                examined,
            };
        }
    }
    ConditionVerdict {
        method,
        f,
        satisfied: true,
        witness: None,
        fault_sets: scans.len() as u64,
        examined,
    }
}

/// For every partition `A, B, F` of `V` with `A, B` non-empty and
/// `|F| <= f`, does `A` propagate to `B` or `B` to `A` in `V - F`?
pub fn check_theorem1(g: &DiGraph, f: usize) -> Result<ConditionVerdict, ConditionError> {
    guard(g)?;
    let scans = fault_sets(g, f)
        .into_par_iter()
        .map(|faulty| scan_propagate(g, f, faulty))
        .collect();
    Ok(first_violation(Method::Propagate, f, scans))
}

fn scan_propagate(g: &DiGraph, f: usize, faulty: NodeSet) -> (u64, Option<PartitionWitness>) {
    let mut count = 0;
    for (x, y) in bipartitions(g.nodes() - faulty) {
        count += 1;
        if !propagates_unchecked(g, x, y, faulty, f) && !propagates_unchecked(g, y, x, faulty, f) {
            return (count, Some(PartitionWitness::Propagate { a: x, b: y, faulty }));
        }
    }
    (count, None)
}

/// For every partition `L, C, R, F` of `V` with `L, R` non-empty and
/// `|F| <= f`, does `L | C -> R` or `R | C -> L` hold?
///
/// Since `L | C = V - F - R`, a violation is a pair of disjoint non-empty
/// sets `L, R` inside `V - F` each having at most `f` incoming neighbours in
/// the rest of `V - F`. Calling such sets weak, the scan marks every weak set,
/// closes the marks upward over supersets, and looks for a weak `L` whose
/// complement still contains a weak set.
pub fn check_condition1(g: &DiGraph, f: usize) -> Result<ConditionVerdict, ConditionError> {
    guard(g)?;
    let scans = fault_sets(g, f)
        .into_par_iter()
        .map(|faulty| scan_arrow(g, f, faulty))
        .collect();
    Ok(first_violation(Method::Arrow, f, scans))
}

fn scan_arrow(g: &DiGraph, f: usize, faulty: NodeSet) -> (u64, Option<PartitionWitness>) {
    let universe = g.nodes() - faulty;
    let m = universe.len();
    if m < 2 {
        return (0, None);
    }
    let members = universe.to_vec();
    let size = 1usize << m;
    let full = size - 1;
    let mut inn = vec![NodeSet::EMPTY; size];
    let mut weak = vec![false; size];
    for x in 1..size {
        let low = x.trailing_zeros() as usize;
        inn[x] = inn[x & (x - 1)] | (g.in_neighbors(members[low]) & universe);
        let set = universe.select(x as u64);
        weak[x] = (inn[x] - set).len() <= f;
    }
    drop(inn);
    let mut below = weak.clone();
    for bit in 0..m {
        let b = 1usize << bit;
        for x in 0..size {
            if x & b != 0 && below[x ^ b] {
                below[x] = true;
            }
        }
    }
    for l in 1..size {
        if weak[l] && below[full ^ l] {
            let comp = full ^ l;
            let r = (1..size)
                .find(|&r| r & !comp == 0 && weak[r])
                .expect("closure marks a weak subset");
            let examined = l as u64;
            let (l, r) = (universe.select(l as u64), universe.select(r as u64));
            return (
                examined,
                Some(PartitionWitness::Arrow {
                    l,
                    c: universe - l - r,
                    r,
                    faulty,
                }),
            );
        }
    }
    ((size - 1) as u64, None)
}

/// Why the degree screen failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeFailure {
    TooFewNodes { n: usize, need: usize },
    LowInDegree { node: NodeId, in_degree: usize, need: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeReport {
    pub passed: bool,
    pub failure: Option<DegreeFailure>,
    /// A propagate-form witness built from the failure, when `n >= 2`.
    pub witness: Option<PartitionWitness>,
}

/// Necessary conditions: `n >= 3f + 1`, and for `f > 0` every node has at
/// least `2f + 1` incoming neighbours.
pub fn check_degree_bounds(g: &DiGraph, f: usize) -> DegreeReport {
    let n = g.n();
    if n < 3 * f + 1 {
        // Split V - F into two sides of at most f nodes each; neither can
        // reach f + 1 disjoint paths from so few sources.
        let witness = (n >= 2).then(|| {
            let faulty = g.nodes().smallest(f.min(n - 2));
            let rest = g.nodes() - faulty;
            let a = rest.smallest(rest.len().div_ceil(2));
            PartitionWitness::Propagate { a, b: rest - a, faulty }
        });
        return DegreeReport {
            passed: false,
            failure: Some(DegreeFailure::TooFewNodes { n, need: 3 * f + 1 }),
            witness,
        };
    }
    if f > 0 {
        for v in g.nodes() {
            let inn = g.in_neighbors(v);
            if inn.len() < 2 * f + 1 {
                // Fault f of the in-neighbours; at most f remain to carry
                // paths into v, and {v} alone is too small to propagate.
                let faulty = inn.smallest(f);
                let a = NodeSet::singleton(v);
                return DegreeReport {
                    passed: false,
                    failure: Some(DegreeFailure::LowInDegree {
                        node: v,
                        in_degree: inn.len(),
                        need: 2 * f + 1,
                    }),
                    witness: Some(PartitionWitness::Propagate {
                        a,
                        b: g.nodes() - faulty - a,
                        faulty,
                    }),
                };
            }
        }
    }
    DegreeReport {
        passed: true,
        failure: None,
        witness: None,
    }
}

/// Degree screen first; the full propagate-form scan only if it passes.
pub fn check_screened(g: &DiGraph, f: usize) -> Result<ConditionVerdict, ConditionError> {
    let screen = check_degree_bounds(g, f);
    if let (false, Some(w)) = (screen.passed, screen.witness) {
        return Ok(ConditionVerdict {
            method: Method::Propagate,
            f,
            satisfied: false,
            witness: Some(w),
            fault_sets: 0,
            examined: 0,
        });
    }
    check_theorem1(g, f)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FuzzMode {
    /// Every digraph on `n` labelled nodes.
    Exhaustive,
    /// Seeded random digraphs with edge probability drawn from `[0.35, 1)`.
    Random { trials: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub n: usize,
    pub f: usize,
    pub graphs: u64,
    pub satisfied: u64,
    pub disagreements: u64,
    pub first_disagreement: Option<DiGraph>,
}

impl EquivalenceReport {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "f": self.f,
            "graphs": self.graphs,
            "satisfied": self.satisfied,
            "disagreements": self.disagreements,
            "first_disagreement": self.first_disagreement.as_ref().map(|g| serde_json::from_str::<Value>(&g.to_json()).unwrap()),
        })
    }
}

/// Runs both exact checks on a family of graphs and counts disagreements.
pub fn equivalence_fuzz(n: usize, f: usize, mode: FuzzMode) -> Result<EquivalenceReport, ConditionError> {
    if n < 2 {
        return Err(ConditionError::TooSmall(n));
    }
    if n > MAX_SCAN_NODES {
        return Err(ConditionError::TooLarge(n));
    }
    let graphs: Vec<DiGraph> = match mode {
        FuzzMode::Exhaustive => {
            if n > 4 {
                return Err(ConditionError::ExhaustiveTooLarge(n));
            }
            let bits = n * (n - 1);
            (0..1u64 << bits).map(|code| graph_from_code(n, code)).collect()
        }
        FuzzMode::Random { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..trials)
                .map(|_| {
                    let p = rng.gen_range(0.35..1.0);
                    gen_random(n, p, rng.gen()).expect("parameters are in range")
                })
                .collect()
        }
    };
    let outcomes: Vec<(bool, bool)> = graphs
        .par_iter()
        .map(|g| {
            let a = check_theorem1(g, f).expect("size checked").satisfied;
            let b = check_condition1(g, f).expect("size checked").satisfied;
            (a, b)
        })
        .collect();
    let first = outcomes.iter().position(|(a, b)| a != b);
    Ok(EquivalenceReport {
        n,
        f,
        graphs: graphs.len() as u64,
        satisfied: outcomes.iter().filter(|(a, _)| *a).count() as u64,
        disagreements: outcomes.iter().filter(|(a, b)| a != b).count() as u64,
        first_disagreement: first.map(|i| graphs[i].clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_clique_sink, gen_complete, gen_random, gen_two_clique};
    use proptest::prelude::*;

    fn c3() -> DiGraph {
        DiGraph::with_names(vec!["a".into(), "b".into(), "c".into()], [(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn bipartition_enumeration() {
        let parts: Vec<_> = bipartitions(NodeSet::full(3)).collect();
        assert_eq!(parts.len(), 3);
        assert!(parts.iter().all(|(x, y)| x.contains(NodeId(0)) && !y.is_empty()));
        assert_eq!(bipartitions(NodeSet::full(1)).count(), 0);
        assert_eq!(bipartitions(NodeSet::full(14)).count(), 8191);
    }

    #[test]
    fn fig1_feasible_only_for_one_fault() {
        let g = gen_clique_sink(4).unwrap();
        for check in [check_theorem1, check_condition1] {
            assert!(check(&g, 1).unwrap().satisfied);
            let v = check(&g, 2).unwrap();
            assert!(!v.satisfied);
            v.witness.unwrap().verify(&g, 2).unwrap();
        }
    }

    #[test]
    fn c3_violates_with_one_fault() {
        let g = c3();
        let v = check_theorem1(&g, 1).unwrap();
        assert!(!v.satisfied);
        let w = v.witness.unwrap();
        w.verify(&g, 1).unwrap();
        assert_eq!(
            w,
            PartitionWitness::Propagate {
                a: g.set_of(&["a"]).unwrap(),
                b: g.set_of(&["b", "c"]).unwrap(),
                faulty: NodeSet::EMPTY
            }
        );
        assert_eq!(v.examined, 1);
        let v = check_condition1(&g, 1).unwrap();
        assert!(!v.satisfied);
        v.witness.unwrap().verify(&g, 1).unwrap();
    }

    #[test]
    fn complete_four_tolerates_one() {
        let g = gen_complete(4).unwrap();
        assert!(check_theorem1(&g, 1).unwrap().satisfied);
        assert!(check_condition1(&g, 1).unwrap().satisfied);
    }

    #[test]
    fn two_clique_arrow_form() {
        let g = gen_two_clique(2).unwrap();
        let v = check_condition1(&g, 2).unwrap();
        assert!(v.satisfied);
        assert_eq!(v.fault_sets, 106);
    }

    #[test]
    fn degree_screen_examples() {
        let fig1 = gen_clique_sink(4).unwrap();
        assert!(check_degree_bounds(&fig1, 1).passed);
        let r = check_degree_bounds(&c3(), 1);
        assert_eq!(r.failure, Some(DegreeFailure::TooFewNodes { n: 3, need: 4 }));
        r.witness.unwrap().verify(&c3(), 1).unwrap();
        assert!(check_degree_bounds(&gen_two_clique(2).unwrap(), 2).passed);
    }

    #[test]
    fn clique_sink_pair_with_no_faults() {
        let g = gen_clique_sink(2).unwrap();
        assert!(check_theorem1(&g, 0).unwrap().satisfied);
    }

    #[test]
    fn exhaustive_small_agreement() {
        let r = equivalence_fuzz(3, 1, FuzzMode::Exhaustive).unwrap();
        assert_eq!(r.graphs, 64);
        assert_eq!(r.disagreements, 0);
        assert_eq!(r.satisfied, 0);
        assert!(equivalence_fuzz(5, 1, FuzzMode::Exhaustive).is_err());
    }

    /// Brute force over every labelling of nodes as L, C, R or F.
    fn arrow_form_oracle(g: &DiGraph, f: usize) -> bool {
        let n = g.n();
        for code in 0..4u64.pow(n as u32) {
            let mut parts = [NodeSet::EMPTY; 4];
            let mut c = code;
            for i in 0..n {
                parts[(c % 4) as usize].insert(NodeId(i));
                c /= 4;
            }
            let [l, mid, r, faulty] = parts;
            if l.is_empty() || r.is_empty() || faulty.len() > f {
                continue;
            }
            if !arrow_unchecked(g, l | mid, r, f) && !arrow_unchecked(g, r | mid, l, f) {
                return false;
            }
        }
        true
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn arrow_scan_matches_partition_oracle(n in 2usize..6, p in 0.3f64..1.0, seed in any::<u64>(), f in 0usize..2) {
            let g = gen_random(n, p, seed).unwrap();
            prop_assert_eq!(check_condition1(&g, f).unwrap().satisfied, arrow_form_oracle(&g, f));
        }

        #[test]
        fn no_fault_condition_is_single_reaching_source(n in 2usize..8, p in 0.0f64..0.6, seed in any::<u64>()) {
            let g = gen_random(n, p, seed).unwrap();
            let sources = g.view().source_components();
            let expected = sources.len() == 1 && g.view().reach_from(sources[0]) == g.nodes();
            prop_assert_eq!(check_theorem1(&g, 0).unwrap().satisfied, expected);
        }

        #[test]
        fn violations_persist_for_larger_f(n in 2usize..8, p in 0.3f64..1.0, seed in any::<u64>(), f in 0usize..2) {
            let g = gen_random(n, p, seed).unwrap();
            let v = check_theorem1(&g, f).unwrap();
            if let Some(w) = v.witness {
                prop_assert!(w.verify(&g, f + 1).is_ok());
                prop_assert!(!check_theorem1(&g, f + 1).unwrap().satisfied);
            }
        }

        #[test]
        fn witnesses_reverify(n in 2usize..8, p in 0.3f64..1.0, seed in any::<u64>(), f in 0usize..3) {
            let g = gen_random(n, p, seed).unwrap();
            for v in [check_theorem1(&g, f).unwrap(), check_condition1(&g, f).unwrap()] {
                match v.witness {
                    Some(w) => prop_assert!(w.verify(&g, f).is_ok()),
                    None => prop_assert!(v.satisfied),
                }
            }
            let screen = check_degree_bounds(&g, f);
            if let Some(w) = screen.witness {
                prop_assert!(w.verify(&g, f).is_ok());
            }
            if !screen.passed {
                prop_assert!(!check_theorem1(&g, f).unwrap().satisfied);
            }
        }
    }
}
