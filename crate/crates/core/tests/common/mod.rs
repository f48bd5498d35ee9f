#![allow(dead_code)]

use std::collections::HashMap;

use bcdg::digraph::DiGraph;
use bcdg::protocol::Bit;
use bcdg::{NodeId, NodeSet};

/// Maximum number of vertex-disjoint `(sources, target)`-paths avoiding
/// `excluded`, by listing every simple path and searching for the largest
/// pairwise disjoint family. Only for tiny graphs.
pub fn brute_force_disjoint(g: &DiGraph, sources: NodeSet, target: NodeId, excluded: NodeSet) -> usize {
    // A path through a second source can be cut short at that source, so
    // only paths whose sole source is their first node are needed.
    let mut masks: Vec<u64> = Vec::new();
    for s in sources {
        let mut stack = vec![(s, 1u64 << s.0)];
        while let Some((v, used)) = stack.pop() {
            for w in g.out_neighbors(v) {
                if w == target {
                    masks.push(used);
                } else if !excluded.contains(w) && !sources.contains(w) && used >> w.0 & 1 == 0 {
                    stack.push((w, used | 1 << w.0));
                }
            }
        }
    }
    masks.sort_unstable();
    masks.dedup();
    let mut memo = HashMap::new();
    best_packing(&masks, 0, 0, &mut memo)
}

fn best_packing(masks: &[u64], i: usize, used: u64, memo: &mut HashMap<(usize, u64), usize>) -> usize {
    if i == masks.len() {
        return 0;
    }
    if let Some(&v) = memo.get(&(i, used)) {
        return v;
    }
    let mut best = best_packing(masks, i + 1, used, memo);
    if masks[i] & used == 0 {
        best = best.max(1 + best_packing(masks, i + 1, used | masks[i], memo));
    }
    memo.insert((i, used), best);
    best
}

/// Input vector from a string of `0`/`1`.
pub fn bits(s: &str) -> Vec<Bit> {
    s.chars().map(|c| Bit::from(c == '1')).collect()
}

/// The `n` low bits of `code`, node 0 first.
pub fn bits_of(code: u64, n: usize) -> Vec<Bit> {
    (0..n).map(|i| Bit::from(code >> i & 1 == 1)).collect()
}

pub fn c3() -> DiGraph {
    DiGraph::with_names(vec!["a".into(), "b".into(), "c".into()], [(0, 1), (1, 2), (2, 0)]).unwrap()
}
