mod common;

use bcdg::digraph::max_disjoint_paths;
use bcdg::generators::gen_random;
use bcdg::{NodeId, NodeSet};
use common::brute_force_disjoint;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn flow_matches_brute_force(n in 2usize..8, p in 0.1f64..1.0, seed in any::<u64>(), labels in any::<u64>(), t in 0usize..7) {
        let g = gen_random(n, p, seed).unwrap();
        let target = NodeId(t % n);
        // Base-3 labels: 0 -> source, 1 -> excluded, 2 -> free.
        let (mut sources, mut excluded) = (NodeSet::EMPTY, NodeSet::EMPTY);
        let mut code = labels;
        for v in g.nodes() {
            match code % 3 {
                _ if v == target => {}
                0 => sources.insert(v),
                1 => excluded.insert(v),
                _ => {}
            }
            code /= 3;
        }
        let ps = max_disjoint_paths(&g, sources, target, excluded, n).unwrap();
        prop_assert_eq!(ps.len(), brute_force_disjoint(&g, sources, target, excluded));
        prop_assert!(ps.verify(&g).is_ok());
        if let Some(cut) = ps.cut {
            prop_assert_eq!(cut.len(), ps.len());
            prop_assert!(!cut.contains(target) && cut.is_disjoint(excluded));
        }
    }
}

#[test]
fn oracle_sanity() {
    // Two sources straight into the target, one more through a middle node.
    let g = bcdg::DiGraph::from_edges(5, [(0, 4), (1, 4), (2, 3), (3, 4)]).unwrap();
    let all = NodeSet::from_bits(0b111);
    assert_eq!(brute_force_disjoint(&g, all, NodeId(4), NodeSet::EMPTY), 3);
    assert_eq!(brute_force_disjoint(&g, all, NodeId(4), NodeSet::from_bits(0b1000)), 2);
    assert_eq!(brute_force_disjoint(&g, NodeSet::EMPTY, NodeId(4), NodeSet::EMPTY), 0);
}
