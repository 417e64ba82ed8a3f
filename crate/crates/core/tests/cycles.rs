mod common;

use std::collections::BTreeSet;

use common::{all_cycles, girth_oracle, graph_strategy};
use girthforge::alist::{read_alist, write_alist};
use girthforge::tanner::{enumerate_short_cycles, girth, Cell, Cycle, Node, TannerGraph};
use proptest::prelude::*;

fn cell_sets(cycles: impl IntoIterator<Item = Cycle>) -> BTreeSet<Vec<Cell>> {
    cycles.into_iter().map(|c| c.cells()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn short_cycles_match_exhaustive_search(g in graph_strategy(1..=6, 1..=8, 45)) {
        let every = all_cycles(&g);
        for t in [4, 6, 8, 10, 2 * (g.m() + g.n()) + 2] {
            let expected: BTreeSet<Vec<Cell>> = every.iter().filter(|c| c.len() < t).cloned().collect();
            let found = enumerate_short_cycles(&g, t);
            prop_assert_eq!(found.len(), expected.len(), "t = {}", t);
            prop_assert_eq!(cell_sets(found), expected, "t = {}", t);
        }
    }

    #[test]
    fn girth_matches_edge_bfs(g in graph_strategy(1..=12, 1..=20, 20)) {
        prop_assert_eq!(girth(&g), girth_oracle(&g));
    }

    #[test]
    fn alist_round_trip(g in graph_strategy(1..=15, 1..=30, 15)) {
        let text = write_alist(&g);
        prop_assert_eq!(read_alist(&text).unwrap(), g);
    }

    #[test]
    fn cycle_canonical_form_ignores_rotation_and_direction(shift in 0usize..6, reverse: bool) {
        let base = [Node::Var(2), Node::Check(0), Node::Var(5), Node::Check(3), Node::Var(1), Node::Check(4)];
        let mut nodes: Vec<Node> = (0..6).map(|k| base[(k + shift) % 6]).collect();
        if reverse {
            nodes.reverse();
        }
        prop_assert_eq!(Cycle::from_nodes(&nodes).unwrap(), Cycle::from_nodes(&base).unwrap());
    }
}

#[test]
fn four_cycle_in_small_matrix() {
    // v1 c3 v4 c4 in 1-based labels
    let h: [&[u8]; 4] = [&[1, 1, 0, 0], &[0, 1, 1, 0], &[1, 0, 0, 1], &[1, 0, 0, 1]];
    let g = TannerGraph::from_dense(&h).unwrap();
    assert_eq!(girth(&g), Some(4));
    let cycles = enumerate_short_cycles(&g, 6);
    assert_eq!(cycles.len(), 1);
    let expected = vec![Cell::new(2, 0), Cell::new(2, 3), Cell::new(3, 0), Cell::new(3, 3)];
    assert_eq!(cycles.iter().next().unwrap().cells(), expected);
}

#[test]
fn malformed_alist_names_the_line() {
    let text = "4 2\n2 4\n1 1 1 x\n";
    let err = read_alist(text).unwrap_err().to_string();
    assert!(err.contains("line 3"), "{err}");
}
