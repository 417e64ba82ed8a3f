mod common;

use common::{all_cycles, graph_strategy, weighted_strategy};
use girthforge::separation::{
    min_mean_cycle, separate_fractional, separate_integral, undirected_bellman_ford, BellmanFord, WeightedTanner,
};
use girthforge::tanner::{enumerate_short_cycles, Cell, Node, TannerGraph};
use proptest::prelude::*;

/// Mean of `−X` over a cycle, summed in sorted cell order.
fn mean_of(g: &WeightedTanner, cells: &[Cell]) -> f64 {
    -cells.iter().map(|&c| g.value(c)).sum::<f64>() / cells.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn min_mean_cycle_matches_exhaustive_search(g in weighted_strategy()) {
        let cycles = all_cycles(g.graph());
        let oracle = cycles.iter().map(|c| mean_of(&g, c)).fold(f64::INFINITY, f64::min);
        match min_mean_cycle(&g) {
            None => prop_assert!(cycles.is_empty()),
            Some(found) => {
                prop_assert!((found.mean - oracle).abs() <= 1e-9, "{} vs {}", found.mean, oracle);
                let cells = found.cycle.cells();
                prop_assert!(cycles.contains(&cells));
                prop_assert_eq!(mean_of(&g, &cells), oracle);
            }
        }
    }

    #[test]
    fn user_cuts_are_violated_short_cycles(g in weighted_strategy(), t in prop::sample::select(vec![6usize, 8, 10])) {
        let cuts = separate_fractional(&g, t, 50);
        prop_assert!(cuts.len() <= 50);
        let every = all_cycles(g.graph());
        for cut in &cuts {
            prop_assert!(every.contains(cut.cells()));
            prop_assert!(cut.cells().len() < t);
            let lhs: f64 = cut.cells().iter().map(|&c| g.value(c)).sum();
            prop_assert!(lhs > cut.rhs() as f64 + 1e-7);
        }
    }

    #[test]
    fn lazy_cuts_cover_every_short_cycle(g in graph_strategy(1..=6, 1..=8, 40), t in prop::sample::select(vec![6usize, 8, 10])) {
        let cuts = separate_integral(&g, t);
        let short = enumerate_short_cycles(&g, t);
        prop_assert_eq!(cuts.len(), short.len());
        for (cut, cycle) in cuts.iter().zip(short.iter()) {
            prop_assert_eq!(cut.cells(), &cycle.cells()[..]);
            prop_assert_eq!(cut.rhs(), cycle.len() - 1);
        }
    }

    #[test]
    fn bellman_ford_finds_negative_cycles(g in weighted_strategy(), shift in prop::sample::select(vec![0.25f64, 0.5, 0.75])) {
        // costs −X + shift are negative on some cycle iff a cycle has mean of X above shift
        let costs: Vec<f64> = g.values().iter().map(|&x| -x + shift).collect();
        let cycles = all_cycles(g.graph());
        let exists = cycles.iter().any(|c| c.iter().map(|&e| -g.value(e) + shift).sum::<f64>() < 0.0);
        let source = |v: usize| Node::Var(v);
        let mut seen_negative = false;
        for v in 0..g.graph().n() {
            if let BellmanFord::NegativeCycle(walk) = undirected_bellman_ford(&g, source(v), &costs) {
                prop_assert!(walk.cost < 0.0);
                seen_negative = true;
            }
        }
        for i in 0..g.graph().m() {
            if let BellmanFord::NegativeCycle(walk) = undirected_bellman_ford(&g, Node::Check(i), &costs) {
                prop_assert!(walk.cost < 0.0);
                seen_negative = true;
            }
        }
        // a walk found from some source proves a negative cycle; from every
        // source of its component the search must find one
        prop_assert_eq!(seen_negative, exists);
    }
}

#[test]
fn hexagon_at_full_value_is_cut() {
    let cells = [Cell::new(0, 0), Cell::new(0, 1), Cell::new(1, 1), Cell::new(1, 2), Cell::new(2, 2), Cell::new(2, 0)];
    let g = WeightedTanner::new(3, 3, &cells.map(|c| (c, 1.0))).unwrap();
    let cuts = separate_fractional(&g, 8, 50);
    assert_eq!(cuts.len(), 1);
    assert_eq!(cuts[0].rhs(), 5);
    assert!(separate_fractional(&g, 6, 50).is_empty());
    let tree = TannerGraph::new(3, 3, &cells[..5]).unwrap();
    assert!(separate_integral(&tree, 8).is_empty());
}
