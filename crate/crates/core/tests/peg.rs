mod common;

use common::girth_oracle;
use girthforge::model::DesignSpec;
use girthforge::peg::{modified_peg_with, TieBreak};
use girthforge::structure::{fixing_plan, FixingMode, FixingPlan};
use girthforge::tanner::degree_deviation;
use proptest::prelude::*;

/// `(m, n, J, K)` with `nJ = mK`.
fn regular_dims() -> impl Strategy<Value = (usize, usize, usize, usize)> {
    (2usize..=4, 2usize..=3, 4usize..=16).prop_map(|(j, mult, m)| {
        let k = j * mult;
        (m, m * mult, j, k)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn grown_graphs_keep_the_girth(
        (m, n, j, k) in regular_dims(),
        t in prop::sample::select(vec![4usize, 6, 8, 10]),
        plan_kind in 0usize..3,
        seed in proptest::option::of(any::<u64>()),
    ) {
        let spec = DesignSpec::regular(m, n, j, k, t).unwrap();
        let plan = match plan_kind {
            0 => FixingPlan::empty(),
            1 => fixing_plan(&spec, FixingMode::Basic).unwrap(),
            _ => fixing_plan(&spec, FixingMode::Extended).unwrap(),
        };
        let ties = seed.map_or(TieBreak::SmallestIndex, TieBreak::Seeded);
        let run = modified_peg_with(&spec, t, &plan, ties);
        let g = &run.graph;
        prop_assert!(girth_oracle(g).map_or(true, |l| l >= t));
        prop_assert!((0..n).all(|c| g.var_degree(c) <= j));
        prop_assert!((0..m).all(|r| g.check_degree(r) <= k));
        prop_assert!(plan.ones().iter().all(|&c| g.has_edge(c)));
        prop_assert!(plan.zeros().iter().all(|&c| !g.has_edge(c)));
        // growth only ever lowers the deviation of the starting graph
        let start = degree_deviation(&plan.graph(m, n), &spec).unwrap();
        let end = degree_deviation(g, &spec).unwrap();
        prop_assert_eq!(start - end, 2 * run.trace.len() as u64);
        for step in &run.trace {
            prop_assert!(step.closes.map_or(true, |l| l >= t));
            prop_assert!(step.check_slack > 0 && step.var_slack > 0);
        }
        prop_assert_eq!(g.edge_count(), plan.ones().len() + run.trace.len());
    }

    #[test]
    fn seeded_growth_is_reproducible((m, n, j, k) in regular_dims(), seed in any::<u64>()) {
        let spec = DesignSpec::regular(m, n, j, k, 6).unwrap();
        let plan = FixingPlan::empty();
        let a = modified_peg_with(&spec, 6, &plan, TieBreak::Seeded(seed));
        let b = modified_peg_with(&spec, 6, &plan, TieBreak::Seeded(seed));
        prop_assert_eq!(a.graph, b.graph);
        prop_assert_eq!(a.trace, b.trace);
    }
}

#[test]
fn girth_four_target_fills_every_slot() {
    // no cycle constraint: the greedy choice always completes a regular code
    let spec = DesignSpec::regular(10, 20, 3, 6, 4).unwrap();
    let run = modified_peg_with(&spec, 4, &FixingPlan::empty(), TieBreak::SmallestIndex);
    assert_eq!(degree_deviation(&run.graph, &spec).unwrap(), 0);
}
