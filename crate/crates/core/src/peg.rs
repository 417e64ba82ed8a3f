//! Progressive edge growth started from a fixing plan.
//!
//! Variable nodes are visited in index order and grown one edge at a time up
//! to their target degree. A new edge `(c_i, v_j)` is allowed only when `c_i`
//! is out of reach of `v_j` within `T − 3` steps, so it closes no cycle
//! shorter than `T`; among the allowed checks the one with the most residual
//! degree wins. Cells the plan fixes to zero are never used.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::DesignSpec;
use crate::structure::FixingPlan;
use crate::tanner::{Cell, TannerGraph};

/// How ties between equally slack check nodes are broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    SmallestIndex,
    Seeded(u64),
}

/// One inserted edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PegStep {
    pub cell: Cell,
    /// Residual degree of the check node before the insertion.
    pub check_slack: usize,
    /// Residual degree of the variable node before the insertion.
    pub var_slack: usize,
    /// Length of the cycle the edge closes, `None` if it closes none.
    pub closes: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct PegRun {
    pub graph: TannerGraph,
    pub trace: Vec<PegStep>,
}

/// Working state: adjacency plus residual degrees.
#[derive(Debug, Clone)]
pub struct PegState {
    check_adj: Vec<Vec<usize>>,
    var_adj: Vec<Vec<usize>>,
    dv_slack: Vec<usize>,
    dc_slack: Vec<usize>,
}

impl PegState {
    fn new(spec: &DesignSpec, start: &[Cell]) -> Self {
        let (m, n) = (spec.m(), spec.n());
        let mut state = PegState {
            check_adj: vec![Vec::new(); m],
            var_adj: vec![Vec::new(); n],
            dv_slack: spec.dv().to_vec(),
            dc_slack: spec.dc().to_vec(),
        };
        for &cell in start {
            state.insert(cell);
        }
        state
    }

    fn insert(&mut self, cell: Cell) {
        self.check_adj[cell.row].push(cell.col);
        self.var_adj[cell.col].push(cell.row);
        self.dv_slack[cell.col] = self.dv_slack[cell.col].saturating_sub(1);
        self.dc_slack[cell.row] = self.dc_slack[cell.row].saturating_sub(1);
    }

    pub fn var_slack(&self, j: usize) -> usize {
        self.dv_slack[j]
    }

    pub fn check_slack(&self, i: usize) -> usize {
        self.dc_slack[i]
    }

    /// Distance in edges from `v_j` to each check node, explored no further
    /// than `limit`.
    fn check_distances(&self, j: usize, limit: usize) -> Vec<Option<usize>> {
        let m = self.check_adj.len();
        let mut check_dist = vec![None; m];
        let mut var_seen = vec![false; self.var_adj.len()];
        var_seen[j] = true;
        let mut queue = VecDeque::from([(j, 0usize)]);
        while let Some((v, d)) = queue.pop_front() {
            if d + 1 > limit {
                continue;
            }
            for &c in &self.var_adj[v] {
                if check_dist[c].is_some() {
                    continue;
                }
                check_dist[c] = Some(d + 1);
                if d + 2 > limit {
                    continue;
                }
                for &w in &self.check_adj[c] {
                    if !var_seen[w] {
                        var_seen[w] = true;
                        queue.push_back((w, d + 2));
                    }
                }
            }
        }
        check_dist
    }

    fn graph(&self) -> TannerGraph {
        let mut cells: Vec<Cell> = Vec::new();
        for (i, row) in self.check_adj.iter().enumerate() {
            cells.extend(row.iter().map(|&j| Cell::new(i, j)));
        }
        TannerGraph::new(self.check_adj.len(), self.var_adj.len(), &cells).expect("peg never repeats an edge")
    }
}

/// Runs the heuristic with smallest-index tie breaking.
pub fn modified_peg(spec: &DesignSpec, t: usize, plan: &FixingPlan) -> TannerGraph {
    modified_peg_with(spec, t, plan, TieBreak::SmallestIndex).graph
}

/// Runs the heuristic and records every inserted edge.
pub fn modified_peg_with(spec: &DesignSpec, t: usize, plan: &FixingPlan, ties: TieBreak) -> PegRun {
    let start: Vec<Cell> = plan.ones().iter().copied().collect();
    grow(spec, t, &start, |c| plan.zeros().contains(&c), None, ties)
}

/// Grows `start` (assumed free of cycles shorter than `t`) column by column.
/// Allowed checks are ranked by `preference` (row-major, higher first) when
/// given, then by residual degree.
pub fn grow(
    spec: &DesignSpec,
    t: usize,
    start: &[Cell],
    forbidden: impl Fn(Cell) -> bool,
    preference: Option<&[f64]>,
    ties: TieBreak,
) -> PegRun {
    let (m, n) = (spec.m(), spec.n());
    let mut state = PegState::new(spec, start);
    let mut rng = match ties {
        TieBreak::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        TieBreak::SmallestIndex => None,
    };
    let mut trace = Vec::new();
    // a check within t − 3 edges closes a cycle shorter than t
    let limit = t.saturating_sub(3);
    for j in 0..n {
        while state.dv_slack[j] > 0 {
            let dist = state.check_distances(j, limit);
            let mut best: Option<(f64, usize)> = None;
            let mut ties_at_best: Vec<usize> = Vec::new();
            for i in 0..m {
                let slack = state.dc_slack[i];
                if dist[i].is_some() || slack == 0 || forbidden(Cell::new(i, j)) {
                    continue;
                }
                let score = preference.map_or(0.0, |p| p[i * n + j]);
                let key = (score, slack);
                match best {
                    Some(b) if key.0 < b.0 || (key.0 == b.0 && key.1 < b.1) => continue,
                    Some(b) if key == b => {}
                    _ => {
                        best = Some(key);
                        ties_at_best.clear();
                    }
                }
                ties_at_best.push(i);
            }
            let pick = match rng.as_mut() {
                Some(rng) => ties_at_best.choose(rng).copied(),
                None => ties_at_best.first().copied(),
            };
            let Some(i) = pick else {
                break;
            };
            let cell = Cell::new(i, j);
            let closes = state.check_distances(j, usize::MAX)[i].map(|d| d + 1);
            trace.push(PegStep { cell, check_slack: state.dc_slack[i], var_slack: state.dv_slack[j], closes });
            state.insert(cell);
        }
    }
    PegRun { graph: state.graph(), trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{fixing_plan, FixingMode};
    use crate::tanner::{degree_deviation, girth};

    #[test]
    fn respects_girth_and_degrees() {
        let spec = DesignSpec::regular(10, 20, 3, 6, 8).unwrap();
        let plan = fixing_plan(&spec, FixingMode::Extended).unwrap();
        let run = modified_peg_with(&spec, 8, &plan, TieBreak::SmallestIndex);
        assert!(girth(&run.graph).map_or(true, |g| g >= 8));
        assert!((0..20).all(|j| run.graph.var_degree(j) <= 3));
        assert!((0..10).all(|i| run.graph.check_degree(i) <= 6));
        assert!(plan.ones().iter().all(|&c| run.graph.has_edge(c)));
        assert!(plan.zeros().iter().all(|&c| !run.graph.has_edge(c)));
        assert!(run.trace.iter().all(|s| s.closes.map_or(true, |l| l >= 8)));
    }

    #[test]
    fn unconstrained_start_fills_a_girth_six_code() {
        let spec = DesignSpec::regular(15, 30, 3, 6, 6).unwrap();
        let plan = fixing_plan(&spec, FixingMode::Extended).unwrap();
        let g = modified_peg(&spec, 6, &plan);
        assert!(girth(&g).map_or(true, |x| x >= 6));
        assert!(degree_deviation(&g, &spec).unwrap() <= 180);
    }

    #[test]
    fn seeded_runs_repeat() {
        let spec = DesignSpec::regular(10, 20, 3, 6, 6).unwrap();
        let a = modified_peg_with(&spec, 6, &FixingPlan::empty(), TieBreak::Seeded(7));
        let b = modified_peg_with(&spec, 6, &FixingPlan::empty(), TieBreak::Seeded(7));
        assert_eq!(a.graph, b.graph);
    }
}
