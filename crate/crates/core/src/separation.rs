//! Cycle-breaking cut separation.
//!
//! Integral points: every cycle shorter than `T` in the support yields a lazy
//! cut. Fractional points: a minimum mean cycle search on costs `−X`, driven
//! by a Bellman-Ford that never walks straight back along the edge it arrived
//! on; the cycles met on the way become user cuts when short and violated.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{Cut, CutOrigin};
use crate::tanner::{enumerate_short_cycles, Cell, Cycle, GraphError, Node, TannerGraph};

/// Feasibility tolerance for violation tests.
pub const FEAS_TOL: f64 = 1e-7;
/// Values at or below this are outside the separation support.
pub const SUPPORT_TOL: f64 = 1e-9;
/// Relaxations must improve a label by more than this.
const RELAX_TOL: f64 = 1e-12;
/// Steps granted to the exhaustive fallback search.
const DFS_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeparationError {
    #[error("value {value} at {cell} is outside [0,1]")]
    ValueOutOfRange { cell: Cell, value: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Support graph of a fractional point with its values as edge weights.
#[derive(Debug, Clone)]
pub struct WeightedTanner {
    graph: TannerGraph,
    /// Value of each edge, parallel to `edges`.
    values: Vec<f64>,
    edges: Vec<Cell>,
    /// Flat adjacency (checks `0..m`, variables `m..m+n`): `(neighbour, edge)`.
    adj: Vec<Vec<(usize, usize)>>,
}

impl WeightedTanner {
    /// Builds the support of `values`; entries at or below [`SUPPORT_TOL`]
    /// are dropped, values above one are rejected.
    pub fn new(m: usize, n: usize, values: &[(Cell, f64)]) -> Result<Self, SeparationError> {
        let mut kept: Vec<(Cell, f64)> = Vec::new();
        for &(cell, x) in values {
            if !(x <= 1.0 + FEAS_TOL) || x < -FEAS_TOL {
                return Err(SeparationError::ValueOutOfRange { cell, value: x.to_string() });
            }
            if x > SUPPORT_TOL {
                kept.push((cell, x.min(1.0)));
            }
        }
        kept.sort_by_key(|&(c, _)| c);
        let edges: Vec<Cell> = kept.iter().map(|&(c, _)| c).collect();
        let graph = TannerGraph::new(m, n, &edges)?;
        let mut adj = vec![Vec::new(); m + n];
        for (e, c) in edges.iter().enumerate() {
            adj[c.row].push((m + c.col, e));
            adj[m + c.col].push((c.row, e));
        }
        Ok(WeightedTanner { graph, values: kept.iter().map(|&(_, x)| x).collect(), edges, adj })
    }

    /// Dense row-major point over an `m × n` matrix.
    pub fn from_dense(m: usize, n: usize, x: &[f64]) -> Result<Self, SeparationError> {
        let values: Vec<(Cell, f64)> =
            (0..m * n).filter(|&k| x[k] > SUPPORT_TOL).map(|k| (Cell::new(k / n, k % n), x[k])).collect();
        Self::new(m, n, &values)
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    pub fn edges(&self) -> &[Cell] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: Cell) -> f64 {
        self.edges.binary_search(&cell).map_or(0.0, |e| self.values[e])
    }

    fn node_count(&self) -> usize {
        self.adj.len()
    }

    fn node(&self, flat: usize) -> Node {
        let m = self.graph.m();
        if flat < m {
            Node::Check(flat)
        } else {
            Node::Var(flat - m)
        }
    }

    /// `Σ X` over the cells of `cycle`, summed in sorted cell order.
    pub fn cycle_value(&self, cycle: &Cycle) -> f64 {
        cycle.cells().iter().map(|&c| self.value(c)).sum()
    }
}

/// Lazy cuts for an integral point given by its support.
pub fn separate_integral(support: &TannerGraph, t: usize) -> Vec<Cut> {
    enumerate_short_cycles(support, t).iter().map(|c| Cut::from_cycle(c, CutOrigin::Lazy)).collect()
}

/// A closed non-backtracking walk, as flat nodes without the repeated start.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedWalk {
    pub nodes: Vec<Node>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BellmanFord {
    /// Shortest walk cost to each node (`None` where unreachable); the source
    /// carries 0.
    Labels(Vec<Option<f64>>),
    NegativeCycle(ClosedWalk),
}

/// Bellman-Ford over arc states from `source`: the label of arc `u→w` is the
/// cheapest walk ending with that arc, and `w→z` may only extend it when
/// `z ≠ u`. `costs` is parallel to `g.edges()`.
pub fn undirected_bellman_ford(g: &WeightedTanner, source: Node, costs: &[f64]) -> BellmanFord {
    let m = g.graph.m();
    let src = match source {
        Node::Check(i) => i,
        Node::Var(j) => m + j,
    };
    // arc 2e goes check→var, arc 2e+1 var→check
    let arcs = 2 * g.edges.len();
    let head = |a: usize| {
        let c = g.edges[a / 2];
        if a % 2 == 0 {
            m + c.col
        } else {
            c.row
        }
    };
    let arc_from = |u: usize, e: usize| if u < m { 2 * e } else { 2 * e + 1 };
    let mut dist = vec![f64::INFINITY; arcs];
    let mut pred = vec![usize::MAX; arcs];
    let mut queued = vec![false; arcs];
    let mut queue: Vec<usize> = Vec::new();
    for &(_, e) in &g.adj[src] {
        let a = arc_from(src, e);
        dist[a] = costs[e];
        queued[a] = true;
        queue.push(a);
    }
    for _pass in 0..=arcs {
        if queue.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for a in queue.drain(..) {
            queued[a] = false;
            let w = head(a);
            let back = a / 2;
            for &(_, e) in &g.adj[w] {
                if e == back {
                    continue;
                }
                let b = arc_from(w, e);
                let cand = dist[a] + costs[e];
                if cand < dist[b] - RELAX_TOL {
                    dist[b] = cand;
                    pred[b] = a;
                    if !queued[b] {
                        queued[b] = true;
                        next.push(b);
                    }
                }
            }
        }
        queue = next;
        if let Some(walk) = predecessor_cycle(g, &pred, costs, &head) {
            return BellmanFord::NegativeCycle(walk);
        }
    }
    if !queue.is_empty() {
        // still relaxing after |arcs| passes: some cycle must show up
        if let Some(walk) = predecessor_cycle(g, &pred, costs, &head) {
            return BellmanFord::NegativeCycle(walk);
        }
    }
    let mut labels = vec![None; g.node_count()];
    labels[src] = Some(0.0);
    for a in 0..arcs {
        if dist[a].is_finite() {
            let w = head(a);
            labels[w] = Some(labels[w].map_or(dist[a], |d: f64| d.min(dist[a])));
        }
    }
    BellmanFord::Labels(labels)
}

/// Finds a cycle in the predecessor graph over arcs, which has negative cost
/// whenever it exists.
fn predecessor_cycle(g: &WeightedTanner, pred: &[usize], costs: &[f64], head: &impl Fn(usize) -> usize) -> Option<ClosedWalk> {
    let arcs = pred.len();
    // 0 unvisited, 1 on the current chain, 2 finished
    let mut state = vec![0u8; arcs];
    for start in 0..arcs {
        if state[start] != 0 || pred[start] == usize::MAX {
            continue;
        }
        let mut chain = Vec::new();
        let mut a = start;
        while a != usize::MAX && state[a] == 0 {
            state[a] = 1;
            chain.push(a);
            a = pred[a];
        }
        if a != usize::MAX && state[a] == 1 {
            let pos = chain.iter().position(|&x| x == a).unwrap();
            // chain runs backwards along predecessors
            let mut cyc: Vec<usize> = chain[pos..].to_vec();
            cyc.reverse();
            let cost = cyc.iter().map(|&x| costs[x / 2]).sum();
            let nodes = cyc.iter().map(|&x| g.node(head(x))).collect();
            for &x in &chain {
                state[x] = 2;
            }
            return Some(ClosedWalk { nodes, cost });
        }
        for &x in &chain {
            state[x] = 2;
        }
    }
    None
}

/// Splits a closed walk into the simple cycles it contains (length ≥ 4).
pub fn simple_cycles_of(walk: &ClosedWalk) -> Vec<Cycle> {
    let mut out = Vec::new();
    let mut stack: Vec<Node> = Vec::new();
    let nodes = walk.nodes.iter().chain(walk.nodes.first());
    for &v in nodes {
        if let Some(p) = stack.iter().position(|&u| u == v) {
            let piece: Vec<Node> = stack.drain(p..).collect();
            if piece.len() >= 4 {
                if let Ok(c) = Cycle::from_nodes(&piece) {
                    out.push(c);
                }
            }
        }
        stack.push(v);
    }
    out
}

fn cycle_cost(g: &WeightedTanner, cycle: &Cycle, edge_cost: &impl Fn(usize) -> f64) -> f64 {
    cycle.cells().iter().map(|c| edge_cost(g.edges.binary_search(c).expect("cycle lies in the support"))).sum()
}

/// Most negative simple cycle found under `costs`, if any: Bellman-Ford from
/// the smallest node of each connected component, falling back to a bounded
/// exhaustive search when the detected walk has no negative simple cycle.
fn negative_simple_cycle(g: &WeightedTanner, costs: &[f64]) -> Option<(Cycle, f64)> {
    let edge_cost = |e: usize| costs[e];
    for source in component_sources(g) {
        if let BellmanFord::NegativeCycle(walk) = undirected_bellman_ford(g, g.node(source), costs) {
            let best = simple_cycles_of(&walk)
                .into_iter()
                .map(|c| {
                    let cost = cycle_cost(g, &c, &edge_cost);
                    (c, cost)
                })
                .filter(|(_, cost)| *cost < -RELAX_TOL)
                .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            if best.is_some() {
                return best;
            }
            if let Some(found) = dfs_negative_cycle(g, costs) {
                return Some(found);
            }
        }
    }
    None
}

/// Smallest variable node of every component with at least one edge.
fn component_sources(g: &WeightedTanner) -> Vec<usize> {
    let m = g.graph.m();
    let total = g.node_count();
    let mut seen = vec![false; total];
    let mut sources = Vec::new();
    let order = (m..total).chain(0..m);
    for s in order {
        if seen[s] || g.adj[s].is_empty() {
            continue;
        }
        sources.push(s);
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &(w, _) in &g.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    sources
}

/// Depth-first search for a negative simple cycle rooted at its smallest
/// variable node, giving up after [`DFS_BUDGET`] steps.
fn dfs_negative_cycle(g: &WeightedTanner, costs: &[f64]) -> Option<(Cycle, f64)> {
    let m = g.graph.m();
    let mut budget = DFS_BUDGET;
    let mut best: Option<(Cycle, f64)> = None;
    for root in m..g.node_count() {
        let mut on_path = vec![false; g.node_count()];
        let mut path = vec![root];
        on_path[root] = true;
        dfs_step(g, costs, root, 0.0, &mut path, &mut on_path, &mut budget, &mut best);
        if budget == 0 {
            break;
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn dfs_step(
    g: &WeightedTanner,
    costs: &[f64],
    root: usize,
    cost: f64,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    budget: &mut usize,
    best: &mut Option<(Cycle, f64)>,
) {
    let m = g.graph.m();
    let u = *path.last().unwrap();
    for &(w, e) in &g.adj[u] {
        if *budget == 0 {
            return;
        }
        *budget -= 1;
        let total = cost + costs[e];
        if w == root && path.len() >= 4 {
            if total < -RELAX_TOL && best.as_ref().map_or(true, |b| total < b.1) {
                let nodes: Vec<Node> = path.iter().map(|&x| g.node(x)).collect();
                *best = Some((Cycle::from_nodes(&nodes).expect("dfs path is simple"), total));
            }
            continue;
        }
        // variables above the root only, so each cycle is rooted once
        if on_path[w] || (w >= m && w < root) {
            continue;
        }
        on_path[w] = true;
        path.push(w);
        dfs_step(g, costs, root, total, path, on_path, budget, best);
        path.pop();
        on_path[w] = false;
    }
}

/// Progress of the mean-cycle loop.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCycleState {
    /// Current estimate of the minimum mean of `−X`.
    pub mu: f64,
    pub best_cycle: Option<Cycle>,
    pub iterations: usize,
    /// Every cycle met, in order.
    pub visited: Vec<Cycle>,
    /// `μ` after each update.
    pub trace: Vec<f64>,
}

impl MeanCycleState {
    fn new() -> Self {
        MeanCycleState { mu: 0.0, best_cycle: None, iterations: 0, visited: Vec::new(), trace: Vec::new() }
    }
}

/// Runs the `μ` loop to completion on costs `−X`.
pub fn mean_cycle_search(g: &WeightedTanner) -> MeanCycleState {
    mean_cycle_search_until(g, |_| false)
}

/// Runs the `μ` loop, stopping early once `stop` returns true for the state.
pub fn mean_cycle_search_until(g: &WeightedTanner, mut stop: impl FnMut(&MeanCycleState) -> bool) -> MeanCycleState {
    let mut state = MeanCycleState::new();
    loop {
        let shifted: Vec<f64> = g.values.iter().map(|&x| -x - state.mu).collect();
        let Some((cycle, _)) = negative_simple_cycle(g, &shifted) else {
            return state;
        };
        state.iterations += 1;
        let mean = -g.cycle_value(&cycle) / cycle.len() as f64;
        if state.best_cycle.is_some() && mean >= state.mu {
            // rounding stalled the descent
            return state;
        }
        state.mu = mean;
        state.trace.push(mean);
        state.best_cycle = Some(cycle.clone());
        state.visited.push(cycle);
        if stop(&state) {
            return state;
        }
    }
}

/// A cycle minimising the mean of `−X` over its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCycle {
    pub cycle: Cycle,
    pub mean: f64,
}

/// Minimum mean cycle of `−X`, or `None` for an acyclic support.
pub fn min_mean_cycle(g: &WeightedTanner) -> Option<MeanCycle> {
    let state = mean_cycle_search(g);
    let mean = state.mu;
    state.best_cycle.map(|cycle| MeanCycle { cycle, mean })
}

/// User cuts met along the `μ` loop: cycles shorter than `T` whose values
/// sum beyond `|C| − 1 + FEAS_TOL`, at most `cap` of them.
pub fn separate_fractional(g: &WeightedTanner, t: usize, cap: usize) -> Vec<Cut> {
    let mut seen = BTreeSet::new();
    let mut cuts = Vec::new();
    let violated = |c: &Cycle| c.len() < t && g.cycle_value(c) > (c.len() - 1) as f64 + FEAS_TOL;
    mean_cycle_search_until(g, |state| {
        let c = state.visited.last().expect("stop is called after a cycle");
        if violated(c) && seen.insert(c.clone()) {
            cuts.push(Cut::from_cycle(c, CutOrigin::User));
        }
        cuts.len() >= cap
    });
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: f64) -> WeightedTanner {
        let cells = [Cell::new(0, 0), Cell::new(0, 1), Cell::new(1, 0), Cell::new(1, 1)];
        WeightedTanner::new(2, 2, &cells.map(|c| (c, x))).unwrap()
    }

    fn hexagon(x: f64) -> WeightedTanner {
        let cells = [Cell::new(0, 0), Cell::new(0, 1), Cell::new(1, 1), Cell::new(1, 2), Cell::new(2, 2), Cell::new(2, 0)];
        WeightedTanner::new(3, 3, &cells.map(|c| (c, x))).unwrap()
    }

    #[test]
    fn figure_six_cuts() {
        // c1 = {v1,v2,v3}, c2 = {v1,...,v5}
        let g = TannerGraph::from_dense(&[&[1, 1, 1, 0, 0], &[1, 1, 1, 1, 1]]).unwrap();
        let cuts = separate_integral(&g, 6);
        assert_eq!(cuts.len(), 3);
        assert!(cuts.iter().all(|c| c.cells().len() == 4 && c.rhs() == 3));
        let through_v1 = cuts.iter().filter(|c| c.cells().contains(&Cell::new(0, 0))).count();
        assert_eq!(through_v1, 2);
    }

    #[test]
    fn acyclic_support_has_no_cuts() {
        let g = TannerGraph::from_dense(&[&[1, 1, 0], &[0, 1, 1]]).unwrap();
        assert!(separate_integral(&g, 10).is_empty());
        let w = WeightedTanner::new(2, 3, &g.entries().iter().map(|&c| (c, 0.9)).collect::<Vec<_>>()).unwrap();
        assert_eq!(min_mean_cycle(&w), None);
    }

    #[test]
    fn bellman_ford_labels_and_cycles() {
        let g = square(1.0);
        match undirected_bellman_ford(&g, Node::Var(0), &[1.0; 4]) {
            BellmanFord::Labels(l) => {
                assert_eq!(l[2], Some(0.0));
                assert_eq!(l[3], Some(2.0));
            }
            other => panic!("{other:?}"),
        }
        match undirected_bellman_ford(&g, Node::Var(0), &[-0.1; 4]) {
            BellmanFord::NegativeCycle(w) => {
                let cycles = simple_cycles_of(&w);
                assert_eq!(cycles.len(), 1);
                assert_eq!(cycles[0].len(), 4);
                assert!((w.cost + 0.4).abs() < 1e-12, "{}", w.cost);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_square_mean() {
        let mc = min_mean_cycle(&square(0.9)).unwrap();
        assert_eq!(mc.cycle.len(), 4);
        assert!((mc.mean + 0.9).abs() < 1e-12);
    }

    #[test]
    fn fractional_cut_filters() {
        assert_eq!(separate_fractional(&square(0.9), 6, 50).len(), 1);
        assert!(separate_fractional(&square(0.5), 6, 50).is_empty());
        assert!(separate_fractional(&hexagon(0.99), 6, 50).is_empty());
        assert_eq!(separate_fractional(&hexagon(0.99), 8, 50).len(), 1);
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(WeightedTanner::new(1, 1, &[(Cell::new(0, 0), 1.5)]).is_err());
        assert!(WeightedTanner::new(1, 1, &[(Cell::new(0, 0), f64::NAN)]).is_err());
    }
}
