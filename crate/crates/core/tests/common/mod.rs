//! Brute-force oracles shared by the integration tests. They work on flat
//! node indices (checks `0..m`, variables `m..m+n`) and edge sets, and share
//! no code with the library's cycle routines.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use girthforge::separation::WeightedTanner;
use girthforge::tanner::{Cell, TannerGraph};
use proptest::prelude::*;

fn adjacency(g: &TannerGraph) -> Vec<Vec<usize>> {
    let m = g.m();
    let mut adj = vec![Vec::new(); m + g.n()];
    for c in g.entries() {
        adj[c.row].push(m + c.col);
        adj[m + c.col].push(c.row);
    }
    adj
}

fn cell_of(m: usize, a: usize, b: usize) -> Cell {
    if a < m {
        Cell::new(a, b - m)
    } else {
        Cell::new(b, a - m)
    }
}

/// Every simple cycle as its sorted edge set, by walking all simple paths
/// that start at their smallest node.
pub fn all_cycles(g: &TannerGraph) -> BTreeSet<Vec<Cell>> {
    let adj = adjacency(g);
    let m = g.m();
    let mut out = BTreeSet::new();
    fn walk(
        adj: &[Vec<usize>],
        m: usize,
        start: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut BTreeSet<Vec<Cell>>,
    ) {
        let u = *path.last().unwrap();
        for &w in &adj[u] {
            if w == start && path.len() >= 4 {
                let mut cells: Vec<Cell> =
                    path.windows(2).map(|p| cell_of(m, p[0], p[1])).chain([cell_of(m, u, start)]).collect();
                cells.sort();
                out.insert(cells);
            } else if w > start && !on_path[w] {
                on_path[w] = true;
                path.push(w);
                walk(adj, m, start, path, on_path, out);
                path.pop();
                on_path[w] = false;
            }
        }
    }
    for start in 0..adj.len() {
        let mut on_path = vec![false; adj.len()];
        on_path[start] = true;
        walk(&adj, m, start, &mut vec![start], &mut on_path, &mut out);
    }
    out
}

/// Length of the shortest cycle using `cell` once it is present, or `None`
/// when its endpoints are otherwise disconnected.
pub fn shortest_cycle_through(g: &TannerGraph, cell: Cell) -> Option<usize> {
    let adj = adjacency(g);
    let m = g.m();
    let (from, to) = (cell.row, m + cell.col);
    let mut dist = vec![usize::MAX; adj.len()];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            let skip = (u == from && w == to) || (u == to && w == from);
            if !skip && dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    (dist[to] != usize::MAX).then(|| dist[to] + 1)
}

pub fn girth_oracle(g: &TannerGraph) -> Option<usize> {
    g.entries().iter().filter_map(|&c| shortest_cycle_through(g, c)).min()
}

/// Union-find acyclicity test.
pub fn is_forest(g: &TannerGraph) -> bool {
    let m = g.m();
    let mut parent: Vec<usize> = (0..m + g.n()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut x = x;
        while p[x] != r {
            let next = p[x];
            p[x] = r;
            x = next;
        }
        r
    }
    for c in g.entries() {
        let (a, b) = (find(&mut parent, c.row), find(&mut parent, m + c.col));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

/// Random bipartite graph with `m` in `rows`, `n` in `cols` and edge
/// density `p` in percent.
pub fn graph_strategy(
    rows: std::ops::RangeInclusive<usize>,
    cols: std::ops::RangeInclusive<usize>,
    p: u32,
) -> impl Strategy<Value = TannerGraph> {
    (rows, cols).prop_flat_map(move |(m, n)| {
        proptest::collection::vec(0u32..100, m * n).prop_map(move |coins| {
            let cells: Vec<Cell> =
                (0..m * n).filter(|&k| coins[k] < p).map(|k| Cell::new(k / n, k % n)).collect();
            TannerGraph::new(m, n, &cells).unwrap()
        })
    })
}

/// Support with dyadic values in (0,1], so every cycle sum is exact.
pub fn weighted_strategy() -> impl Strategy<Value = WeightedTanner> {
    (2usize..=5, 2usize..=7)
        .prop_filter("at most 12 nodes", |&(m, n)| m + n <= 12)
        .prop_flat_map(|(m, n)| {
            proptest::collection::vec(0u32..=16, m * n).prop_map(move |v| {
                // half the cells absent, the rest k/8
                let values: Vec<(Cell, f64)> = (0..m * n)
                    .filter(|&k| v[k] >= 8)
                    .map(|k| (Cell::new(k / n, k % n), (v[k] - 8) as f64 / 8.0))
                    .filter(|&(_, x)| x > 0.0)
                    .collect();
                WeightedTanner::new(m, n, &values).unwrap()
            })
        })
}
