//! Tanner graphs, girth and short-cycle enumeration.
//!
//! A Tanner graph is the bipartite view of a binary parity-check matrix `H`:
//! check node `c_i` for row `i`, variable node `v_j` for column `j`, and an
//! edge for every one in `H`. All indices in this crate are 0-based; the alist
//! reader and writer translate to the 1-based convention of that format.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DesignSpec;

/// A matrix position `(row, col)`, i.e. the edge between `c_row` and `v_col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// A node of the Tanner graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    /// Variable node `v_j` (column `j`).
    Var(usize),
    /// Check node `c_i` (row `i`).
    Check(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Var(j) => write!(f, "v{j}"),
            Node::Check(i) => write!(f, "c{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("cell {cell} outside a {m}x{n} matrix")]
    IndexOutOfRange { cell: Cell, m: usize, n: usize },
    #[error("duplicate entry {0}")]
    DuplicateEntry(Cell),
    #[error("degree {degree} of {node} exceeds its target {target}")]
    DegreeExceedsTarget { node: Node, degree: usize, target: usize },
    #[error("graph is {got_m}x{got_n} but the design is {m}x{n}")]
    DimensionMismatch { m: usize, n: usize, got_m: usize, got_n: usize },
    #[error("not a simple alternating cycle: {0}")]
    InvalidCycle(String),
}

/// Bipartite graph equivalent to a binary `m x n` parity-check matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    m: usize,
    n: usize,
    entries: Vec<Cell>,
    check_adj: Vec<Vec<usize>>,
    var_adj: Vec<Vec<usize>>,
}

impl TannerGraph {
    /// Builds a graph from the positions of the ones of `H`.
    pub fn new(m: usize, n: usize, ones: &[Cell]) -> Result<Self, GraphError> {
        let mut entries = ones.to_vec();
        for &cell in &entries {
            if cell.row >= m || cell.col >= n {
                return Err(GraphError::IndexOutOfRange { cell, m, n });
            }
        }
        entries.sort_unstable();
        if let Some(w) = entries.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEntry(w[0]));
        }
        let mut check_adj = vec![Vec::new(); m];
        let mut var_adj = vec![Vec::new(); n];
        for cell in &entries {
            check_adj[cell.row].push(cell.col);
            var_adj[cell.col].push(cell.row);
        }
        // entries are sorted by (row, col) so check lists are already ascending
        for list in &mut var_adj {
            list.sort_unstable();
        }
        Ok(TannerGraph { m, n, entries, check_adj, var_adj })
    }

    pub fn empty(m: usize, n: usize) -> Self {
        TannerGraph {
            m,
            n,
            entries: Vec::new(),
            check_adj: vec![Vec::new(); m],
            var_adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from a dense 0/1 matrix given row by row.
    pub fn from_dense(rows: &[&[u8]]) -> Result<Self, GraphError> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        let mut ones = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0 {
                    ones.push(Cell::new(i, j));
                }
            }
        }
        Self::new(m, n, &ones)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The ones of `H`, sorted by `(row, col)`.
    pub fn entries(&self) -> &[Cell] {
        &self.entries
    }

    pub fn edge_count(&self) -> usize {
        self.entries.len()
    }

    pub fn has_edge(&self, cell: Cell) -> bool {
        cell.row < self.m && self.check_adj[cell.row].binary_search(&cell.col).is_ok()
    }

    /// Variable nodes adjacent to `c_i`, ascending.
    pub fn check_neighbors(&self, i: usize) -> &[usize] {
        &self.check_adj[i]
    }

    /// Check nodes adjacent to `v_j`, ascending.
    pub fn var_neighbors(&self, j: usize) -> &[usize] {
        &self.var_adj[j]
    }

    pub fn check_degree(&self, i: usize) -> usize {
        self.check_adj[i].len()
    }

    pub fn var_degree(&self, j: usize) -> usize {
        self.var_adj[j].len()
    }

    pub fn max_check_degree(&self) -> usize {
        self.check_adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_var_degree(&self) -> usize {
        self.var_adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Copy of the graph with one more edge.
    pub fn with_edge(&self, cell: Cell) -> Result<Self, GraphError> {
        let mut ones = self.entries.clone();
        ones.push(cell);
        Self::new(self.m, self.n, &ones)
    }

    /// Row `i` of the result is row `row_order[i]` of `self`; likewise for
    /// columns.
    pub fn permuted(&self, row_order: &[usize], col_order: &[usize]) -> Self {
        assert_eq!(row_order.len(), self.m);
        assert_eq!(col_order.len(), self.n);
        let mut row_pos = vec![0; self.m];
        for (pos, &r) in row_order.iter().enumerate() {
            row_pos[r] = pos;
        }
        let mut col_pos = vec![0; self.n];
        for (pos, &c) in col_order.iter().enumerate() {
            col_pos[c] = pos;
        }
        let ones: Vec<Cell> = self
            .entries
            .iter()
            .map(|c| Cell::new(row_pos[c.row], col_pos[c.col]))
            .collect();
        Self::new(self.m, self.n, &ones).expect("permutation keeps entries valid")
    }

    /// Dense row-major 0/1 rendering.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut h = vec![vec![0u8; self.n]; self.m];
        for c in &self.entries {
            h[c.row][c.col] = 1;
        }
        h
    }

    fn neighbors(&self, node: usize) -> NodeNeighbors<'_> {
        if node < self.m {
            NodeNeighbors { list: &self.check_adj[node], offset: self.m }
        } else {
            NodeNeighbors { list: &self.var_adj[node - self.m], offset: 0 }
        }
    }
}

// Flat node numbering used by the searches: checks 0..m, variables m..m+n.
struct NodeNeighbors<'a> {
    list: &'a [usize],
    offset: usize,
}

impl NodeNeighbors<'_> {
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.list.iter().map(move |&x| x + self.offset)
    }
}

/// A simple cycle stored in canonical form: it starts at its smallest
/// variable node and continues towards the smaller of that node's two check
/// neighbours on the cycle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cycle {
    nodes: Vec<Node>,
}

impl Cycle {
    /// Canonicalises a closed walk given without repeating its first node.
    pub fn from_nodes(nodes: &[Node]) -> Result<Self, GraphError> {
        let len = nodes.len();
        if len < 4 || len % 2 != 0 {
            return Err(GraphError::InvalidCycle(format!("length {len}")));
        }
        let start = nodes
            .iter()
            .enumerate()
            .filter_map(|(k, node)| match node {
                Node::Var(j) => Some((*j, k)),
                Node::Check(_) => None,
            })
            .min()
            .map(|(_, k)| k)
            .ok_or_else(|| GraphError::InvalidCycle("no variable node".into()))?;
        let forward: Vec<Node> = (0..len).map(|k| nodes[(start + k) % len]).collect();
        let canonical = if forward[1] <= forward[len - 1] {
            forward
        } else {
            let mut back = Vec::with_capacity(len);
            back.push(forward[0]);
            back.extend(forward[1..].iter().rev());
            back
        };
        for k in 0..len {
            let a = canonical[k];
            let b = canonical[(k + 1) % len];
            let alternates = matches!((a, b), (Node::Var(_), Node::Check(_)) | (Node::Check(_), Node::Var(_)));
            if !alternates {
                return Err(GraphError::InvalidCycle(format!("{a} followed by {b}")));
            }
        }
        let distinct: BTreeSet<Node> = canonical.iter().copied().collect();
        if distinct.len() != len {
            return Err(GraphError::InvalidCycle("repeated node".into()));
        }
        Ok(Cycle { nodes: canonical })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The cells traversed by the cycle, sorted.
    pub fn cells(&self) -> Vec<Cell> {
        let len = self.nodes.len();
        let mut cells: Vec<Cell> = (0..len)
            .map(|k| match (self.nodes[k], self.nodes[(k + 1) % len]) {
                (Node::Var(j), Node::Check(i)) | (Node::Check(i), Node::Var(j)) => Cell::new(i, j),
                _ => unreachable!("canonical cycles alternate"),
            })
            .collect();
        cells.sort_unstable();
        cells
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, node) in self.nodes.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{node}")?;
        }
        write!(f, ")")
    }
}

/// Deduplicated set of canonical cycles.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleSet {
    cycles: BTreeSet<Cycle>,
}

impl CycleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `true` when the cycle was not present yet.
    pub fn insert(&mut self, cycle: Cycle) -> bool {
        self.cycles.insert(cycle)
    }

    pub fn contains(&self, cycle: &Cycle) -> bool {
        self.cycles.contains(cycle)
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cycle> {
        self.cycles.iter()
    }

    pub fn shortest(&self) -> Option<usize> {
        self.cycles.iter().map(Cycle::len).min()
    }
}

impl IntoIterator for CycleSet {
    type Item = Cycle;
    type IntoIter = std::collections::btree_set::IntoIter<Cycle>;

    fn into_iter(self) -> Self::IntoIter {
        self.cycles.into_iter()
    }
}

impl FromIterator<Cycle> for CycleSet {
    fn from_iter<I: IntoIterator<Item = Cycle>>(iter: I) -> Self {
        CycleSet { cycles: iter.into_iter().collect() }
    }
}

/// Length of a shortest cycle, or `None` for a forest.
pub fn girth(g: &TannerGraph) -> Option<usize> {
    let total = g.m + g.n;
    let mut best = usize::MAX;
    let mut dist = vec![usize::MAX; total];
    let mut parent = vec![usize::MAX; total];
    let mut touched = Vec::with_capacity(total);
    let mut queue = VecDeque::with_capacity(total);
    for root in g.m..total {
        for &u in &touched {
            dist[u] = usize::MAX;
            parent[u] = usize::MAX;
        }
        touched.clear();
        queue.clear();
        dist[root] = 0;
        touched.push(root);
        queue.push_back(root);
        'bfs: while let Some(u) = queue.pop_front() {
            // any cycle closed from here has length at least 2 * dist[u] + 1
            if 2 * dist[u] + 1 >= best {
                break;
            }
            for w in g.neighbors(u).iter() {
                if w == parent[u] {
                    continue;
                }
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    touched.push(w);
                    queue.push_back(w);
                } else {
                    best = best.min(dist[u] + dist[w] + 1);
                    if 2 * dist[u] + 1 >= best {
                        break 'bfs;
                    }
                }
            }
        }
    }
    (best != usize::MAX).then_some(best)
}

/// All cycles of length `< t`, each once, found by the depth-first track
/// search: from every variable node `v_r` the search extends a track of
/// untracked nodes (variable nodes restricted to indices above `r`) and
/// records a cycle whenever the track closes back on `v_r`.
pub fn enumerate_short_cycles(g: &TannerGraph, t: usize) -> CycleSet {
    let mut set = CycleSet::new();
    if t <= 4 {
        return set;
    }
    let max_len = t - 2;
    let total = g.m + g.n;
    let mut on_track = vec![false; total];
    let mut track: Vec<usize> = Vec::with_capacity(max_len);
    for root in g.m..total {
        on_track[root] = true;
        track.push(root);
        extend_track(g, root, max_len, &mut track, &mut on_track, &mut set);
        track.pop();
        on_track[root] = false;
    }
    set
}

fn extend_track(
    g: &TannerGraph,
    root: usize,
    max_len: usize,
    track: &mut Vec<usize>,
    on_track: &mut [bool],
    set: &mut CycleSet,
) {
    let last = *track.last().expect("track holds the root");
    for w in g.neighbors(last).iter() {
        if w == root {
            if track.len() >= 4 {
                let nodes: Vec<Node> = track.iter().map(|&u| flat_to_node(g, u)).collect();
                set.insert(Cycle::from_nodes(&nodes).expect("track is a simple cycle"));
            }
            continue;
        }
        if on_track[w] || (w >= g.m && w < root) || track.len() + 1 > max_len {
            continue;
        }
        on_track[w] = true;
        track.push(w);
        extend_track(g, root, max_len, track, on_track, set);
        track.pop();
        on_track[w] = false;
    }
}

fn flat_to_node(g: &TannerGraph, u: usize) -> Node {
    if u < g.m {
        Node::Check(u)
    } else {
        Node::Var(u - g.m)
    }
}

/// `Σ_j (dv_j − deg v_j) + Σ_i (dc_i − deg c_i)`.
pub fn degree_deviation(g: &TannerGraph, spec: &DesignSpec) -> Result<u64, GraphError> {
    if g.m != spec.m() || g.n != spec.n() {
        return Err(GraphError::DimensionMismatch { m: spec.m(), n: spec.n(), got_m: g.m, got_n: g.n });
    }
    let mut total = 0u64;
    for j in 0..g.n {
        let (degree, target) = (g.var_degree(j), spec.dv()[j]);
        if degree > target {
            return Err(GraphError::DegreeExceedsTarget { node: Node::Var(j), degree, target });
        }
        total += (target - degree) as u64;
    }
    for i in 0..g.m {
        let (degree, target) = (g.check_degree(i), spec.dc()[i]);
        if degree > target {
            return Err(GraphError::DegreeExceedsTarget { node: Node::Check(i), degree, target });
        }
        total += (target - degree) as u64;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> TannerGraph {
        TannerGraph::from_dense(&[
            &[0, 1, 0, 0, 1, 1, 1, 1, 1, 0],
            &[0, 0, 0, 0, 1, 1, 1, 1, 1, 1],
            &[1, 0, 1, 1, 1, 1, 1, 0, 0, 0],
            &[1, 1, 1, 1, 0, 0, 0, 0, 1, 1],
            &[1, 1, 1, 1, 0, 0, 0, 1, 0, 1],
        ])
        .unwrap()
    }

    #[test]
    fn builds_regular_example() {
        let g = fig3();
        assert_eq!(g.edge_count(), 30);
        assert!((0..5).all(|i| g.check_degree(i) == 6));
        assert!((0..10).all(|j| g.var_degree(j) == 3));
        assert_eq!(girth(&g), Some(4));
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(matches!(
            TannerGraph::new(2, 2, &[Cell::new(2, 0)]),
            Err(GraphError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            TannerGraph::new(2, 2, &[Cell::new(1, 1), Cell::new(1, 1)]),
            Err(GraphError::DuplicateEntry(_))
        ));
    }

    #[test]
    fn single_edge() {
        let g = TannerGraph::new(1, 1, &[Cell::new(0, 0)]).unwrap();
        assert_eq!((g.check_degree(0), g.var_degree(0)), (1, 1));
        assert_eq!(girth(&g), None);
    }

    #[test]
    fn canonical_cycle_is_rotation_and_reflection_invariant() {
        let walk = [Node::Check(2), Node::Var(3), Node::Check(0), Node::Var(1)];
        let a = Cycle::from_nodes(&walk).unwrap();
        let mut rev = walk;
        rev.reverse();
        let b = Cycle::from_nodes(&rev).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.nodes(), &[Node::Var(1), Node::Check(0), Node::Var(3), Node::Check(2)]);
        assert_eq!(a.cells(), vec![Cell::new(0, 1), Cell::new(0, 3), Cell::new(2, 1), Cell::new(2, 3)]);
    }

    #[test]
    fn cycle_rejects_non_alternating() {
        assert!(Cycle::from_nodes(&[Node::Var(0), Node::Var(1), Node::Check(0), Node::Check(1)]).is_err());
        assert!(Cycle::from_nodes(&[Node::Var(0), Node::Check(1)]).is_err());
    }

    #[test]
    fn short_cycles_of_regular_example() {
        let g = fig3();
        let cycles = enumerate_short_cycles(&g, 6);
        assert!(!cycles.is_empty());
        assert!(cycles.iter().all(|c| c.len() == 4));
        assert_eq!(enumerate_short_cycles(&g, 4).len(), 0);
    }
}
