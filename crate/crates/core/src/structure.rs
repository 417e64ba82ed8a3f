//! Symmetry breaking and cycle regions for `(J,K)`-regular designs.
//!
//! The extended fixing lays two staircases of ones over `H`: row `s` owns a
//! block of `K−1` consecutive columns and column `s` a block of `J−1`
//! consecutive rows, both advancing diagonally from the top-left corner. The
//! fixed ones form a spanning tree of the Tanner graph, so setting any other
//! cell `(i,j)` to one closes exactly one cycle, of length
//! `ρ(i,j) = dist_tree(c_i, v_j) + 1`.
//!
//! Cells between the two staircases (`i` below the row owning column `j`,
//! `j` right of the column owning row `i`) form `R ∪ S`: `R` is the free
//! lower-right rectangle, `S` the part the extended fixing zeroes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::model::{Cut, CutOrigin, DesignSpec};
use crate::tanner::{girth, Cell, TannerGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("fixing schemes need a (J,K)-regular design")]
    NotRegular,
    #[error("fixing schemes need J >= 2 and K >= 2, got J = {j}, K = {k}")]
    DegreeTooSmall { j: usize, k: usize },
    #[error("matrix is not {j},{k}-regular of the design's dimensions")]
    NotRegularMatrix { j: usize, k: usize },
    #[error("precondition violated: girth {girth:?} does not exceed tau = {tau}")]
    GirthTooSmall { girth: Option<usize>, tau: usize },
    #[error("reordering failed: {0}")]
    ReorderFailed(String),
    #[error("no row reaches rho >= {t} within {rows} staircase rows")]
    BoundNotFound { t: usize, rows: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixingMode {
    Basic,
    Extended,
}

/// Cells fixed to one and to zero before the search starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixingPlan {
    mode: FixingMode,
    ones: BTreeSet<Cell>,
    zeros: BTreeSet<Cell>,
    r_cr: usize,
    c_cr: usize,
}

impl FixingPlan {
    /// A plan that fixes nothing.
    pub fn empty() -> Self {
        FixingPlan { mode: FixingMode::Basic, ones: BTreeSet::new(), zeros: BTreeSet::new(), r_cr: 0, c_cr: 0 }
    }

    pub fn mode(&self) -> FixingMode {
        self.mode
    }

    pub fn ones(&self) -> &BTreeSet<Cell> {
        &self.ones
    }

    pub fn zeros(&self) -> &BTreeSet<Cell> {
        &self.zeros
    }

    /// `⌊(n−1)/(K−1)⌋`: rows whose staircase block is complete.
    pub fn r_cr(&self) -> usize {
        self.r_cr
    }

    /// `⌊(m−1)/(J−1)⌋`: columns whose staircase block is complete.
    pub fn c_cr(&self) -> usize {
        self.c_cr
    }

    /// Graph formed by the fixed ones.
    pub fn graph(&self, m: usize, n: usize) -> TannerGraph {
        let ones: Vec<Cell> = self.ones.iter().copied().collect();
        TannerGraph::new(m, n, &ones).expect("plan cells lie inside the matrix")
    }
}

fn regular_params(spec: &DesignSpec) -> Result<(usize, usize), StructureError> {
    let (j, k) = spec.regularity().ok_or(StructureError::NotRegular)?;
    if j < 2 || k < 2 {
        return Err(StructureError::DegreeTooSmall { j, k });
    }
    Ok((j, k))
}

/// Builds the basic or extended fixing for a regular design.
pub fn fixing_plan(spec: &DesignSpec, mode: FixingMode) -> Result<FixingPlan, StructureError> {
    let (j, k) = regular_params(spec)?;
    let (m, n) = (spec.m(), spec.n());
    let r_cr = (n - 1) / (k - 1);
    let c_cr = (m - 1) / (j - 1);
    let mut ones = BTreeSet::new();
    let mut zeros = BTreeSet::new();
    match mode {
        FixingMode::Basic => {
            for col in 0..n {
                insert_fixed(&mut ones, &mut zeros, Cell::new(0, col), col < k);
            }
            for row in 1..m {
                insert_fixed(&mut ones, &mut zeros, Cell::new(row, 0), row < j);
            }
        }
        FixingMode::Extended => {
            ones = staircase(m, n, j, k);
            for row in 0..m {
                for col in 0..n {
                    let cell = Cell::new(row, col);
                    if (row < r_cr || col < c_cr) && !ones.contains(&cell) {
                        zeros.insert(cell);
                    }
                }
            }
        }
    }
    Ok(FixingPlan { mode, ones, zeros, r_cr, c_cr })
}

fn insert_fixed(ones: &mut BTreeSet<Cell>, zeros: &mut BTreeSet<Cell>, cell: Cell, one: bool) {
    if one {
        ones.insert(cell);
    } else {
        zeros.insert(cell);
    }
}

/// The two staircases, clipped to the matrix (0-based: row 0 holds columns
/// `0..K`, column 0 rows `0..J`, row `s ≥ 1` columns `1+s(K−1) ..= (s+1)(K−1)`
/// for `s ≤ r_cr`, column `s ≥ 1` rows `1+s(J−1) ..= (s+1)(J−1)` for `s ≤ c_cr`).
fn staircase(m: usize, n: usize, j: usize, k: usize) -> BTreeSet<Cell> {
    let r_cr = (n - 1) / (k - 1);
    let c_cr = (m - 1) / (j - 1);
    let mut ones = BTreeSet::new();
    for col in 0..k.min(n) {
        ones.insert(Cell::new(0, col));
    }
    for row in 0..j.min(m) {
        ones.insert(Cell::new(row, 0));
    }
    for s in 1..=r_cr.min(m - 1) {
        for col in (1 + s * (k - 1))..=((s + 1) * (k - 1)).min(n - 1) {
            ones.insert(Cell::new(s, col));
        }
    }
    for s in 1..=c_cr.min(n - 1) {
        for row in (1 + s * (j - 1))..=((s + 1) * (j - 1)).min(m - 1) {
            ones.insert(Cell::new(row, s));
        }
    }
    ones
}

/// Row whose staircase block contains column `col`.
fn row_owner(col: usize, k: usize) -> usize {
    if col == 0 {
        0
    } else {
        (col - 1) / (k - 1)
    }
}

/// Column whose staircase block contains row `row`.
fn col_owner(row: usize, j: usize) -> usize {
    if row == 0 {
        0
    } else {
        (row - 1) / (j - 1)
    }
}

fn between(cell: Cell, j: usize, k: usize) -> bool {
    cell.row > row_owner(cell.col, k) && cell.col > col_owner(cell.row, j)
}

/// Breadth-first distances from `source` (flat numbering: checks first).
fn distances(g: &TannerGraph, source: usize) -> Vec<usize> {
    let m = g.m();
    let mut dist = vec![usize::MAX; m + g.n()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next: Vec<usize> = if u < m {
            g.check_neighbors(u).iter().map(|&c| m + c).collect()
        } else {
            g.var_neighbors(u - m).to_vec()
        };
        for w in next {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Region data of one cell of `R ∪ S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionCell {
    /// Length of the cycle closed by this cell, `None` if it closes none.
    pub rho: Option<usize>,
    /// Whether the cell lies in the free rectangle `R` (else in `S`).
    pub reduced: bool,
    /// `(row group, column group)` of the subblock containing the cell.
    pub subblock: (usize, usize),
    /// Column owning the cell's row; together with the subblock this names
    /// the subpiece.
    pub subpiece: usize,
}

/// `ρ` over `R ∪ S` for the extended fixing of a regular design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleRegionMap {
    m: usize,
    n: usize,
    cells: BTreeMap<Cell, RegionCell>,
    tau: Option<usize>,
}

impl CycleRegionMap {
    pub fn get(&self, cell: Cell) -> Option<&RegionCell> {
        self.cells.get(&cell)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Cell, &RegionCell)> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Largest `ρ` over `S`.
    pub fn tau(&self) -> Option<usize> {
        self.tau
    }

    /// Text grid: `#` fixed one, `.` outside the region, otherwise `ρ/2`
    /// (`+` above 9, `-` when no cycle closes). A `|` marks where `R` starts
    /// on each of its rows.
    pub fn render(&self, plan: &FixingPlan) -> String {
        let mut out = String::new();
        for row in 0..self.m {
            for col in 0..self.n {
                if col == plan.c_cr() && row >= plan.r_cr() {
                    out.push('|');
                }
                let cell = Cell::new(row, col);
                let ch = if plan.ones().contains(&cell) {
                    '#'
                } else if let Some(rc) = self.cells.get(&cell) {
                    match rc.rho {
                        Some(r) if r / 2 <= 9 => char::from_digit((r / 2) as u32, 10).unwrap(),
                        Some(_) => '+',
                        None => '-',
                    }
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

/// Computes `ρ(i,j)` for every cell of `R ∪ S` by breadth-first search from
/// each variable node over the extended fixing's spanning tree.
pub fn cycle_regions(spec: &DesignSpec) -> Result<CycleRegionMap, StructureError> {
    let (j, k) = regular_params(spec)?;
    let (m, n) = (spec.m(), spec.n());
    let plan = fixing_plan(spec, FixingMode::Extended)?;
    let tree = plan.graph(m, n);
    let mut cells = BTreeMap::new();
    let mut tau: Option<usize> = None;
    for col in 0..n {
        let dist = distances(&tree, m + col);
        for row in 0..m {
            let cell = Cell::new(row, col);
            if plan.ones().contains(&cell) || !between(cell, j, k) {
                continue;
            }
            let rho = (dist[row] != usize::MAX).then(|| dist[row] + 1);
            let reduced = row >= plan.r_cr() && col >= plan.c_cr();
            let subpiece = col_owner(row, j);
            let subblock = (row_owner(subpiece, k), row_owner(col, k));
            if !reduced {
                if let Some(r) = rho {
                    tau = Some(tau.map_or(r, |t| t.max(r)));
                }
            }
            cells.insert(cell, RegionCell { rho, reduced, subblock, subpiece });
        }
    }
    Ok(CycleRegionMap { m, n, cells, tau })
}

/// Zero fixings and packing cuts implied by the cycle regions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidInequalities {
    pub zeros: Vec<Cell>,
    pub cuts: Vec<Cut>,
}

/// Every `R` cell with `ρ < T` is fixed to zero. For `T = 8` the surviving
/// cells of each subpiece admit at most one one (two would close a cycle of
/// length at most 6); for `T = 10` the same holds for each subblock (two
/// would close a cycle of length at most 8).
pub fn valid_inequalities(spec: &DesignSpec, t: usize, map: &CycleRegionMap) -> Result<ValidInequalities, StructureError> {
    regular_params(spec)?;
    let mut out = ValidInequalities::default();
    let mut groups: BTreeMap<(usize, usize, usize), Vec<Cell>> = BTreeMap::new();
    for (&cell, rc) in map.iter() {
        if !rc.reduced {
            continue;
        }
        match rc.rho {
            Some(r) if r < t => out.zeros.push(cell),
            _ => {
                let key = match t {
                    8 => (rc.subblock.0, rc.subblock.1, rc.subpiece),
                    10 => (rc.subblock.0, rc.subblock.1, usize::MAX),
                    _ => continue,
                };
                groups.entry(key).or_default().push(cell);
            }
        }
    }
    for cells in groups.values().filter(|c| c.len() >= 2) {
        out.cuts.push(Cut::at_most_one(cells, CutOrigin::ValidInequality).expect("group is nonempty"));
    }
    Ok(out)
}

/// Lower bound on `n` for a `(J,K)`-regular code of girth at least `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinNBound {
    pub r_cr: usize,
    pub n: usize,
}

/// Finds the first staircase row containing an `R ∪ S` cell with `ρ ≥ T`
/// (on a staircase large enough not to be clipped); `r_cr` is the row before
/// it and the bound is `(K−1)(r_cr + 1)`.
pub fn min_n_bound(j: usize, k: usize, t: usize) -> Result<MinNBound, StructureError> {
    if j < 2 || k < 2 {
        return Err(StructureError::DegreeTooSmall { j, k });
    }
    let mut rows = 16;
    loop {
        // columns up to the last one owned by a row above `rows`, and enough
        // rows for every one of those columns to carry its own block
        let n = 1 + (rows + 1) * (k - 1);
        let m = 1 + n * (j - 1) + j;
        let tree = TannerGraph::new(m, n, &staircase(m, n, j, k).into_iter().collect::<Vec<_>>())
            .expect("staircase fits");
        for row in 1..=rows {
            let dist = distances(&tree, row);
            let hit = (0..n).any(|col| {
                let cell = Cell::new(row, col);
                between(cell, j, k) && !tree.has_edge(cell) && (dist[m + col] == usize::MAX || dist[m + col] + 1 >= t)
            });
            if hit {
                // `row` is 0-based, so the 1-based r_cr is `row`
                return Ok(MinNBound { r_cr: row, n: (k - 1) * (row + 1) });
            }
        }
        if rows >= 1 << 12 {
            return Err(StructureError::BoundNotFound { t, rows });
        }
        rows *= 2;
    }
}

/// Regular codes satisfy `nJ = mK`; returns the reduced ratio `n : m`
/// (`(2, 1)`, i.e. `n = 2m`, whenever `K = 2J`).
pub fn dimension_ratio(j: usize, k: usize) -> (usize, usize) {
    let g = gcd(j, k);
    (k / g, j / g)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Permutes rows and columns of a regular `h` so that its ones reproduce the
/// extended staircase; the remaining ones then lie in `R`.
pub fn reorder(h: &TannerGraph, spec: &DesignSpec) -> Result<TannerGraph, StructureError> {
    let (j, k) = regular_params(spec)?;
    let (m, n) = (spec.m(), spec.n());
    let regular = h.m() == m
        && h.n() == n
        && (0..n).all(|c| h.var_degree(c) == j)
        && (0..m).all(|r| h.check_degree(r) == k);
    if !regular {
        return Err(StructureError::NotRegularMatrix { j, k });
    }
    let plan = fixing_plan(spec, FixingMode::Extended)?;
    let tau = cycle_regions(spec)?.tau().unwrap_or(0);
    let g = girth(h);
    if g.is_some_and(|g| g <= tau) {
        return Err(StructureError::GirthTooSmall { girth: g, tau });
    }
    let (r_cr, c_cr) = (plan.r_cr(), plan.c_cr());
    let mut order = Ordering::new(m, n);
    order.add_row(0);
    for &c in h.check_neighbors(0) {
        order.add_col(c);
    }
    order.place_col_block(h, 0, j - 1, true)?;
    for s in 1..r_cr.max(1) {
        order.place_row_block(h, s, k - 1, true)?;
        order.place_col_block(h, s, j - 1, true)?;
    }
    for s in r_cr.max(1)..c_cr {
        order.place_col_block(h, s, j - 1, true)?;
    }
    // the partial blocks that close the staircase
    if r_cr < m {
        order.place_row_block(h, r_cr, k - 1, false)?;
    }
    if c_cr < n {
        order.place_col_block(h, c_cr, j - 1, false)?;
    }
    let (rows, cols) = order.finish();
    let out = h.permuted(&rows, &cols);
    for row in 0..m {
        for col in 0..n {
            if row >= r_cr && col >= c_cr {
                continue;
            }
            let cell = Cell::new(row, col);
            if out.has_edge(cell) != plan.ones().contains(&cell) {
                return Err(StructureError::ReorderFailed(format!("cell {cell} disagrees with the staircase")));
            }
        }
    }
    Ok(out)
}

struct Ordering {
    rows: Vec<usize>,
    cols: Vec<usize>,
    row_done: Vec<bool>,
    col_done: Vec<bool>,
}

impl Ordering {
    fn new(m: usize, n: usize) -> Self {
        Ordering { rows: Vec::new(), cols: Vec::new(), row_done: vec![false; m], col_done: vec![false; n] }
    }

    fn add_row(&mut self, r: usize) {
        self.row_done[r] = true;
        self.rows.push(r);
    }

    fn add_col(&mut self, c: usize) {
        self.col_done[c] = true;
        self.cols.push(c);
    }

    /// Gives the unplaced neighbours of the row at position `s` the next
    /// column positions.
    fn place_row_block(&mut self, h: &TannerGraph, s: usize, size: usize, exact: bool) -> Result<(), StructureError> {
        let Some(&row) = self.rows.get(s) else {
            return if exact { Err(StructureError::ReorderFailed(format!("row position {s} unset"))) } else { Ok(()) };
        };
        let fresh: Vec<usize> = h.check_neighbors(row).iter().copied().filter(|&c| !self.col_done[c]).collect();
        if exact && fresh.len() != size {
            return Err(StructureError::ReorderFailed(format!("row {row} has {} unplaced ones, expected {size}", fresh.len())));
        }
        for c in fresh {
            self.add_col(c);
        }
        Ok(())
    }

    fn place_col_block(&mut self, h: &TannerGraph, s: usize, size: usize, exact: bool) -> Result<(), StructureError> {
        let Some(&col) = self.cols.get(s) else {
            return if exact { Err(StructureError::ReorderFailed(format!("column position {s} unset"))) } else { Ok(()) };
        };
        let fresh: Vec<usize> = h.var_neighbors(col).iter().copied().filter(|&r| !self.row_done[r]).collect();
        if exact && fresh.len() != size {
            return Err(StructureError::ReorderFailed(format!("column {col} has {} unplaced ones, expected {size}", fresh.len())));
        }
        for r in fresh {
            self.add_row(r);
        }
        Ok(())
    }

    fn finish(mut self) -> (Vec<usize>, Vec<usize>) {
        for r in 0..self.row_done.len() {
            if !self.row_done[r] {
                self.add_row(r);
            }
        }
        for c in 0..self.col_done.len() {
            if !self.col_done[c] {
                self.add_col(c);
            }
        }
        (self.rows, self.cols)
    }
}
