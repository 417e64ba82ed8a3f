//! The Minimum Degree Deviation (MDD) integer program.
//!
//! ```text
//! min  Σ_j dv^s_j + Σ_i dc^s_i
//! s.t. Σ_i X_ij + dv^s_j = dv_j          for every column j
//!      Σ_j X_ij + dc^s_i = dc_i          for every row i
//!      Σ_{(i,j)∈C} X_ij ≤ |C| − 1        for every cycle C with |C| < T
//!      X_ij ∈ {0,1}, slacks ≥ 0
//! ```
//!
//! The cycle family is never written out; it lives in a cut pool that the
//! branch-and-cut driver fills on demand. A design with objective 0 is a
//! girth-feasible code.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simplex::{LpProblem, LpRow, Relation};
use crate::structure::FixingPlan;
use crate::tanner::{Cell, Cycle};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid design: {0}")]
    InvalidSpec(String),
    #[error("cell {0} is outside the matrix")]
    CellOutOfRange(Cell),
    #[error("cell {0} is fixed to both 0 and 1")]
    ConflictingFixing(Cell),
    #[error("cut has no cells")]
    EmptyCut,
}

/// Dimensions, degree targets and target girth of a design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    m: usize,
    n: usize,
    dv: Vec<usize>,
    dc: Vec<usize>,
    regular: Option<(usize, usize)>,
    girth: usize,
}

impl DesignSpec {
    /// A `(J,K)`-regular design: every column has `j` ones, every row `k`.
    pub fn regular(m: usize, n: usize, j: usize, k: usize, girth: usize) -> Result<Self, ModelError> {
        if j == 0 || k == 0 {
            return Err(ModelError::InvalidSpec(format!("J = {j} and K = {k} must be positive")));
        }
        let spec = DesignSpec { m, n, dv: vec![j; n], dc: vec![k; m], regular: Some((j, k)), girth };
        spec.validate()?;
        Ok(spec)
    }

    /// Arbitrary per-node degree targets.
    pub fn irregular(dv: Vec<usize>, dc: Vec<usize>, girth: usize) -> Result<Self, ModelError> {
        let spec = DesignSpec { m: dc.len(), n: dv.len(), dv, dc, regular: None, girth };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.m == 0 || self.n == 0 {
            return Err(ModelError::InvalidSpec(format!("dimensions {}x{} must be positive", self.m, self.n)));
        }
        if self.girth < 4 || self.girth % 2 != 0 {
            return Err(ModelError::InvalidSpec(format!("target girth {} must be even and at least 4", self.girth)));
        }
        if let Some(j) = self.dv.iter().position(|&d| d > self.m) {
            return Err(ModelError::InvalidSpec(format!("column {j} target {} exceeds m = {}", self.dv[j], self.m)));
        }
        if let Some(i) = self.dc.iter().position(|&d| d > self.n) {
            return Err(ModelError::InvalidSpec(format!("row {i} target {} exceeds n = {}", self.dc[i], self.n)));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Column (variable-node) degree targets.
    pub fn dv(&self) -> &[usize] {
        &self.dv
    }

    /// Row (check-node) degree targets.
    pub fn dc(&self) -> &[usize] {
        &self.dc
    }

    /// `(J, K)` for regular designs.
    pub fn regularity(&self) -> Option<(usize, usize)> {
        self.regular
    }

    pub fn girth(&self) -> usize {
        self.girth
    }

    /// Same design with another target girth.
    pub fn with_girth(&self, girth: usize) -> Result<Self, ModelError> {
        let spec = DesignSpec { girth, ..self.clone() };
        spec.validate()?;
        Ok(spec)
    }

    /// Sum of all degree targets; the objective of the empty matrix.
    pub fn total_target(&self) -> u64 {
        self.dv.iter().chain(&self.dc).map(|&d| d as u64).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutOrigin {
    /// Separated from an integral LP solution.
    Lazy,
    /// Separated from a fractional LP solution.
    User,
    /// Structural inequality known before the search starts.
    ValidInequality,
}

/// `Σ_{cells} X ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cut {
    cells: Vec<Cell>,
    rhs: usize,
    origin: CutOrigin,
}

impl Cut {
    /// The cycle-breaking cut `Σ_{(i,j)∈C} X_ij ≤ |C| − 1`.
    pub fn from_cycle(cycle: &Cycle, origin: CutOrigin) -> Self {
        let cells = cycle.cells();
        let rhs = cells.len() - 1;
        Cut { cells, rhs, origin }
    }

    /// A packing row `Σ X ≤ 1` over `cells`.
    pub fn at_most_one(cells: &[Cell], origin: CutOrigin) -> Result<Self, ModelError> {
        Self::with_rhs(cells, 1, origin)
    }

    pub fn with_rhs(cells: &[Cell], rhs: usize, origin: CutOrigin) -> Result<Self, ModelError> {
        if cells.is_empty() {
            return Err(ModelError::EmptyCut);
        }
        let mut cells = cells.to_vec();
        cells.sort_unstable();
        cells.dedup();
        Ok(Cut { cells, rhs, origin })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn rhs(&self) -> usize {
        self.rhs
    }

    pub fn origin(&self) -> CutOrigin {
        self.origin
    }

    /// `Σ X − rhs` under `value`.
    pub fn violation(&self, value: impl Fn(Cell) -> f64) -> f64 {
        self.cells.iter().map(|&c| value(c)).sum::<f64>() - self.rhs as f64
    }
}

/// Bounds of a cell variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellBound {
    Free,
    Zero,
    One,
}

/// MDD relaxation state: degree rows, cut pool and per-cell fixings.
#[derive(Debug, Clone)]
pub struct MddProblem {
    spec: DesignSpec,
    bounds: Vec<CellBound>,
    cuts: Vec<Cut>,
    seen: HashSet<Vec<Cell>>,
}

/// Result of compiling an [`MddProblem`] to an LP over the free cells only.
#[derive(Debug, Clone)]
pub struct CompiledLp {
    pub lp: LpProblem,
    /// LP column of each free cell, indexed by `row * n + col`.
    pub column_of_cell: Vec<Option<usize>>,
    /// Cell of each cell column (cell columns come first).
    pub cell_of_column: Vec<Cell>,
    /// Objective contribution of rows and columns without free cells.
    pub objective_offset: f64,
    /// Number of LP rows coming from degree constraints.
    pub degree_rows: usize,
    /// Whether each cell (row-major) is fixed to one.
    fixed_ones: Vec<bool>,
    n: usize,
}

impl CompiledLp {
    /// Column index of `cell`, if it is free.
    pub fn column(&self, cell: Cell) -> Option<usize> {
        self.column_of_cell[cell.row * self.n + cell.col]
    }

    pub fn is_fixed_one(&self, cell: Cell) -> bool {
        self.fixed_ones[cell.row * self.n + cell.col]
    }

    /// Translates a cut into an LP row over free cells. Fixed ones move to the
    /// right-hand side; returns `None` when no free cell remains (such a row
    /// carries no information for the LP).
    pub fn row_for(&self, cut: &Cut) -> Option<LpRow> {
        let mut coeffs = Vec::with_capacity(cut.cells().len());
        let mut rhs = cut.rhs() as f64;
        for &cell in cut.cells() {
            if let Some(col) = self.column(cell) {
                coeffs.push((col, 1.0));
            } else if self.is_fixed_one(cell) {
                rhs -= 1.0;
            }
        }
        (!coeffs.is_empty()).then(|| LpRow::new(coeffs, Relation::Le, rhs))
    }

    /// Cell values of an LP point, with fixed cells at their fixed value.
    pub fn cell_values(&self, x: &[f64]) -> Vec<f64> {
        let mut values: Vec<f64> = self.fixed_ones.iter().map(|&one| if one { 1.0 } else { 0.0 }).collect();
        for (col, cell) in self.cell_of_column.iter().enumerate() {
            values[cell.row * self.n + cell.col] = x[col];
        }
        values
    }
}

impl MddProblem {
    pub fn new(spec: DesignSpec) -> Self {
        let cells = spec.m() * spec.n();
        MddProblem { spec, bounds: vec![CellBound::Free; cells], cuts: Vec::new(), seen: HashSet::new() }
    }

    pub fn spec(&self) -> &DesignSpec {
        &self.spec
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn bound(&self, cell: Cell) -> CellBound {
        self.bounds[cell.row * self.spec.n() + cell.col]
    }

    /// Number of X variables (`m·n`).
    pub fn cell_count(&self) -> usize {
        self.bounds.len()
    }

    /// Number of slack variables (`m + n`).
    pub fn slack_count(&self) -> usize {
        self.spec.m() + self.spec.n()
    }

    /// Number of degree equality rows (`m + n`).
    pub fn degree_row_count(&self) -> usize {
        self.spec.m() + self.spec.n()
    }

    /// Appends `cut` unless a cut over the same cells is already pooled.
    pub fn add_cut(&mut self, cut: Cut) -> Result<bool, ModelError> {
        if let Some(&bad) = cut.cells().iter().find(|c| c.row >= self.spec.m() || c.col >= self.spec.n()) {
            return Err(ModelError::CellOutOfRange(bad));
        }
        if !self.seen.insert(cut.cells().to_vec()) {
            return Ok(false);
        }
        self.cuts.push(cut);
        Ok(true)
    }

    pub fn contains_cut(&self, cells: &[Cell]) -> bool {
        self.seen.contains(cells)
    }

    pub fn fix(&mut self, cell: Cell, value: CellBound) -> Result<(), ModelError> {
        if cell.row >= self.spec.m() || cell.col >= self.spec.n() {
            return Err(ModelError::CellOutOfRange(cell));
        }
        let slot = &mut self.bounds[cell.row * self.spec.n() + cell.col];
        match (*slot, value) {
            (CellBound::One, CellBound::Zero) | (CellBound::Zero, CellBound::One) => Err(ModelError::ConflictingFixing(cell)),
            _ => {
                *slot = value;
                Ok(())
            }
        }
    }

    /// Fixes the plan's ones to 1 and zeros to 0.
    pub fn apply_fixing(&mut self, plan: &FixingPlan) -> Result<(), ModelError> {
        if let Some(&c) = plan.ones().intersection(plan.zeros()).next() {
            return Err(ModelError::ConflictingFixing(c));
        }
        for &c in plan.ones().iter().chain(plan.zeros()) {
            if c.row >= self.spec.m() || c.col >= self.spec.n() {
                return Err(ModelError::CellOutOfRange(c));
            }
        }
        for &c in plan.ones() {
            self.fix(c, CellBound::One)?;
        }
        for &c in plan.zeros() {
            self.fix(c, CellBound::Zero)?;
        }
        Ok(())
    }

    /// The full relaxation: `m·n` cell variables in row-major order, then `n`
    /// column slacks and `m` row slacks; `n` column rows, `m` row rows, then
    /// one row per pooled cut.
    pub fn to_lp(&self) -> LpProblem {
        let (m, n) = (self.spec.m(), self.spec.n());
        let cells = m * n;
        let mut lp = LpProblem::new();
        for bound in &self.bounds {
            let (lo, hi) = match bound {
                CellBound::Free => (0.0, 1.0),
                CellBound::Zero => (0.0, 0.0),
                CellBound::One => (1.0, 1.0),
            };
            lp.add_variable(0.0, lo, hi);
        }
        for _ in 0..m + n {
            lp.add_variable(1.0, 0.0, f64::INFINITY);
        }
        for j in 0..n {
            let mut coeffs: Vec<(usize, f64)> = (0..m).map(|i| (i * n + j, 1.0)).collect();
            coeffs.push((cells + j, 1.0));
            lp.add_row(LpRow::new(coeffs, Relation::Eq, self.spec.dv()[j] as f64));
        }
        for i in 0..m {
            let mut coeffs: Vec<(usize, f64)> = (0..n).map(|j| (i * n + j, 1.0)).collect();
            coeffs.push((cells + n + i, 1.0));
            lp.add_row(LpRow::new(coeffs, Relation::Eq, self.spec.dc()[i] as f64));
        }
        for cut in &self.cuts {
            let coeffs = cut.cells().iter().map(|c| (c.row * n + c.col, 1.0)).collect();
            lp.add_row(LpRow::new(coeffs, Relation::Le, cut.rhs() as f64));
        }
        lp
    }

    /// The relaxation with every fixed cell substituted out. Degree rows whose
    /// cells are all fixed are dropped and their slack enters the objective
    /// offset.
    pub fn compile(&self) -> CompiledLp {
        let (m, n) = (self.spec.m(), self.spec.n());
        let mut lp = LpProblem::new();
        let mut column_of_cell = vec![None; m * n];
        let mut cell_of_column = Vec::new();
        let fixed_ones: Vec<bool> = self.bounds.iter().map(|&b| b == CellBound::One).collect();
        for i in 0..m {
            for j in 0..n {
                if self.bounds[i * n + j] == CellBound::Free {
                    column_of_cell[i * n + j] = Some(lp.add_variable(0.0, 0.0, 1.0));
                    cell_of_column.push(Cell::new(i, j));
                }
            }
        }
        let mut offset = 0.0;
        let mut degree_rows = 0;
        let line_rows = (0..n)
            .map(|j| ((0..m).map(move |i| i * n + j).collect::<Vec<_>>(), self.spec.dv()[j]))
            .chain((0..m).map(|i| ((0..n).map(move |j| i * n + j).collect::<Vec<_>>(), self.spec.dc()[i])));
        for (line, target) in line_rows {
            let fixed = line.iter().filter(|&&k| fixed_ones[k]).count() as f64;
            let free: Vec<usize> = line.iter().filter_map(|&k| column_of_cell[k]).collect();
            let rhs = target as f64 - fixed;
            if free.is_empty() {
                offset += rhs;
                continue;
            }
            let slack = lp.add_variable(1.0, 0.0, f64::INFINITY);
            let mut coeffs: Vec<(usize, f64)> = free.into_iter().map(|c| (c, 1.0)).collect();
            coeffs.push((slack, 1.0));
            lp.add_row(LpRow::new(coeffs, Relation::Eq, rhs));
            degree_rows += 1;
        }
        let mut compiled = CompiledLp {
            lp,
            column_of_cell,
            cell_of_column,
            objective_offset: offset,
            degree_rows,
            fixed_ones,
            n,
        };
        let rows: Vec<LpRow> = self.cuts.iter().filter_map(|c| compiled.row_for(c)).collect();
        for row in rows {
            compiled.lp.add_row(row);
        }
        compiled
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tanner::Node;

    #[test]
    fn spec_validation() {
        assert!(DesignSpec::regular(10, 20, 3, 6, 8).is_ok());
        assert!(DesignSpec::regular(10, 20, 3, 6, 5).is_err());
        assert!(DesignSpec::regular(10, 20, 3, 6, 2).is_err());
        assert!(DesignSpec::regular(0, 20, 3, 6, 6).is_err());
        assert!(DesignSpec::regular(2, 20, 3, 6, 6).is_err());
        assert!(DesignSpec::regular(10, 20, 0, 6, 6).is_err());
        let irregular = DesignSpec::irregular(vec![1, 2, 1], vec![2, 2], 6).unwrap();
        assert_eq!((irregular.m(), irregular.n(), irregular.total_target()), (2, 3, 8));
        assert_eq!(irregular.regularity(), None);
    }

    #[test]
    fn counts() {
        let p = MddProblem::new(DesignSpec::regular(10, 20, 3, 6, 8).unwrap());
        assert_eq!((p.cell_count(), p.slack_count(), p.degree_row_count()), (200, 30, 30));
        let lp = p.to_lp();
        assert_eq!((lp.num_variables(), lp.num_rows()), (230, 30));
    }

    #[test]
    fn cut_pool_deduplicates() {
        let mut p = MddProblem::new(DesignSpec::regular(10, 20, 3, 6, 8).unwrap());
        let cycle = Cycle::from_nodes(&[Node::Var(0), Node::Check(0), Node::Var(1), Node::Check(1)]).unwrap();
        let cut = Cut::from_cycle(&cycle, CutOrigin::Lazy);
        assert_eq!((cut.cells().len(), cut.rhs()), (4, 3));
        assert!(p.add_cut(cut.clone()).unwrap());
        assert!(!p.add_cut(Cut::from_cycle(&cycle, CutOrigin::User)).unwrap());
        assert_eq!(p.cuts().len(), 1);
        let six = Cycle::from_nodes(&[
            Node::Var(0),
            Node::Check(0),
            Node::Var(1),
            Node::Check(1),
            Node::Var(2),
            Node::Check(2),
        ])
        .unwrap();
        assert_eq!(Cut::from_cycle(&six, CutOrigin::Lazy).rhs(), 5);
        assert!(p.add_cut(Cut::at_most_one(&[Cell::new(10, 0)], CutOrigin::User).unwrap()).is_err());
    }

    #[test]
    fn conflicting_fix_is_rejected() {
        let mut p = MddProblem::new(DesignSpec::regular(3, 6, 1, 2, 6).unwrap());
        p.fix(Cell::new(0, 0), CellBound::One).unwrap();
        assert_eq!(p.fix(Cell::new(0, 0), CellBound::Zero), Err(ModelError::ConflictingFixing(Cell::new(0, 0))));
    }

    #[test]
    fn compile_moves_fixed_ones_to_rhs() {
        let mut p = MddProblem::new(DesignSpec::regular(2, 2, 1, 1, 4).unwrap());
        p.fix(Cell::new(0, 0), CellBound::One).unwrap();
        p.fix(Cell::new(0, 1), CellBound::Zero).unwrap();
        let c = p.compile();
        // free cells (1,0) and (1,1); row 0 has no free cell and drops out
        assert_eq!(c.cell_of_column, vec![Cell::new(1, 0), Cell::new(1, 1)]);
        assert_eq!(c.degree_rows, 3);
        assert_eq!(c.objective_offset, 0.0);
        let cut = Cut::with_rhs(&[Cell::new(0, 0), Cell::new(1, 0)], 1, CutOrigin::User).unwrap();
        let row = c.row_for(&cut).unwrap();
        assert_eq!(row.rhs(), 0.0);
        assert_eq!(row.coefficients(), &[(0, 1.0)]);
    }
}
