//! Bounded-variable revised simplex.
//!
//! Every row `a·x (= | ≤) b` gets a logical variable `s` with `a·x + s = b`,
//! bounded `[0, 0]` for equalities and `[0, ∞)` for `≤` rows, so the slack
//! basis is always available as a starting point. Equality logicals act as
//! the artificials of a two-phase method: phase 1 minimises the total bound
//! violation of the basic variables, phase 2 the real objective.
//!
//! When the starting basis is dual feasible (always the case after adding a
//! cut row or changing bounds of a previously optimal basis) the dual simplex
//! is used instead; it reaches the same optimum in far fewer pivots.
//! The basis inverse is kept dense and updated in product form, with a fresh
//! Gauss-Jordan factorisation every [`REFACTOR_INTERVAL`] pivots.

use std::collections::BTreeSet;
use std::time::Instant;

use thiserror::Error;

/// Primal feasibility tolerance of reported solutions.
pub const FEAS_TOL: f64 = 1e-7;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-11;
const REFACTOR_INTERVAL: usize = 100;
const BLAND_TRIGGER: usize = 50;
const COST_PERTURBATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("deadline reached")]
    Deadline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Le,
}

/// Sparse row `Σ coeff·x  (= | ≤)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    coeffs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

impl LpRow {
    pub fn new(coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        LpRow { coeffs, relation, rhs }
    }

    pub fn coefficients(&self) -> &[(usize, f64)] {
        &self.coeffs
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn rhs(&self) -> f64 {
        self.rhs
    }
}

/// `min c·x` subject to rows and `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable and returns its index.
    pub fn add_variable(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, row: LpRow) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn num_variables(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for (k, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::InvalidProblem(format!("variable {k} has bounds [{lo}, {hi}]")));
            }
            if !self.objective[k].is_finite() {
                return Err(LpError::InvalidProblem(format!("variable {k} has cost {}", self.objective[k])));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            validate_row(row, self.objective.len()).map_err(|e| LpError::InvalidProblem(format!("row {r}: {e}")))?;
        }
        Ok(())
    }
}

fn validate_row(row: &LpRow, vars: usize) -> Result<(), String> {
    if !row.rhs.is_finite() {
        return Err(format!("right-hand side {}", row.rhs));
    }
    for &(k, a) in &row.coeffs {
        if k >= vars {
            return Err(format!("references undeclared variable {k}"));
        }
        if !a.is_finite() {
            return Err(format!("coefficient {a} on variable {k}"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// Status of every structural variable followed by every row logical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the structural variables.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Lagrangian bound `b·y + Σ min(d_k l_k, d_k u_k)` of the final basis.
    pub dual_bound: f64,
    pub basis: Basis,
    pub iterations: usize,
}

/// Which algorithm handles a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Dual simplex when the starting basis is dual feasible, primal otherwise.
    #[default]
    Auto,
    /// Always the two-phase primal simplex.
    Primal,
}

/// Solves `p`, optionally starting from `warm`.
pub fn solve(p: &LpProblem, warm: Option<&Basis>) -> Result<LpSolution, LpError> {
    let mut s = Simplex::new(p)?;
    if let Some(b) = warm {
        s.load_basis(b);
    }
    s.solve()
}

/// Reusable simplex workspace: rows may be appended and bounds changed
/// between solves, and each solve starts from the previous final basis.
#[derive(Debug, Clone)]
pub struct Simplex {
    nv: usize,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<LpRow>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    x: Vec<f64>,
    binv: Vec<f64>,
    factored: bool,
    updates: usize,
    iterations: usize,
    method: Method,
    bland: bool,
    deadline: Option<Instant>,
}

impl Simplex {
    pub fn new(p: &LpProblem) -> Result<Self, LpError> {
        p.validate()?;
        let nv = p.num_variables();
        let mut s = Simplex {
            nv,
            cost: p.objective.clone(),
            lower: p.lower.clone(),
            upper: p.upper.clone(),
            cols: vec![Vec::new(); nv],
            rows: Vec::new(),
            status: Vec::new(),
            head: Vec::new(),
            x: Vec::new(),
            binv: Vec::new(),
            factored: true,
            updates: 0,
            iterations: 0,
            method: Method::Auto,
            bland: false,
            deadline: None,
        };
        for k in 0..nv {
            s.status.push(s.resting_status(k));
            s.x.push(0.0);
        }
        for row in &p.rows {
            s.push_row(row.clone());
        }
        s.factored = false;
        Ok(s)
    }

    pub fn set_method(&mut self, method: Method) {
        self.method = method;
    }

    /// Solves give up with [`LpError::Deadline`] once `deadline` passes.
    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    /// Current value of row `r`'s logical (its slack for `≤` rows).
    pub fn logical_value(&self, r: usize) -> f64 {
        self.x[self.nv + r]
    }

    pub fn logical_is_basic(&self, r: usize) -> bool {
        self.status[self.nv + r] == VarStatus::Basic
    }

    /// Deletes rows whose logical is basic. The inverse shrinks in place:
    /// with the logical's position and its row removed, what remains is the
    /// inverse of the smaller basis.
    pub fn remove_rows(&mut self, rows: &BTreeSet<usize>) -> Result<(), LpError> {
        let nr = self.nr();
        if let Some(&r) = rows.iter().find(|&&r| r >= nr || !self.logical_is_basic(r)) {
            return Err(LpError::InvalidProblem(format!("row {r} cannot be removed")));
        }
        if rows.is_empty() {
            return Ok(());
        }
        let mut new_index = vec![usize::MAX; nr];
        let mut next = 0;
        for (r, slot) in new_index.iter_mut().enumerate() {
            if !rows.contains(&r) {
                *slot = next;
                next += 1;
            }
        }
        let kept_positions: Vec<usize> =
            (0..nr).filter(|&p| self.head[p] < self.nv || !rows.contains(&(self.head[p] - self.nv))).collect();
        let kept_rows: Vec<usize> = (0..nr).filter(|r| !rows.contains(r)).collect();
        if self.factored {
            let mut binv = Vec::with_capacity(next * next);
            for &p in &kept_positions {
                binv.extend(kept_rows.iter().map(|&r| self.binv[p * nr + r]));
            }
            self.binv = binv;
        }
        let remap = |k: usize| if k < self.nv { k } else { self.nv + new_index[k - self.nv] };
        self.head = kept_positions.iter().map(|&p| remap(self.head[p])).collect();
        for col in &mut self.cols {
            col.retain(|&(r, _)| !rows.contains(&r));
            for entry in col.iter_mut() {
                entry.0 = new_index[entry.0];
            }
        }
        let keep_var = |k: usize| k < self.nv || !rows.contains(&(k - self.nv));
        let total = self.nv + nr;
        let keep: Vec<bool> = (0..total).map(keep_var).collect();
        let filter = |v: &mut Vec<f64>| {
            let mut k = 0;
            v.retain(|_| {
                k += 1;
                keep[k - 1]
            });
        };
        filter(&mut self.cost);
        filter(&mut self.lower);
        filter(&mut self.upper);
        filter(&mut self.x);
        let mut k = 0;
        self.status.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        let mut r = 0;
        self.rows.retain(|_| {
            r += 1;
            !rows.contains(&(r - 1))
        });
        Ok(())
    }

    pub fn num_variables(&self) -> usize {
        self.nv
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Total pivots performed by this workspace.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        assert!(var < self.nv && lower <= upper);
        self.lower[var] = lower;
        self.upper[var] = upper;
        if self.status[var] != VarStatus::Basic {
            self.status[var] = match self.status[var] {
                VarStatus::AtUpper if upper.is_finite() => VarStatus::AtUpper,
                _ => self.resting_status(var),
            };
        }
    }

    /// Appends a row; its logical enters the basis so the current basis
    /// stays valid (and dual feasible if it was).
    pub fn add_row(&mut self, row: LpRow) -> Result<usize, LpError> {
        Ok(self.add_rows(vec![row])?[0])
    }

    /// Appends several rows at once, rebuilding the inverse a single time.
    pub fn add_rows(&mut self, rows: Vec<LpRow>) -> Result<Vec<usize>, LpError> {
        for row in &rows {
            validate_row(row, self.nv).map_err(LpError::InvalidProblem)?;
        }
        let nr_old = self.rows.len();
        let nr = nr_old + rows.len();
        let factored = self.factored;
        let mut position = vec![usize::MAX; self.nv];
        for (p, &h) in self.head.iter().enumerate() {
            if h < self.nv {
                position[h] = p;
            }
        }
        let mut tail = Vec::new();
        if factored {
            // each new inverse row is −(a_B)ᵀ B⁻¹ over the new row's basic columns
            tail = vec![0.0; rows.len() * nr];
            for (i, row) in rows.iter().enumerate() {
                let dst = &mut tail[i * nr..(i + 1) * nr];
                for &(k, a) in &row.coeffs {
                    let p = position[k];
                    if p == usize::MAX || a == 0.0 {
                        continue;
                    }
                    let src = &self.binv[p * nr_old..(p + 1) * nr_old];
                    for (d, &b) in dst.iter_mut().zip(src) {
                        *d -= a * b;
                    }
                }
                dst[nr_old + i] = 1.0;
            }
        }
        let added: Vec<usize> = rows.into_iter().map(|row| self.push_row(row)).collect();
        if factored {
            let mut binv = vec![0.0; nr * nr];
            for p in 0..nr_old {
                binv[p * nr..p * nr + nr_old].copy_from_slice(&self.binv[p * nr_old..(p + 1) * nr_old]);
            }
            binv[nr_old * nr..].copy_from_slice(&tail);
            self.binv = binv;
            self.factored = true;
        }
        Ok(added)
    }

    fn push_row(&mut self, row: LpRow) -> usize {
        let r = self.rows.len();
        for &(k, a) in &row.coeffs {
            if a != 0.0 {
                self.cols[k].push((r, a));
            }
        }
        let upper = match row.relation {
            Relation::Eq => 0.0,
            Relation::Le => f64::INFINITY,
        };
        self.cost.push(0.0);
        self.lower.push(0.0);
        self.upper.push(upper);
        self.status.push(VarStatus::Basic);
        self.x.push(0.0);
        self.head.push(self.nv + r);
        self.rows.push(row);
        self.factored = false;
        r
    }

    pub fn basis(&self) -> Basis {
        Basis { status: self.status.clone() }
    }

    /// Installs a starting basis. Bases from a smaller problem (fewer rows)
    /// are extended with basic logicals; malformed ones are ignored.
    pub fn load_basis(&mut self, basis: &Basis) -> bool {
        let total = self.nv + self.rows.len();
        if basis.status.len() < self.nv || basis.status.len() > total {
            return false;
        }
        let mut status = basis.status.clone();
        status.resize(total, VarStatus::Basic);
        let head: Vec<usize> = (0..total).filter(|&k| status[k] == VarStatus::Basic).collect();
        if head.len() != self.rows.len() {
            return false;
        }
        for k in 0..total {
            if status[k] != VarStatus::Basic {
                status[k] = self.feasible_status(k, status[k]);
            }
        }
        self.status = status;
        self.head = head;
        self.factored = false;
        true
    }

    /// Drops back to the all-logical basis.
    pub fn reset_basis(&mut self) {
        let total = self.nv + self.rows.len();
        for k in 0..total {
            self.status[k] = if k < self.nv { self.resting_status(k) } else { VarStatus::Basic };
        }
        self.head = (self.nv..total).collect();
        self.factored = false;
    }

    fn resting_status(&self, k: usize) -> VarStatus {
        if self.lower[k].is_finite() {
            VarStatus::AtLower
        } else if self.upper[k].is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        }
    }

    fn feasible_status(&self, k: usize, wanted: VarStatus) -> VarStatus {
        match wanted {
            VarStatus::AtLower if self.lower[k].is_finite() => VarStatus::AtLower,
            VarStatus::AtUpper if self.upper[k].is_finite() => VarStatus::AtUpper,
            _ => self.resting_status(k),
        }
    }

    /// Solves from the current basis; on numerical trouble retries once from
    /// the slack basis with Bland's rule throughout.
    pub fn solve(&mut self) -> Result<LpSolution, LpError> {
        match self.try_solve() {
            Ok(s) => Ok(s),
            Err(LpError::NumericalBreakdown(_)) if !self.past_deadline() => {
                self.reset_basis();
                self.bland = true;
                let out = self.try_solve();
                self.bland = false;
                out
            }
            Err(e) => Err(e),
        }
    }

    fn try_solve(&mut self) -> Result<LpSolution, LpError> {
        let start = self.iterations;
        for attempt in 0..3 {
            if !self.factored || self.updates >= REFACTOR_INTERVAL || attempt > 0 {
                self.refactor()?;
            }
            self.compute_primal();
            let status = if self.method == Method::Auto && self.make_dual_feasible() {
                self.compute_primal();
                let cost = self.perturb_costs();
                let status = self.dual();
                self.cost = cost;
                match status? {
                    LpStatus::Optimal => self.primal()?,
                    other => other,
                }
            } else {
                self.primal()?
            };
            if status != LpStatus::Optimal {
                return Ok(self.solution(status, start));
            }
            self.compute_primal();
            if self.primal_feasible(FEAS_TOL) {
                return Ok(self.solution(status, start));
            }
        }
        Err(LpError::NumericalBreakdown("solution violates feasibility after refactorisation".into()))
    }

    fn nr(&self) -> usize {
        self.rows.len()
    }

    fn is_fixed(&self, k: usize) -> bool {
        self.lower[k] == self.upper[k]
    }

    fn col_dot(&self, k: usize, v: &[f64]) -> f64 {
        if k < self.nv {
            self.cols[k].iter().map(|&(r, a)| a * v[r]).sum()
        } else {
            v[k - self.nv]
        }
    }

    fn for_col(&self, k: usize, mut f: impl FnMut(usize, f64)) {
        if k < self.nv {
            for &(r, a) in &self.cols[k] {
                f(r, a);
            }
        } else {
            f(k - self.nv, 1.0);
        }
    }

    fn ftran(&self, k: usize) -> Vec<f64> {
        let nr = self.nr();
        let mut alpha = vec![0.0; nr];
        self.for_col(k, |r, a| {
            for (i, out) in alpha.iter_mut().enumerate() {
                *out += self.binv[i * nr + r] * a;
            }
        });
        alpha
    }

    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let nr = self.nr();
        let mut y = vec![0.0; nr];
        for (p, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                for (out, &b) in y.iter_mut().zip(&self.binv[p * nr..(p + 1) * nr]) {
                    *out += c * b;
                }
            }
        }
        y
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        for _ in 0..2 {
            let singular = self.invert();
            if singular.0.is_empty() {
                self.factored = true;
                self.updates = 0;
                return Ok(());
            }
            // swap dependent columns for the logicals of uncovered rows
            let (positions, rows) = singular;
            for (&p, &r) in positions.iter().zip(&rows) {
                let out = self.head[p];
                self.status[out] = self.resting_status(out);
                let logical = self.nv + r;
                self.status[logical] = VarStatus::Basic;
                self.head[p] = logical;
            }
        }
        Err(LpError::NumericalBreakdown("basis stays singular after repair".into()))
    }

    /// Inverts the basis matrix. Basic logicals are unit columns, so after
    /// ordering `B = [[B₁₁, 0], [B₂₁, I]]` only the square block `B₁₁` of
    /// structural columns on the rows without a basic logical needs
    /// elimination, and `B⁻¹ = [[B₁₁⁻¹, 0], [−B₂₁B₁₁⁻¹, I]]`. Returns the
    /// basis positions and rows left without a pivot when the basis is
    /// singular.
    fn invert(&mut self) -> Singular {
        let nr = self.nr();
        let mut logical_pos = vec![usize::MAX; nr];
        let mut structural = Vec::new();
        for (p, &k) in self.head.iter().enumerate() {
            if k >= self.nv {
                logical_pos[k - self.nv] = p;
            } else {
                structural.push(p);
            }
        }
        let open_rows: Vec<usize> = (0..nr).filter(|&r| logical_pos[r] == usize::MAX).collect();
        if open_rows.len() != structural.len() {
            return self.invert_dense();
        }
        let s = structural.len();
        let mut slot = vec![usize::MAX; nr];
        for (i, &r) in open_rows.iter().enumerate() {
            slot[r] = i;
        }
        let mut b11 = vec![0.0; s * s];
        for (c, &p) in structural.iter().enumerate() {
            self.for_col(self.head[p], |r, a| {
                if slot[r] != usize::MAX {
                    b11[slot[r] * s + c] = a;
                }
            });
        }
        let Some(inv11) = gauss_jordan(b11, s) else {
            return self.invert_dense();
        };
        let mut binv = vec![0.0; nr * nr];
        for (c, &p) in structural.iter().enumerate() {
            for (i, &r) in open_rows.iter().enumerate() {
                binv[p * nr + r] = inv11[c * s + i];
            }
        }
        for r in 0..nr {
            if logical_pos[r] != usize::MAX {
                binv[logical_pos[r] * nr + r] = 1.0;
            }
        }
        for (c, &p) in structural.iter().enumerate() {
            let k = self.head[p];
            for &(r, a) in &self.cols[k] {
                let lp = logical_pos[r];
                if lp == usize::MAX {
                    continue;
                }
                for (i, &rr) in open_rows.iter().enumerate() {
                    binv[lp * nr + rr] -= a * inv11[c * s + i];
                }
            }
        }
        self.binv = binv;
        (Vec::new(), Vec::new())
    }

    /// Gauss-Jordan inversion of the whole basis matrix, reporting the
    /// positions without a pivot and the rows they leave uncovered.
    fn invert_dense(&mut self) -> Singular {
        let nr = self.nr();
        let mut b = vec![0.0; nr * nr];
        for (p, &k) in self.head.iter().enumerate() {
            self.for_col(k, |r, a| b[r * nr + p] = a);
        }
        let mut inv = vec![0.0; nr * nr];
        for i in 0..nr {
            inv[i * nr + i] = 1.0;
        }
        let mut row_used = vec![false; nr];
        let mut pivot_row = vec![usize::MAX; nr];
        let mut bad_positions = Vec::new();
        for p in 0..nr {
            let Some(r) = eliminate(&mut b, &mut inv, nr, p, &mut row_used) else {
                bad_positions.push(p);
                continue;
            };
            pivot_row[p] = r;
        }
        if !bad_positions.is_empty() {
            let free_rows: Vec<usize> = (0..nr).filter(|&r| !row_used[r]).collect();
            return (bad_positions, free_rows);
        }
        let mut binv = vec![0.0; nr * nr];
        for p in 0..nr {
            let r = pivot_row[p];
            binv[p * nr..(p + 1) * nr].copy_from_slice(&inv[r * nr..(r + 1) * nr]);
        }
        self.binv = binv;
        (Vec::new(), Vec::new())
    }

    fn nonbasic_value(&self, k: usize) -> f64 {
        match self.status[k] {
            VarStatus::AtLower => self.lower[k],
            VarStatus::AtUpper => self.upper[k],
            VarStatus::Free | VarStatus::Basic => 0.0,
        }
    }

    fn compute_primal(&mut self) {
        let nr = self.nr();
        let total = self.nv + nr;
        let mut resid: Vec<f64> = self.rows.iter().map(|r| r.rhs).collect();
        for k in 0..total {
            if self.status[k] != VarStatus::Basic {
                let v = self.nonbasic_value(k);
                self.x[k] = v;
                if v != 0.0 {
                    self.for_col(k, |r, a| resid[r] -= a * v);
                }
            }
        }
        for p in 0..nr {
            let row = &self.binv[p * nr..(p + 1) * nr];
            self.x[self.head[p]] = row.iter().zip(&resid).map(|(b, r)| b * r).sum();
        }
    }

    fn duals(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.head.iter().map(|&k| self.cost[k]).collect();
        self.btran(&cb)
    }

    fn reduced_costs(&self, y: &[f64]) -> Vec<f64> {
        let total = self.nv + self.nr();
        (0..total)
            .map(|k| if self.status[k] == VarStatus::Basic { 0.0 } else { self.cost[k] - self.col_dot(k, y) })
            .collect()
    }

    /// Moves boxed nonbasic variables to the bound their reduced cost prefers;
    /// returns whether the basis is then dual feasible.
    fn make_dual_feasible(&mut self) -> bool {
        let d = self.reduced_costs(&self.duals());
        let mut feasible = true;
        for (k, &dk) in d.iter().enumerate() {
            if self.status[k] == VarStatus::Basic || self.is_fixed(k) {
                continue;
            }
            let ok = match self.status[k] {
                VarStatus::AtLower => dk >= -DUAL_TOL,
                VarStatus::AtUpper => dk <= DUAL_TOL,
                VarStatus::Free => dk.abs() <= DUAL_TOL,
                VarStatus::Basic => true,
            };
            if ok {
                continue;
            }
            if dk < 0.0 && self.upper[k].is_finite() {
                self.status[k] = VarStatus::AtUpper;
            } else if dk > 0.0 && self.lower[k].is_finite() {
                self.status[k] = VarStatus::AtLower;
            } else {
                feasible = false;
            }
        }
        feasible
    }

    /// Shifts the cost of each movable nonbasic variable away from its
    /// bound's dual limit, so a dual feasible basis stays dual feasible while
    /// ties in the dual ratio test disappear. Returns the true costs.
    fn perturb_costs(&mut self) -> Vec<f64> {
        let saved = self.cost.clone();
        for k in 0..self.nv + self.nr() {
            if self.status[k] == VarStatus::Basic || self.is_fixed(k) {
                continue;
            }
            let spread = (k.wrapping_mul(2_654_435_761) % 1024) as f64 / 1024.0;
            let delta = COST_PERTURBATION * (1.0 + spread) * (1.0 + saved[k].abs());
            match self.status[k] {
                VarStatus::AtLower => self.cost[k] += delta,
                VarStatus::AtUpper => self.cost[k] -= delta,
                VarStatus::Free | VarStatus::Basic => {}
            }
        }
        saved
    }

    fn infeasibility(&self, k: usize) -> f64 {
        let v = self.x[k];
        if v < self.lower[k] - PRIMAL_TOL {
            self.lower[k] - v
        } else if v > self.upper[k] + PRIMAL_TOL {
            v - self.upper[k]
        } else {
            0.0
        }
    }

    fn primal_feasible(&self, tol: f64) -> bool {
        let total = self.nv + self.nr();
        if (0..total).any(|k| self.x[k] < self.lower[k] - tol || self.x[k] > self.upper[k] + tol) {
            return false;
        }
        // residuals checked against the rows themselves, not the inverse
        let mut act = vec![0.0; self.nr()];
        for k in 0..total {
            let v = self.x[k];
            if v != 0.0 {
                self.for_col(k, |r, a| act[r] += a * v);
            }
        }
        act.iter().zip(&self.rows).all(|(a, row)| (a - row.rhs).abs() <= tol * (1.0 + row.rhs.abs()))
    }

    fn past_deadline(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn guard(&self, start: usize) -> Result<(), LpError> {
        if (self.iterations - start) % 32 == 0 && self.past_deadline() {
            return Err(LpError::Deadline);
        }
        let limit = 50 * (self.nv + self.nr()) + 10_000;
        if self.iterations - start > limit {
            Err(LpError::NumericalBreakdown(format!("no convergence within {limit} pivots")))
        } else {
            Ok(())
        }
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let nr = self.nr();
        let piv = alpha[r];
        for c in 0..nr {
            self.binv[r * nr + c] /= piv;
        }
        let (before, rest) = self.binv.split_at_mut(r * nr);
        let (prow, after) = rest.split_at_mut(nr);
        for (i, &a) in alpha.iter().enumerate() {
            if i == r || a == 0.0 {
                continue;
            }
            let target = if i < r { &mut before[i * nr..(i + 1) * nr] } else { &mut after[(i - r - 1) * nr..(i - r) * nr] };
            for (t, &pv) in target.iter_mut().zip(prow.iter()) {
                *t -= a * pv;
            }
        }
        self.head[r] = q;
        self.status[q] = VarStatus::Basic;
        self.updates += 1;
        self.iterations += 1;
    }

    fn primal(&mut self) -> Result<LpStatus, LpError> {
        let start = self.iterations;
        let total = self.nv + self.nr();
        let mut degenerate = 0usize;
        loop {
            self.guard(start)?;
            if self.updates >= REFACTOR_INTERVAL {
                self.refactor()?;
                self.compute_primal();
            }
            let phase1 = self.head.iter().any(|&k| self.infeasibility(k) > 0.0);
            let cb: Vec<f64> = self
                .head
                .iter()
                .map(|&k| {
                    if !phase1 {
                        self.cost[k]
                    } else if self.x[k] < self.lower[k] - PRIMAL_TOL {
                        -1.0
                    } else if self.x[k] > self.upper[k] + PRIMAL_TOL {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let y = self.btran(&cb);
            let bland = self.bland || degenerate > BLAND_TRIGGER;
            let mut entering: Option<(usize, f64)> = None;
            for k in 0..total {
                if self.status[k] == VarStatus::Basic || self.is_fixed(k) {
                    continue;
                }
                let ck = if phase1 { 0.0 } else { self.cost[k] };
                let dk = ck - self.col_dot(k, &y);
                let eligible = match self.status[k] {
                    VarStatus::AtLower => dk < -DUAL_TOL,
                    VarStatus::AtUpper => dk > DUAL_TOL,
                    VarStatus::Free => dk.abs() > DUAL_TOL,
                    VarStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                match entering {
                    None => entering = Some((k, dk)),
                    Some((_, best)) if !bland && dk.abs() > best.abs() => entering = Some((k, dk)),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some((q, dq)) = entering else {
                return Ok(if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal });
            };
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);

            // ratio test; x_B(t) = x_B − dir·t·α
            let mut t_best = match dir > 0.0 {
                true => self.upper[q] - self.x[q],
                false => self.x[q] - self.lower[q],
            };
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_key = (0.0f64, usize::MAX);
            for (p, &a) in alpha.iter().enumerate() {
                let rate = -dir * a;
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let k = self.head[p];
                let (v, lo, hi) = (self.x[k], self.lower[k], self.upper[k]);
                let below = phase1 && v < lo - PRIMAL_TOL;
                let above = phase1 && v > hi + PRIMAL_TOL;
                let (limit, to_upper) = if rate < 0.0 {
                    if below {
                        continue;
                    } else if above {
                        ((v - hi) / -rate, true)
                    } else if lo.is_finite() {
                        ((v - lo).max(0.0) / -rate, false)
                    } else {
                        continue;
                    }
                } else if above {
                    continue;
                } else if below {
                    ((lo - v) / rate, false)
                } else if hi.is_finite() {
                    ((hi - v).max(0.0) / rate, true)
                } else {
                    continue;
                };
                let key = if bland { (0.0, k) } else { (-a.abs(), k) };
                let take = if limit < t_best - 1e-12 {
                    true
                } else {
                    limit <= t_best + 1e-12 && leave.is_some() && key < leave_key
                };
                if take {
                    t_best = t_best.min(limit);
                    leave = Some((p, to_upper));
                    leave_key = key;
                }
            }
            if !t_best.is_finite() {
                if phase1 {
                    return Err(LpError::NumericalBreakdown("unbounded phase-1 ray".into()));
                }
                return Ok(LpStatus::Unbounded);
            }
            let t = t_best.max(0.0);
            degenerate = if t < 1e-12 { degenerate + 1 } else { 0 };
            self.x[q] += dir * t;
            for (p, &a) in alpha.iter().enumerate() {
                let k = self.head[p];
                self.x[k] -= dir * t * a;
            }
            match leave {
                None => {
                    // bound flip of the entering variable
                    self.status[q] = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
                    self.x[q] = self.nonbasic_value(q);
                    self.iterations += 1;
                }
                Some((p, to_upper)) => {
                    let out = self.head[p];
                    self.status[out] = if to_upper { VarStatus::AtUpper } else { VarStatus::AtLower };
                    self.x[out] = self.nonbasic_value(out);
                    self.pivot(p, q, &alpha);
                }
            }
        }
    }

    fn dual(&mut self) -> Result<LpStatus, LpError> {
        let start = self.iterations;
        let total = self.nv + self.nr();
        let mut d = self.reduced_costs(&self.duals());
        let mut row_alpha = vec![0.0; total];
        let mut degenerate = 0usize;
        loop {
            self.guard(start)?;
            if self.updates >= REFACTOR_INTERVAL {
                self.refactor()?;
                self.compute_primal();
                d = self.reduced_costs(&self.duals());
            }
            let bland = self.bland || degenerate > BLAND_TRIGGER;
            // Bland: the infeasible basic variable of smallest index leaves
            let mut leave: Option<(usize, f64)> = None;
            for (p, &k) in self.head.iter().enumerate() {
                let inf = self.infeasibility(k);
                if inf <= 0.0 {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((bp, _)) if bland => k < self.head[bp],
                    Some((_, best)) => inf > best,
                };
                if better {
                    leave = Some((p, inf));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(LpStatus::Optimal);
            };
            let out = self.head[r];
            let increase = self.x[out] < self.lower[out];
            let target = if increase { self.lower[out] } else { self.upper[out] };
            let nr = self.nr();
            let rho: Vec<f64> = self.binv[r * nr..(r + 1) * nr].to_vec();
            let mut entering: Option<(usize, f64, f64)> = None;
            for k in 0..total {
                if self.status[k] == VarStatus::Basic || self.is_fixed(k) {
                    row_alpha[k] = 0.0;
                    continue;
                }
                let a = self.col_dot(k, &rho);
                row_alpha[k] = a;
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let eligible = match (self.status[k], increase) {
                    (VarStatus::AtLower, true) => a < 0.0,
                    (VarStatus::AtUpper, true) => a > 0.0,
                    (VarStatus::AtLower, false) => a > 0.0,
                    (VarStatus::AtUpper, false) => a < 0.0,
                    (VarStatus::Free, _) => true,
                    (VarStatus::Basic, _) => false,
                };
                if !eligible {
                    continue;
                }
                let ratio = d[k].abs() / a.abs();
                let better = match entering {
                    None => true,
                    Some((_, best_ratio, best_a)) => {
                        if bland {
                            ratio < best_ratio - 1e-12
                        } else {
                            ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && a.abs() > best_a.abs())
                        }
                    }
                };
                if better {
                    entering = Some((k, ratio, a));
                }
            }
            let Some((q, _, a_rq)) = entering else {
                return Ok(LpStatus::Infeasible);
            };
            let alpha = self.ftran(q);
            if (alpha[r] - a_rq).abs() > 1e-6 * (1.0 + a_rq.abs()) {
                // pivot row and column disagree: the inverse has drifted
                self.refactor()?;
                self.compute_primal();
                d = self.reduced_costs(&self.duals());
                continue;
            }
            let theta_p = (self.x[out] - target) / alpha[r];
            self.x[q] += theta_p;
            for (p, &a) in alpha.iter().enumerate() {
                let k = self.head[p];
                self.x[k] -= theta_p * a;
            }
            let theta_d = d[q] / a_rq;
            degenerate = if theta_d.abs() < 1e-12 { degenerate + 1 } else { 0 };
            for k in 0..total {
                if self.status[k] != VarStatus::Basic && row_alpha[k] != 0.0 {
                    d[k] -= theta_d * row_alpha[k];
                }
            }
            d[q] = 0.0;
            d[out] = -theta_d;
            self.status[out] = if increase { VarStatus::AtLower } else { VarStatus::AtUpper };
            self.x[out] = target;
            self.pivot(r, q, &alpha);
        }
    }

    fn solution(&self, status: LpStatus, start: usize) -> LpSolution {
        let x: Vec<f64> = self.x[..self.nv].to_vec();
        let objective = x.iter().zip(&self.cost).map(|(v, c)| v * c).sum();
        let dual_bound = if status == LpStatus::Optimal { self.dual_bound() } else { f64::NEG_INFINITY };
        LpSolution { status, x, objective, dual_bound, basis: self.basis(), iterations: self.iterations - start }
    }

    fn dual_bound(&self) -> f64 {
        let y = self.duals();
        let d = self.reduced_costs(&y);
        let mut bound: f64 = self.rows.iter().zip(&y).map(|(row, yr)| row.rhs * yr).sum();
        for (k, &dk) in d.iter().enumerate() {
            if self.status[k] == VarStatus::Basic || dk.abs() <= DUAL_TOL {
                continue;
            }
            bound += if dk > 0.0 { dk * self.lower[k] } else { dk * self.upper[k] };
        }
        bound
    }
}

type Singular = (Vec<usize>, Vec<usize>);

/// Pivots column `p` of the row-major `n × n` matrix `b` on its largest
/// entry among unused rows, applying the same row operations to `inv`.
fn eliminate(b: &mut [f64], inv: &mut [f64], n: usize, p: usize, row_used: &mut [bool]) -> Option<usize> {
    let mut best = (SINGULAR_TOL, usize::MAX);
    for r in 0..n {
        if !row_used[r] && b[r * n + p].abs() > best.0 {
            best = (b[r * n + p].abs(), r);
        }
    }
    let r = best.1;
    if r == usize::MAX {
        return None;
    }
    row_used[r] = true;
    let piv = b[r * n + p];
    for c in 0..n {
        b[r * n + c] /= piv;
        inv[r * n + c] /= piv;
    }
    for i in 0..n {
        if i == r {
            continue;
        }
        let f = b[i * n + p];
        if f == 0.0 {
            continue;
        }
        for c in 0..n {
            b[i * n + c] -= f * b[r * n + c];
            inv[i * n + c] -= f * inv[r * n + c];
        }
    }
    Some(r)
}

/// Inverse of the row-major `n × n` matrix `b` (row `p` of the result belongs
/// to column `p` of `b`), or `None` if it is singular.
fn gauss_jordan(mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let mut row_used = vec![false; n];
    let mut pivot_row = vec![0; n];
    for p in 0..n {
        pivot_row[p] = eliminate(&mut b, &mut inv, n, p, &mut row_used)?;
    }
    let mut out = vec![0.0; n * n];
    for p in 0..n {
        let r = pivot_row[p];
        out[p * n..(p + 1) * n].copy_from_slice(&inv[r * n..(r + 1) * n]);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LpProblem {
        let mut p = LpProblem::new();
        let x1 = p.add_variable(-1.0, 0.0, 1.0);
        let x2 = p.add_variable(-1.0, 0.0, 1.0);
        p.add_variable(0.0, 0.0, 1.0);
        p.add_row(LpRow::new(vec![(x1, 1.0), (x2, 1.0)], Relation::Le, 1.0));
        p
    }

    #[test]
    fn toy_lp() {
        for method in [Method::Auto, Method::Primal] {
            let mut s = Simplex::new(&toy()).unwrap();
            s.set_method(method);
            let sol = s.solve().unwrap();
            assert_eq!(sol.status, LpStatus::Optimal);
            assert!((sol.objective + 1.0).abs() < 1e-9);
            assert!((sol.dual_bound - sol.objective).abs() < 1e-9);
        }
    }

    #[test]
    fn equality_rows_need_phase_one() {
        // min x + 2y s.t. x + y = 3, x − y = 1, 0 ≤ x, y ≤ 5
        let mut p = LpProblem::new();
        p.add_variable(1.0, 0.0, 5.0);
        p.add_variable(2.0, 0.0, 5.0);
        p.add_row(LpRow::new(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 3.0));
        p.add_row(LpRow::new(vec![(0, 1.0), (1, -1.0)], Relation::Eq, 1.0));
        for method in [Method::Auto, Method::Primal] {
            let mut s = Simplex::new(&p).unwrap();
            s.set_method(method);
            let sol = s.solve().unwrap();
            assert_eq!(sol.status, LpStatus::Optimal);
            assert!((sol.x[0] - 2.0).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
            assert!((sol.objective - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn detects_infeasibility() {
        let mut p = LpProblem::new();
        p.add_variable(1.0, 0.0, 1.0);
        p.add_variable(1.0, 0.0, 1.0);
        p.add_row(LpRow::new(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 3.0));
        for method in [Method::Auto, Method::Primal] {
            let mut s = Simplex::new(&p).unwrap();
            s.set_method(method);
            assert_eq!(s.solve().unwrap().status, LpStatus::Infeasible);
        }
    }

    #[test]
    fn detects_unboundedness() {
        let mut p = LpProblem::new();
        p.add_variable(-1.0, 0.0, f64::INFINITY);
        p.add_variable(0.0, 0.0, 1.0);
        p.add_row(LpRow::new(vec![(0, 1.0), (1, -1.0)], Relation::Eq, 0.5));
        let mut p2 = p.clone();
        p2.set_bounds(1, 0.0, f64::INFINITY);
        let sol = solve(&p2, None).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
        assert_eq!(solve(&p, None).unwrap().status, LpStatus::Optimal);
    }

    #[test]
    fn incremental_rows_and_bounds() {
        let mut s = Simplex::new(&toy()).unwrap();
        let first = s.solve().unwrap();
        s.add_row(LpRow::new(vec![(0, 1.0)], Relation::Le, 0.25)).unwrap();
        s.add_row(LpRow::new(vec![(1, 1.0)], Relation::Le, 0.25)).unwrap();
        let second = s.solve().unwrap();
        assert!((second.objective + 0.5).abs() < 1e-9);
        assert!(second.objective >= first.objective);
        s.set_bounds(0, 0.0, 0.0);
        assert!((s.solve().unwrap().objective + 0.25).abs() < 1e-9);
        s.set_bounds(0, 0.0, 1.0);
        assert!((s.solve().unwrap().objective + 0.5).abs() < 1e-9);
    }

    #[test]
    fn warm_start_matches_cold() {
        let p = toy();
        let cold = solve(&p, None).unwrap();
        let warm = solve(&p, Some(&cold.basis)).unwrap();
        assert_eq!(cold.objective, warm.objective);
        assert_eq!(warm.iterations, 0);
        assert!(!Simplex::new(&p).unwrap().load_basis(&Basis { status: vec![VarStatus::Basic; 4] }));
    }

    #[test]
    fn rejects_malformed() {
        let mut p = LpProblem::new();
        p.add_variable(0.0, 1.0, 0.0);
        assert!(matches!(solve(&p, None), Err(LpError::InvalidProblem(_))));
        let mut p = LpProblem::new();
        p.add_variable(0.0, 0.0, 1.0);
        p.add_row(LpRow::new(vec![(3, 1.0)], Relation::Le, 1.0));
        assert!(matches!(solve(&p, None), Err(LpError::InvalidProblem(_))));
    }
}
