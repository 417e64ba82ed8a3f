//! Branch-and-cut for the minimum degree deviation model.
//!
//! One simplex workspace serves the whole search. Cuts are global and are
//! appended as rows; a node is entered by resetting the branching bounds of
//! the previous node and applying its own, after which the dual simplex
//! restarts from the basis the workspace already holds.
//!
//! Every feasible graph has deviation `Σ targets − 2|E|`, so all objective
//! values share the parity of `Σ targets`; LP bounds are rounded up to the
//! next value of that parity before pruning and reporting.

use std::cmp::Ordering as CmpOrdering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::{CellBound, CompiledLp, Cut, DesignSpec, MddProblem, ModelError};
use crate::peg::{grow, modified_peg_with, TieBreak};
use crate::separation::{separate_fractional, FEAS_TOL, separate_integral, WeightedTanner};
use crate::simplex::{Basis, LpError, LpStatus, Simplex};
use crate::structure::{cycle_regions, fixing_plan, valid_inequalities, FixingMode, FixingPlan, StructureError};
use crate::tanner::{degree_deviation, girth, Cell, GraphError, TannerGraph};

/// Distance from 0/1 below which an LP value counts as integral.
pub const INT_TOL: f64 = 1e-6;
/// LP bounds within this of an integer are rounded to it.
const BOUND_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("LP failure: {0}")]
    Lp(#[from] LpError),
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("cannot branch: the point is integral")]
    IntegralPoint,
}

/// Solution methods, each adding one improvement to the previous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Mode {
    /// Plain branch-and-cut.
    BC0,
    /// Basic fixing of the first row and column.
    BC1,
    /// Extended staircase fixing.
    BC2,
    /// Extended fixing plus cycle-region inequalities.
    BC3,
    /// All of the above plus a PEG starting incumbent.
    BC4,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::BC0, Mode::BC1, Mode::BC2, Mode::BC3, Mode::BC4];

    fn fixing(self) -> Option<FixingMode> {
        match self {
            Mode::BC0 => None,
            Mode::BC1 => Some(FixingMode::Basic),
            _ => Some(FixingMode::Extended),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mode '{s}' (expected BC0..BC4)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeSelection {
    #[default]
    BestBound,
    DepthFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchingRule {
    /// Value closest to 0.5, ties to the smallest cell.
    #[default]
    MostFractional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub mode: Mode,
    pub time_limit: Duration,
    pub node_selection: NodeSelection,
    pub branching: BranchingRule,
    /// Randomises PEG tie breaking when set.
    pub seed: Option<u64>,
    /// User cuts added per LP solve at most.
    pub user_cut_cap: usize,
    /// Cutting rounds at a node stop after this many consecutive rounds that
    /// raise the bound by less than `tailing_tol`.
    pub tailing_rounds: usize,
    pub tailing_tol: f64,
    /// Node log entries kept at most.
    pub log_limit: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            mode: Mode::BC4,
            time_limit: Duration::from_secs(3600),
            node_selection: NodeSelection::BestBound,
            branching: BranchingRule::MostFractional,
            seed: None,
            user_cut_cap: 50,
            tailing_rounds: 5,
            tailing_tol: 1e-6,
            log_limit: 10_000,
        }
    }
}

impl SolveConfig {
    pub fn with_mode(mode: Mode) -> Self {
        SolveConfig { mode, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    FeasibleTimeLimit,
    NoIncumbent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeAction {
    Infeasible,
    Pruned,
    Incumbent,
    Branched,
    TimeLimit,
}

/// One processed node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeLog {
    pub node: usize,
    pub depth: usize,
    /// LP bound when the node was closed, `None` when infeasible.
    pub bound: Option<f64>,
    pub lazy_cuts: usize,
    pub user_cuts: usize,
    pub lp_solves: usize,
    pub action: NodeAction,
}

/// Global bounds after a change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub seconds: f64,
    pub nodes: usize,
    pub z_l: u64,
    pub z: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub m: usize,
    pub n: usize,
    pub girth_target: usize,
    pub mode: Mode,
    pub status: SolveStatus,
    pub z: Option<u64>,
    pub z_l: u64,
    pub z_initial: Option<u64>,
    pub gap_percent: f64,
    pub lazy_cuts: usize,
    pub user_cuts: usize,
    /// Incumbents found by LP-guided edge growth.
    pub heuristic_incumbents: usize,
    pub valid_inequalities: usize,
    pub fixed_ones: usize,
    pub fixed_zeros: usize,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub wall_seconds: f64,
    /// Largest `ρ` over region `S` (extended fixing only).
    pub tau: Option<usize>,
    /// Whether `T > τ`, under which the extended fixing loses no optimum.
    pub fixing_exact: Option<bool>,
    #[serde(serialize_with = "serialize_graph")]
    pub incumbent: Option<TannerGraph>,
    pub trace: Vec<TracePoint>,
    pub log: Vec<NodeLog>,
}

fn serialize_graph<S: Serializer>(g: &Option<TannerGraph>, s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Edges<'a> {
        m: usize,
        n: usize,
        ones: Vec<[usize; 2]>,
        #[serde(skip)]
        _g: std::marker::PhantomData<&'a ()>,
    }
    match g {
        None => s.serialize_none(),
        Some(g) => s.serialize_some(&Edges {
            m: g.m(),
            n: g.n(),
            ones: g.entries().iter().map(|c| [c.row, c.col]).collect(),
            _g: std::marker::PhantomData,
        }),
    }
}

/// `100·(z − z_l)/z`, and 0 when `z = 0`.
pub fn gap_percent(z: u64, z_l: u64) -> f64 {
    if z == 0 {
        0.0
    } else {
        100.0 * z.saturating_sub(z_l) as f64 / z as f64
    }
}

/// Smallest value `≥ bound` (up to [`BOUND_TOL`]) with the parity of `total`.
pub fn parity_round(bound: f64, total: u64) -> u64 {
    let mut r = (bound - BOUND_TOL).ceil().max(0.0) as u64;
    if r % 2 != total % 2 {
        r += 1;
    }
    r
}

/// A subproblem: the cells fixed by branching.
#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub id: usize,
    pub depth: usize,
    pub fixings: BTreeMap<Cell, bool>,
    /// Final basis of the parent; kept for reference, since the workspace
    /// restarts from its current basis, which is dual feasible for any
    /// bounds.
    pub basis: Option<Basis>,
    /// LP bound of the parent.
    pub bound: f64,
}

impl BnbNode {
    pub fn root() -> Self {
        BnbNode { id: 0, depth: 0, fixings: BTreeMap::new(), basis: None, bound: 0.0 }
    }
}

/// Splits `node` on the most fractional of `values` (free cells only); the
/// zero child comes first. Child ids are left for the caller to assign.
pub fn branch(node: &BnbNode, values: &[(Cell, f64)]) -> Result<(BnbNode, BnbNode), SolveError> {
    let pick = values
        .iter()
        .filter(|(_, x)| *x > INT_TOL && *x < 1.0 - INT_TOL)
        .min_by(|a, b| (a.1 - 0.5).abs().total_cmp(&(b.1 - 0.5).abs()).then(a.0.cmp(&b.0)))
        .map(|&(c, _)| c)
        .ok_or(SolveError::IntegralPoint)?;
    let child = |v: bool| {
        let mut fixings = node.fixings.clone();
        fixings.insert(pick, v);
        BnbNode { id: 0, depth: node.depth + 1, fixings, basis: node.basis.clone(), bound: node.bound }
    };
    Ok((child(false), child(true)))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError {
    #[error("report has no incumbent")]
    NoIncumbent,
    #[error("incumbent does not rebuild: {0}")]
    Graph(#[from] GraphError),
    #[error("incumbent girth {found:?} is below the target {required}")]
    Girth { found: Option<usize>, required: usize },
    #[error("incumbent deviation {computed} differs from reported z = {reported:?}")]
    Deviation { computed: u64, reported: Option<u64> },
}

/// Rebuilds the incumbent from its edge list and re-checks girth, degrees and
/// deviation against the report.
pub fn certify(report: &SolveReport, spec: &DesignSpec) -> Result<(), CertifyError> {
    let inc = report.incumbent.as_ref().ok_or(CertifyError::NoIncumbent)?;
    let g = TannerGraph::new(inc.m(), inc.n(), inc.entries())?;
    let found = girth(&g);
    if found.is_some_and(|x| x < spec.girth()) {
        return Err(CertifyError::Girth { found, required: spec.girth() });
    }
    let computed = degree_deviation(&g, spec)?;
    if Some(computed) != report.z {
        return Err(CertifyError::Deviation { computed, reported: report.z });
    }
    Ok(())
}

struct Open {
    node: BnbNode,
    key: (f64, usize, usize),
    depth_first: bool,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == CmpOrdering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // max-heap: the "greatest" entry is processed next
    fn cmp(&self, other: &Self) -> CmpOrdering {
        let (b1, d1, id1) = self.key;
        let (b2, d2, id2) = other.key;
        if self.depth_first {
            id1.cmp(&id2)
        } else {
            b2.total_cmp(&b1).then(d1.cmp(&d2)).then(id1.cmp(&id2))
        }
    }
}

/// Solves a cut row may stay slack before it leaves the LP.
const CUT_AGE_LIMIT: usize = 10;

/// Every cut found so far, with the LP row of those currently loaded.
#[derive(Default)]
struct CutPool {
    cuts: Vec<Cut>,
    index: HashMap<Vec<Cell>, usize>,
    row: Vec<Option<usize>>,
    age: Vec<usize>,
    /// Pool index of each LP row past the degree rows.
    cut_of_row: Vec<usize>,
}

struct Search<'a> {
    spec: &'a DesignSpec,
    cfg: &'a SolveConfig,
    problem: MddProblem,
    pool: CutPool,
    lp: CompiledLp,
    simplex: Simplex,
    total: u64,
    start: Instant,
    incumbent: Option<(u64, TannerGraph)>,
    z_l: u64,
    lazy: usize,
    user: usize,
    nodes: usize,
    next_id: usize,
    applied: Vec<usize>,
    fixed_ones: Vec<Cell>,
    heuristic_hits: usize,
    trace: Vec<TracePoint>,
    log: Vec<NodeLog>,
}

enum Outcome {
    Closed(NodeAction, Option<f64>),
    Branch(BnbNode, BnbNode, f64),
    TimeLimit(f64),
}

impl<'a> Search<'a> {
    fn timed_out(&self) -> bool {
        self.start.elapsed() >= self.cfg.time_limit
    }

    fn bound_of(&self, objective: f64) -> f64 {
        objective + self.lp.objective_offset
    }

    fn record(&mut self) {
        let point = TracePoint {
            seconds: self.start.elapsed().as_secs_f64(),
            nodes: self.nodes,
            z_l: self.z_l,
            z: self.incumbent.as_ref().map(|(z, _)| *z),
        };
        if self.trace.last().map_or(true, |p| (p.z_l, p.z) != (point.z_l, point.z)) {
            self.trace.push(point);
        }
    }

    fn raise_lower_bound(&mut self, bound: u64) {
        let cap = self.incumbent.as_ref().map_or(u64::MAX, |(z, _)| *z);
        let b = bound.min(cap);
        if b > self.z_l {
            self.z_l = b;
            self.record();
        }
    }

    fn offer(&mut self, g: TannerGraph) {
        let z = degree_deviation(&g, self.spec).expect("accepted graphs respect the targets");
        if self.incumbent.as_ref().map_or(true, |(best, _)| z < *best) {
            self.incumbent = Some((z, g));
            self.record();
        }
    }

    fn prunes(&self, bound: f64) -> bool {
        self.incumbent.as_ref().is_some_and(|(z, _)| parity_round(bound, self.total) >= *z)
    }

    fn enter(&mut self, node: &BnbNode) {
        for col in self.applied.drain(..) {
            self.simplex.set_bounds(col, 0.0, 1.0);
        }
        for (&cell, &one) in &node.fixings {
            let col = self.lp.column(cell).expect("branching uses free cells only");
            let v = if one { 1.0 } else { 0.0 };
            self.simplex.set_bounds(col, v, v);
            self.applied.push(col);
        }
    }

    /// Loads the pooled cuts not already in the LP; returns how many rows
    /// were added.
    fn activate(&mut self, idxs: &[usize]) -> Result<usize, SolveError> {
        let mut rows = Vec::new();
        let mut owners = Vec::new();
        let mut seen = BTreeSet::new();
        for &idx in idxs {
            if self.pool.row[idx].is_some() || !seen.insert(idx) {
                continue;
            }
            if let Some(row) = self.lp.row_for(&self.pool.cuts[idx]) {
                rows.push(row);
                owners.push(idx);
            }
        }
        if rows.is_empty() {
            return Ok(0);
        }
        let added = self.simplex.add_rows(rows)?;
        for (&idx, r) in owners.iter().zip(added) {
            self.pool.row[idx] = Some(r);
            self.pool.age[idx] = 0;
            self.pool.cut_of_row.push(idx);
        }
        Ok(owners.len())
    }

    /// Adds cuts to the pool and the LP; returns how many were new to the
    /// pool and how many rows were loaded.
    fn add_cuts(&mut self, cuts: Vec<Cut>) -> Result<(usize, usize), SolveError> {
        let mut new = 0;
        let mut idxs = Vec::with_capacity(cuts.len());
        for cut in cuts {
            let idx = match self.pool.index.get(cut.cells()) {
                Some(&idx) => idx,
                None => {
                    let idx = self.pool.cuts.len();
                    self.pool.index.insert(cut.cells().to_vec(), idx);
                    self.pool.cuts.push(cut);
                    self.pool.row.push(None);
                    self.pool.age.push(0);
                    new += 1;
                    idx
                }
            };
            idxs.push(idx);
        }
        let loaded = self.activate(&idxs)?;
        Ok((new, loaded))
    }

    /// Reloads pooled cuts the point violates.
    fn separate_pool(&mut self, values: &[f64]) -> Result<usize, SolveError> {
        let n = self.spec.n();
        let violated: Vec<usize> = (0..self.pool.cuts.len())
            .filter(|&i| self.pool.row[i].is_none())
            .filter(|&i| self.pool.cuts[i].violation(|c| values[c.row * n + c.col]) > FEAS_TOL)
            .collect();
        self.activate(&violated)
    }

    /// Ages slack cut rows and drops the ones slack for too long.
    fn purge(&mut self) -> Result<(), SolveError> {
        let base = self.lp.degree_rows;
        let mut drop = BTreeSet::new();
        for (k, &idx) in self.pool.cut_of_row.iter().enumerate() {
            let r = base + k;
            if self.simplex.logical_is_basic(r) && self.simplex.logical_value(r) > INT_TOL {
                self.pool.age[idx] += 1;
                if self.pool.age[idx] >= CUT_AGE_LIMIT {
                    drop.insert(r);
                }
            } else {
                self.pool.age[idx] = 0;
            }
        }
        if drop.is_empty() {
            return Ok(());
        }
        self.simplex.remove_rows(&drop)?;
        let old = std::mem::take(&mut self.pool.cut_of_row);
        for (k, idx) in old.into_iter().enumerate() {
            if drop.contains(&(base + k)) {
                self.pool.row[idx] = None;
            } else {
                self.pool.row[idx] = Some(base + self.pool.cut_of_row.len());
                self.pool.cut_of_row.push(idx);
            }
        }
        Ok(())
    }

    fn cell_values(&self, x: &[f64]) -> Vec<f64> {
        self.lp.cell_values(x)
    }

    fn support(&self, values: &[f64]) -> TannerGraph {
        let n = self.spec.n();
        let cells: Vec<Cell> =
            (0..values.len()).filter(|&k| values[k] > 0.5).map(|k| Cell::new(k / n, k % n)).collect();
        TannerGraph::new(self.spec.m(), n, &cells).expect("cells lie inside the matrix")
    }

    fn process(&mut self, node: &BnbNode, entry: &mut NodeLog) -> Result<Outcome, SolveError> {
        self.enter(node);
        let t = self.spec.girth();
        let (m, n) = (self.spec.m(), self.spec.n());
        let mut best_bound = f64::NEG_INFINITY;
        let mut stalls = 0;
        let mut cutting = true;
        loop {
            if self.timed_out() {
                return Ok(Outcome::TimeLimit(best_bound.max(node.bound)));
            }
            let sol = match self.simplex.solve() {
                Ok(sol) => sol,
                Err(LpError::Deadline) => return Ok(Outcome::TimeLimit(best_bound.max(node.bound))),
                Err(e) => return Err(e.into()),
            };
            entry.lp_solves += 1;
            match sol.status {
                LpStatus::Infeasible => return Ok(Outcome::Closed(NodeAction::Infeasible, None)),
                LpStatus::Unbounded => return Err(SolveError::Unbounded),
                LpStatus::Optimal => {}
            }
            let bound = self.bound_of(sol.objective);
            if self.prunes(bound) {
                return Ok(Outcome::Closed(NodeAction::Pruned, Some(bound)));
            }
            self.purge()?;
            let values = self.cell_values(&sol.x);
            if self.separate_pool(&values)? > 0 {
                continue;
            }
            let free = self.lp.cell_of_column.len();
            let integral = sol.x[..free].iter().all(|&v| v.min(1.0 - v).abs() <= INT_TOL);
            if integral {
                let support = self.support(&values);
                let cuts = separate_integral(&support, t);
                if cuts.is_empty() {
                    self.offer(support);
                    return Ok(Outcome::Closed(NodeAction::Incumbent, Some(bound)));
                }
                let (new, loaded) = self.add_cuts(cuts)?;
                self.lazy += new;
                entry.lazy_cuts += new;
                if loaded == 0 {
                    // every short cycle is already cut: only possible through
                    // round-off, so treat the point as fractional
                    return self.split(node, &sol.x, bound);
                }
                continue;
            }
            if cutting {
                if bound - best_bound < self.cfg.tailing_tol {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                best_bound = best_bound.max(bound);
                if stalls >= self.cfg.tailing_rounds {
                    cutting = false;
                }
            }
            if cutting {
                let weighted = WeightedTanner::from_dense(m, n, &values).expect("LP values lie in [0,1]");
                let cuts = separate_fractional(&weighted, t, self.cfg.user_cut_cap);
                let (new, loaded) = self.add_cuts(cuts)?;
                self.user += new;
                entry.user_cuts += new;
                if loaded > 0 {
                    continue;
                }
            }
            return self.split(node, &sol.x, bound);
        }
    }

    /// Completes the node's one-fixings into a girth-safe graph by edge
    /// growth, preferring cells with large LP values.
    fn guided_growth(&mut self, node: &BnbNode, x: &[f64], bound: f64) {
        if self.prunes(bound) {
            return;
        }
        let t = self.spec.girth();
        let mut start = self.fixed_ones.clone();
        start.extend(node.fixings.iter().filter(|(_, &one)| one).map(|(&c, _)| c));
        let Ok(seed) = TannerGraph::new(self.spec.m(), self.spec.n(), &start) else {
            return;
        };
        if girth(&seed).is_some_and(|g| g < t) {
            return;
        }
        let values = self.cell_values(x);
        let forbidden =
            |c: Cell| self.problem.bound(c) == CellBound::Zero || node.fixings.get(&c) == Some(&false);
        let ties = self.cfg.seed.map_or(TieBreak::SmallestIndex, |s| TieBreak::Seeded(s ^ node.id as u64));
        let g = grow(self.spec, t, &start, forbidden, Some(&values), ties).graph;
        let before = self.incumbent.as_ref().map(|(z, _)| *z);
        self.offer(g);
        if self.incumbent.as_ref().map(|(z, _)| *z) != before {
            self.heuristic_hits += 1;
        }
    }

    fn split(&mut self, node: &BnbNode, x: &[f64], bound: f64) -> Result<Outcome, SolveError> {
        self.guided_growth(node, x, bound);
        if self.prunes(bound) {
            return Ok(Outcome::Closed(NodeAction::Pruned, Some(bound)));
        }
        let values: Vec<(Cell, f64)> =
            self.lp.cell_of_column.iter().enumerate().map(|(col, &cell)| (cell, x[col])).collect();
        let mut parent = node.clone();
        parent.basis = Some(self.simplex.basis());
        parent.bound = bound;
        let (mut zero, mut one) = branch(&parent, &values)?;
        zero.id = self.next_id;
        one.id = self.next_id + 1;
        self.next_id += 2;
        Ok(Outcome::Branch(zero, one, bound))
    }
}

/// Runs branch-and-cut on `spec` with the improvements selected by
/// `cfg.mode`.
pub fn solve(spec: &DesignSpec, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let t = spec.girth();
    let mut problem = MddProblem::new(spec.clone());
    let plan = match cfg.mode.fixing() {
        Some(mode) => fixing_plan(spec, mode)?,
        None => FixingPlan::empty(),
    };
    problem.apply_fixing(&plan)?;
    let mut tau = None;
    let mut inequalities = 0;
    let mut vi_cuts = Vec::new();
    if cfg.mode >= Mode::BC2 {
        let map = cycle_regions(spec)?;
        tau = map.tau();
        if cfg.mode >= Mode::BC3 {
            let vi = valid_inequalities(spec, t, &map)?;
            inequalities = vi.zeros.len() + vi.cuts.len();
            for cell in vi.zeros {
                problem.fix(cell, CellBound::Zero)?;
            }
            vi_cuts = vi.cuts;
        }
    }
    let fixed_ones = plan.ones().len();
    let fixed_zeros = (0..spec.m())
        .flat_map(|i| (0..spec.n()).map(move |j| Cell::new(i, j)))
        .filter(|&c| problem.bound(c) == CellBound::Zero)
        .count();
    let lp = problem.compile();
    let mut simplex = Simplex::new(&lp.lp)?;
    simplex.set_deadline(start.checked_add(cfg.time_limit));
    let total = spec.total_target();
    let mut search = Search {
        spec,
        cfg,
        problem,
        pool: CutPool::default(),
        lp,
        simplex,
        total,
        start,
        incumbent: None,
        z_l: 0,
        lazy: 0,
        user: 0,
        nodes: 0,
        next_id: 1,
        applied: Vec::new(),
        fixed_ones: plan.ones().iter().copied().collect(),
        heuristic_hits: 0,
        trace: Vec::new(),
        log: Vec::new(),
    };
    // starting incumbent: the fixed ones alone are acyclic, and PEG only
    // extends them with edges that keep the girth
    let start_graph = if cfg.mode == Mode::BC4 {
        let ties = cfg.seed.map_or(TieBreak::SmallestIndex, TieBreak::Seeded);
        modified_peg_with(spec, t, &plan, ties).graph
    } else {
        plan.graph(spec.m(), spec.n())
    };
    search.add_cuts(vi_cuts)?;
    search.offer(start_graph);
    let z_initial = search.incumbent.as_ref().map(|(z, _)| *z);
    search.record();

    let depth_first = cfg.node_selection == NodeSelection::DepthFirst;
    let mut open = BinaryHeap::new();
    open.push(Open { key: (0.0, 0, 0), node: BnbNode::root(), depth_first });
    let mut timed_out = false;
    while let Some(Open { node, .. }) = open.pop() {
        if search.prunes(node.bound) {
            continue;
        }
        search.nodes += 1;
        let mut entry =
            NodeLog { node: node.id, depth: node.depth, bound: None, lazy_cuts: 0, user_cuts: 0, lp_solves: 0, action: NodeAction::Pruned };
        let outcome = search.process(&node, &mut entry)?;
        let mut stop = false;
        match outcome {
            Outcome::Closed(action, bound) => {
                entry.action = action;
                entry.bound = bound;
            }
            Outcome::Branch(zero, one, bound) => {
                entry.action = NodeAction::Branched;
                entry.bound = Some(bound);
                for child in [zero, one] {
                    let key = (child.bound, child.depth, child.id);
                    open.push(Open { key, node: child, depth_first });
                }
            }
            Outcome::TimeLimit(bound) => {
                entry.action = NodeAction::TimeLimit;
                entry.bound = Some(bound);
                open.push(Open { key: (node.bound, node.depth, node.id), node, depth_first });
                stop = true;
            }
        }
        if search.log.len() < cfg.log_limit {
            search.log.push(entry);
        }
        // global bound: the weakest open node
        let floor = open.iter().map(|o| o.node.bound).fold(f64::INFINITY, f64::min);
        if floor.is_finite() {
            search.raise_lower_bound(parity_round(floor, total));
        }
        if stop || search.timed_out() {
            timed_out = !open.is_empty() || stop;
            break;
        }
    }
    let z = search.incumbent.as_ref().map(|(z, _)| *z);
    let status = match (z, timed_out) {
        (None, _) => SolveStatus::NoIncumbent,
        (Some(_), true) => SolveStatus::FeasibleTimeLimit,
        (Some(z), false) => {
            search.raise_lower_bound(z);
            SolveStatus::Optimal
        }
    };
    let z_l = search.z_l;
    Ok(SolveReport {
        m: spec.m(),
        n: spec.n(),
        girth_target: t,
        mode: cfg.mode,
        status,
        z,
        z_l,
        z_initial,
        gap_percent: z.map_or(100.0, |z| gap_percent(z, z_l)),
        lazy_cuts: search.lazy,
        user_cuts: search.user,
        heuristic_incumbents: search.heuristic_hits,
        valid_inequalities: inequalities,
        fixed_ones,
        fixed_zeros,
        nodes: search.nodes,
        lp_iterations: search.simplex.iterations(),
        wall_seconds: start.elapsed().as_secs_f64(),
        tau,
        fixing_exact: tau.map(|tau| t > tau),
        incumbent: search.incumbent.map(|(_, g)| g),
        trace: search.trace,
        log: search.log,
    })
}
