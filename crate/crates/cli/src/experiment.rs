//! Mode × dimension × girth grid runner.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Serialize;

use girthforge::model::DesignSpec;
use girthforge::solver::{certify, solve, Mode, SolveConfig, SolveStatus, TracePoint};

pub const THREADS_VAR: &str = "GIRTHFORGE_THREADS";

const DESK: [(usize, usize); 5] = [(10, 20), (15, 30), (20, 40), (30, 60), (40, 80)];
const FULL_EXTRA: [(usize, usize); 4] = [(100, 200), (150, 300), (250, 500), (500, 1000)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Desk,
    /// Desk dimensions plus the large ones.
    Full,
    /// Only the dimensions beyond the desk suite.
    Large,
}

impl Suite {
    pub fn dimensions(self) -> Vec<(usize, usize)> {
        match self {
            Suite::Desk => DESK.to_vec(),
            Suite::Full => DESK.iter().chain(&FULL_EXTRA).copied().collect(),
            Suite::Large => FULL_EXTRA.to_vec(),
        }
    }
}

/// One cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub mode: Mode,
    pub girth: usize,
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    #[serde(rename = "T")]
    pub girth: usize,
    pub m: usize,
    pub n: usize,
    pub mode: Mode,
    pub status: Option<SolveStatus>,
    pub z_l: Option<u64>,
    pub z: Option<u64>,
    pub z_initial: Option<u64>,
    pub seconds: f64,
    pub gap_percent: Option<f64>,
    pub lazy: usize,
    pub user: usize,
    pub nodes: usize,
    /// Whether the incumbent passed the independent girth and deviation check.
    pub certified: bool,
    pub trace_monotone: bool,
    pub trace: Vec<TracePoint>,
    pub error: Option<String>,
}

impl ExperimentRow {
    /// `z_l` never falls and `z` never rises along the trace.
    pub fn trace_is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| {
            w[1].z_l >= w[0].z_l
                && match (w[0].z, w[1].z) {
                    (Some(a), Some(b)) => b <= a,
                    (Some(_), None) => false,
                    _ => true,
                }
        })
    }

    fn failed(cell: Cell, error: String) -> Self {
        ExperimentRow {
            girth: cell.girth,
            m: cell.m,
            n: cell.n,
            mode: cell.mode,
            status: None,
            z_l: None,
            z: None,
            z_initial: None,
            seconds: 0.0,
            gap_percent: None,
            lazy: 0,
            user: 0,
            nodes: 0,
            certified: false,
            trace_monotone: true,
            trace: Vec::new(),
            error: Some(error),
        }
    }
}

pub fn grid(modes: &[Mode], girths: &[usize], dims: &[(usize, usize)]) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &mode in modes {
        for &girth in girths {
            for &(m, n) in dims {
                cells.push(Cell { mode, girth, m, n });
            }
        }
    }
    cells
}

pub fn run_cell(cell: Cell, time_limit: Duration, seed: Option<u64>) -> ExperimentRow {
    let spec = match DesignSpec::regular(cell.m, cell.n, 3, 6, cell.girth) {
        Ok(spec) => spec,
        Err(e) => return ExperimentRow::failed(cell, e.to_string()),
    };
    let cfg = SolveConfig { time_limit, seed, ..SolveConfig::with_mode(cell.mode) };
    let report = match solve(&spec, &cfg) {
        Ok(r) => r,
        Err(e) => return ExperimentRow::failed(cell, e.to_string()),
    };
    let check = certify(&report, &spec);
    let error = match (&check, report.status) {
        (Err(e), SolveStatus::Optimal | SolveStatus::FeasibleTimeLimit) => Some(format!("certification failed: {e}")),
        _ => None,
    };
    let mut row = ExperimentRow {
        girth: cell.girth,
        m: cell.m,
        n: cell.n,
        mode: cell.mode,
        status: Some(report.status),
        z_l: Some(report.z_l),
        z: report.z,
        z_initial: report.z_initial,
        seconds: report.wall_seconds,
        gap_percent: report.z.map(|_| report.gap_percent),
        lazy: report.lazy_cuts,
        user: report.user_cuts,
        nodes: report.nodes,
        certified: check.is_ok(),
        trace_monotone: true,
        trace: report.trace,
        error,
    };
    row.trace_monotone = row.trace_is_monotone();
    row
}

/// Worker count from [`THREADS_VAR`], else the machine's parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Solves every cell; rows come back in grid order. Each finished row is
/// also written to `sink` as one JSON line, in completion order.
pub fn run_grid(
    cells: &[Cell],
    time_limit: Duration,
    seed: Option<u64>,
    threads: usize,
    sink: Option<&mut (dyn Write + Send)>,
) -> std::io::Result<Vec<ExperimentRow>> {
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<ExperimentRow>>> = Mutex::new(vec![None; cells.len()]);
    let sink = Mutex::new(sink);
    let io_error: Mutex<Option<std::io::Error>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, cells.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&cell) = cells.get(k) else {
                    break;
                };
                let row = run_cell(cell, time_limit, seed);
                if let Some(out) = sink.lock().unwrap().as_mut() {
                    let line = serde_json::to_string(&row).expect("rows serialize");
                    if let Err(e) = writeln!(out, "{line}").and_then(|_| out.flush()) {
                        io_error.lock().unwrap().get_or_insert(e);
                    }
                }
                rows.lock().unwrap()[k] = Some(row);
            });
        }
    });
    if let Some(e) = io_error.into_inner().unwrap() {
        return Err(e);
    }
    Ok(rows.into_inner().unwrap().into_iter().map(|r| r.expect("every cell ran")).collect())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

/// Aligned text table, one block per mode, columns as in the result tables.
pub fn format_table(rows: &[ExperimentRow]) -> String {
    let mut out = String::new();
    let mut modes: Vec<Mode> = rows.iter().map(|r| r.mode).collect();
    modes.dedup();
    for mode in modes {
        let _ = writeln!(out, "{mode}");
        let _ = writeln!(
            out,
            "{:>3} {:>5} {:>6} {:>6} {:>6} {:>9} {:>7} {:>8} {:>8}",
            "T", "n", "z_l", "z", "z_i", "secs", "gap%", "lazy", "user"
        );
        let mut last_t = None;
        for r in rows.iter().filter(|r| r.mode == mode) {
            let t = if last_t == Some(r.girth) { String::new() } else { r.girth.to_string() };
            last_t = Some(r.girth);
            let secs = match r.status {
                Some(SolveStatus::Optimal) => format!("{:.2}", r.seconds),
                Some(_) => "time".to_string(),
                None => "error".to_string(),
            };
            let gap = r.gap_percent.map(|g| format!("{g:.0}"));
            let _ = writeln!(
                out,
                "{:>3} {:>5} {:>6} {:>6} {:>6} {:>9} {:>7} {:>8} {:>8}",
                t,
                r.n,
                opt(r.z_l),
                opt(r.z),
                opt(r.z_initial),
                secs,
                opt(gap),
                r.lazy,
                r.user
            );
        }
        let _ = writeln!(out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_extends_desk() {
        let full = Suite::Full.dimensions();
        assert_eq!(&full[..5], &DESK);
        assert_eq!(full.last(), Some(&(500, 1000)));
        assert!(full.iter().all(|&(m, n)| n == 2 * m));
    }

    #[test]
    fn grid_order() {
        let cells = grid(&[Mode::BC0, Mode::BC4], &[6, 8], &DESK);
        assert_eq!(cells.len(), 20);
        assert_eq!(cells[0], Cell { mode: Mode::BC0, girth: 6, m: 10, n: 20 });
        assert_eq!(cells[19], Cell { mode: Mode::BC4, girth: 8, m: 40, n: 80 });
    }

    #[test]
    fn monotone_trace() {
        let mut row = ExperimentRow::failed(Cell { mode: Mode::BC4, girth: 6, m: 10, n: 20 }, String::new());
        let p = |z_l, z| TracePoint { seconds: 0.0, nodes: 0, z_l, z };
        row.trace = vec![p(0, None), p(0, Some(30)), p(4, Some(20))];
        assert!(row.trace_is_monotone());
        row.trace.push(p(2, Some(20)));
        assert!(!row.trace_is_monotone());
    }
}
