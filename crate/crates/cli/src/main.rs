//! `girthforge` command-line front end.
//!
//! Exit codes: 0 optimal (or success), 1 invalid arguments or input,
//! 2 time limit reached with an incumbent, 3 no incumbent.

mod experiment;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use girthforge::alist::{read_alist, write_alist};
use girthforge::model::DesignSpec;
use girthforge::peg::{modified_peg_with, TieBreak};
use girthforge::solver::{certify, solve, Mode, NodeSelection, SolveConfig, SolveStatus};
use girthforge::structure::{cycle_regions, fixing_plan, min_n_bound, FixingMode, FixingPlan};
use girthforge::tanner::{degree_deviation, girth};

use experiment::{format_table, grid, run_grid, thread_count, Suite};

#[derive(Parser)]
#[command(name = "girthforge", version, about = "Design LDPC parity-check matrices without short cycles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the minimum degree deviation problem by branch-and-cut.
    Design(DesignArgs),
    /// Print the girth of an alist matrix.
    Girth {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print the smallest n a (J,K)-regular code of girth T can have.
    Bounds {
        #[arg(long = "J")]
        j: usize,
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        girth: usize,
    },
    /// Run the modified PEG heuristic alone.
    Peg(PegArgs),
    /// Show the fixing layout and the smallest cycle each free cell closes.
    Regions(Dims),
    /// Run the mode × dimension × girth grid.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct Dims {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long = "J")]
    j: usize,
    #[arg(long = "K")]
    k: usize,
    #[arg(long)]
    girth: usize,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    dims: Dims,
    #[arg(long, default_value = "BC4", value_parser = parse_mode)]
    mode: Mode,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    /// Randomise PEG tie breaking.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Selection::BestBound)]
    node_selection: Selection,
    /// Incumbent as alist.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Selection {
    BestBound,
    DepthFirst,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanArg {
    None,
    Basic,
    Extended,
}

#[derive(Args)]
struct PegArgs {
    #[command(flatten)]
    dims: Dims,
    #[arg(long, value_enum, default_value_t = PlanArg::Extended)]
    plan: PlanArg,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, default_value_t = Suite::Desk)]
    suite: Suite,
    /// Comma-separated modes, e.g. BC0,BC4.
    #[arg(long, value_delimiter = ',', default_value = "BC0,BC1,BC2,BC3,BC4", value_parser = parse_mode)]
    modes: Vec<Mode>,
    #[arg(long, value_delimiter = ',', default_value = "6,8,10")]
    girths: Vec<usize>,
    /// Seconds per cell.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// One JSON row per line, written as cells finish.
    #[arg(long)]
    jsonl: Option<PathBuf>,
    /// Aligned text table; printed to stdout when absent.
    #[arg(long)]
    table: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.trim().parse()
}

fn spec_from(d: &Dims) -> Result<DesignSpec> {
    if d.m == 0 {
        bail!("--m must be positive");
    }
    if d.n == 0 {
        bail!("--n must be positive");
    }
    if d.j == 0 || d.j > d.m {
        bail!("--J must lie in 1..={} (got {})", d.m, d.j);
    }
    if d.k == 0 || d.k > d.n {
        bail!("--K must lie in 1..={} (got {})", d.n, d.k);
    }
    if d.girth < 4 || d.girth % 2 != 0 {
        bail!("--girth must be even and at least 4 (got {})", d.girth);
    }
    Ok(DesignSpec::regular(d.m, d.n, d.j, d.k, d.girth)?)
}

fn seconds(s: f64, flag: &str) -> Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| anyhow::anyhow!("{flag} must be a nonnegative number of seconds"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn design(args: &DesignArgs) -> Result<ExitCode> {
    let spec = spec_from(&args.dims)?;
    let cfg = SolveConfig {
        time_limit: seconds(args.time_limit, "--time-limit")?,
        seed: args.seed,
        node_selection: match args.node_selection {
            Selection::BestBound => NodeSelection::BestBound,
            Selection::DepthFirst => NodeSelection::DepthFirst,
        },
        ..SolveConfig::with_mode(args.mode)
    };
    let report = solve(&spec, &cfg)?;
    if report.incumbent.is_some() {
        certify(&report, &spec).context("incumbent failed certification")?;
    }
    if let (Some(path), Some(g)) = (&args.out, &report.incumbent) {
        write_file(path, &write_alist(g))?;
    }
    if let Some(path) = &args.report {
        write_file(path, &serde_json::to_string_pretty(&report)?)?;
    }
    let status = match report.status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::FeasibleTimeLimit => "time-limit",
        SolveStatus::NoIncumbent => "no-incumbent",
    };
    println!(
        "{status} z={} z_l={} gap={:.1}% nodes={} lazy={} user={} time={:.2}s",
        report.z.map_or_else(|| "-".into(), |z| z.to_string()),
        report.z_l,
        report.gap_percent,
        report.nodes,
        report.lazy_cuts,
        report.user_cuts,
        report.wall_seconds
    );
    Ok(ExitCode::from(match report.status {
        SolveStatus::Optimal => 0,
        SolveStatus::FeasibleTimeLimit => 2,
        SolveStatus::NoIncumbent => 3,
    }))
}

fn girth_cmd(input: &Path) -> Result<ExitCode> {
    let text = fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let g = read_alist(&text).with_context(|| format!("{}", input.display()))?;
    match girth(&g) {
        Some(x) => println!("{x}"),
        None => println!("acyclic"),
    }
    Ok(ExitCode::SUCCESS)
}

fn bounds(j: usize, k: usize, t: usize) -> Result<ExitCode> {
    if t < 4 || t % 2 != 0 {
        bail!("--girth must be even and at least 4 (got {t})");
    }
    let b = min_n_bound(j, k, t)?;
    println!("{}", b.n);
    println!("r_cr = {}", b.r_cr);
    if k == 2 * j {
        println!("n = 2m, so m >= {}", b.n.div_ceil(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn peg(args: &PegArgs) -> Result<ExitCode> {
    let spec = spec_from(&args.dims)?;
    let plan = match args.plan {
        PlanArg::None => FixingPlan::empty(),
        PlanArg::Basic => fixing_plan(&spec, FixingMode::Basic)?,
        PlanArg::Extended => fixing_plan(&spec, FixingMode::Extended)?,
    };
    let ties = args.seed.map_or(TieBreak::SmallestIndex, TieBreak::Seeded);
    let run = modified_peg_with(&spec, spec.girth(), &plan, ties);
    let z = degree_deviation(&run.graph, &spec)?;
    let g = girth(&run.graph).map_or_else(|| "acyclic".to_string(), |g| g.to_string());
    println!("deviation={z} girth={g} edges={}", run.graph.entries().len());
    if let Some(path) = &args.out {
        write_file(path, &write_alist(&run.graph))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn regions(d: &Dims) -> Result<ExitCode> {
    let spec = spec_from(d)?;
    let plan = fixing_plan(&spec, FixingMode::Extended)?;
    let map = cycle_regions(&spec)?;
    println!("r_cr = {}, c_cr = {}, tau = {}", plan.r_cr(), plan.c_cr(), map.tau().map_or("-".into(), |t| t.to_string()));
    print!("{}", map.render(&plan));
    Ok(ExitCode::SUCCESS)
}

fn experiment_cmd(args: &ExperimentArgs) -> Result<ExitCode> {
    if args.modes.is_empty() {
        bail!("--modes must name at least one mode");
    }
    if args.girths.is_empty() {
        bail!("--girths must name at least one girth");
    }
    if let Some(t) = args.girths.iter().find(|&&t| t < 4 || t % 2 != 0) {
        bail!("--girths: {t} is not an even girth of at least 4");
    }
    let limit = seconds(args.time_limit, "--time-limit")?;
    let cells = grid(&args.modes, &args.girths, &args.suite.dimensions());
    let mut file = match &args.jsonl {
        Some(p) => Some(fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
        None => None,
    };
    let sink = file.as_mut().map(|f| f as &mut (dyn Write + Send));
    let rows = run_grid(&cells, limit, args.seed, thread_count(), sink)?;
    let table = format_table(&rows);
    match &args.table {
        Some(p) => write_file(p, &table)?,
        None => print!("{table}"),
    }
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        eprintln!("{failures} of {} cells failed", rows.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Design(args) => design(&args),
        Command::Girth { input } => girth_cmd(&input),
        Command::Bounds { j, k, girth } => bounds(j, k, girth),
        Command::Peg(args) => peg(&args),
        Command::Regions(d) => regions(&d),
        Command::Experiment(args) => experiment_cmd(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
