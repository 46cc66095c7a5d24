mod config;

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hoprepair::bound::{fraction, min_cost_lp, RepairScenario, TrafficEntry};
use hoprepair::linalg::CoeffVector;
use hoprepair::repair::{replay, verify_exactness, Engine, Step};
use hoprepair::topology::Shape;
use hoprepair::verify::{build_cost_table, run_engine, table_csv, verify_system, TableRow, DEFAULT_DIMENSIONS};

use config::{ScenarioArgs, ScenarioConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Unsupported(String),
    Invalid(String),
    /// verification ran and found a counterexample
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::Invalid(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Unsupported(m) | CliError::Invalid(m) | CliError::Failed(m) => m,
        }
    }
}

impl From<hoprepair::Error> for CliError {
    fn from(e: hoprepair::Error) -> Self {
        match e {
            hoprepair::Error::Unsupported(_) => CliError::Unsupported(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Debug, Parser)]
#[command(name = "hoprepair", version, about = "Repair-cost bounds and exact repair for storage codes on multi-hop networks")]
struct Cli {
    /// output format (default: json, csv for `table`)
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// worker threads for scenario fan-out; 0 = one per core
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// minimum repair cost from the cut-set LP
    Bound(ScenarioArgs),
    /// run a repair engine and print its transcript
    Repair(ScenarioArgs),
    /// cost comparison table over grid dimensions
    Table {
        /// grid dimensions as pairs: R S [R S ...]
        dims: Vec<usize>,
    },
    /// MDS, exactness, causality and bound checks; exit 1 on the first failure
    Verify(ScenarioArgs),
}

#[derive(Serialize)]
struct BoundReport {
    topology: Shape,
    n: usize,
    k: usize,
    #[serde(rename = "M")]
    m: usize,
    failed: usize,
    lower_bound: String,
    traffic: Vec<TrafficEntry>,
}

#[derive(Serialize)]
struct RepairReport<'a> {
    engine: Engine,
    code: &'static str,
    q: u64,
    failed_node: usize,
    steps: &'a [Step],
    recovered: &'a [CoeffVector],
    cost: usize,
    exact: bool,
    causal: bool,
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn cmd_bound(args: &ScenarioArgs, format: Format) -> Result<String, CliError> {
    let cfg = ScenarioConfig::resolve(args)?;
    let failed = cfg.failed()?;
    let (k, m) = cfg.bound_params()?;
    let sc = RepairScenario::new(cfg.topology.clone(), k, m, failed)?;
    let res = min_cost_lp(&sc)?;
    let report = BoundReport {
        topology: cfg.topology.shape(),
        n: cfg.topology.n(),
        k,
        m,
        failed,
        lower_bound: fraction(&res.lower_bound),
        traffic: res.subgraph.entries(),
    };
    Ok(match format {
        Format::Json => json(&report),
        Format::Csv => format!("n,k,M,failed,lower_bound\n{},{k},{m},{failed},{}\n", report.n, report.lower_bound),
        Format::Pretty => {
            let mut s = format!(
                "{}, k={k}, M={m}, failed node {failed}\nlower bound: {}\n",
                report.topology, report.lower_bound
            );
            for t in &report.traffic {
                let _ = writeln!(s, "  {:>3} -> {:<3} {}", t.from, t.to, t.amount);
            }
            s
        }
    })
}

fn cmd_repair(args: &ScenarioArgs, format: Format) -> Result<String, CliError> {
    let cfg = ScenarioConfig::resolve(args)?;
    let failed = cfg.failed()?;
    let (engine, code) = cfg.engine_and_code()?;
    let state = cfg.build_code(code)?;
    if !cfg.topology.contains(failed) {
        return Err(CliError::Invalid(format!("node {failed} does not exist")));
    }
    let tr = run_engine(engine, &state, &cfg.topology, failed, cfg.split)?;
    let report = RepairReport {
        engine,
        code: code.name(),
        q: state.field().modulus(),
        failed_node: failed,
        steps: &tr.steps,
        recovered: &tr.recovered,
        cost: tr.cost(),
        exact: verify_exactness(&state, failed, &tr),
        causal: replay(&state, &cfg.topology, &tr).is_ok(),
    };
    Ok(match format {
        Format::Json => json(&report),
        Format::Csv => return Err(CliError::Usage("csv output is available for bound and table".into())),
        Format::Pretty => {
            let mut s = format!("{engine} repair of node {failed} ({} code over GF({}))\n", code.name(), report.q);
            for st in report.steps {
                let _ = writeln!(s, "  {:>3} -> {:<3} {} fragment(s)", st.from, st.to, st.payload.len());
            }
            let _ = writeln!(s, "cost {}, exact {}, causal {}", report.cost, report.exact, report.causal);
            s
        }
    })
}

fn cmd_table(dims: &[usize], format: Format) -> Result<String, CliError> {
    if dims.len() % 2 == 1 {
        return Err(CliError::Usage("table dimensions come in pairs: R S [R S ...]".into()));
    }
    let requested: Vec<(usize, usize)> =
        if dims.is_empty() { DEFAULT_DIMENSIONS.to_vec() } else { dims.chunks(2).map(|c| (c[0], c[1])).collect() };
    let mut keep = Vec::new();
    for &(r, s) in &requested {
        if r == 0 || s == 0 || (r * s) % 2 == 1 {
            eprintln!("warning: skipping {r}x{s}: grid codes need an even number of nodes (n = 2k)");
        } else {
            keep.push((r, s));
        }
    }
    if keep.is_empty() {
        return Err(CliError::Invalid("no valid grid dimensions".into()));
    }
    let rows = build_cost_table(&keep)?;
    Ok(match format {
        Format::Csv => table_csv(&rows),
        Format::Json => json(&rows),
        Format::Pretty => pretty_table(&rows),
    })
}

fn pretty_table(rows: &[TableRow]) -> String {
    let mut s = format!(
        "{:>5} {:>3} {:>3} {:>8} {:>8} {:>10} {:>8}\n",
        "grid", "n", "k", "subopt1", "subopt2", "method3", "reference"
    );
    for r in rows {
        let reference = match (r.method3_paper, r.matches) {
            (Some(p), Some(true)) => format!("{p}"),
            (Some(p), _) => format!("{p} (!)"),
            (None, _) => "-".into(),
        };
        let _ = writeln!(
            s,
            "{:>5} {:>3} {:>3} {:>8} {:>8} {:>10} {:>8}",
            format!("{}x{}", r.rows, r.cols),
            r.n,
            r.k,
            r.subopt1,
            r.subopt2,
            fraction(&r.method3_computed),
            reference
        );
    }
    s
}

fn cmd_verify(args: &ScenarioArgs, format: Format) -> Result<String, CliError> {
    let cfg = ScenarioConfig::resolve(args)?;
    let (engine, code) = cfg.engine_and_code()?;
    let state = cfg.build_code(code)?;
    if cfg.split.is_some() {
        return Err(CliError::Usage("--split applies to `repair` only".into()));
    }
    let report = verify_system(&state, &cfg.topology, engine, cfg.failed)?;
    let out = match format {
        Format::Json => json(&report),
        Format::Csv => return Err(CliError::Usage("csv output is available for bound and table".into())),
        Format::Pretty => {
            let mut s = format!(
                "{engine} on {} ({} code over GF({}))\nMDS: {} ({} subsets)\n",
                cfg.topology.shape(),
                code.name(),
                state.field().modulus(),
                if report.mds.ok { "ok" } else { "VIOLATED" },
                report.mds.subsets_checked
            );
            for r in &report.nodes {
                let _ = match &r.error {
                    Some(e) => writeln!(s, "  node {:>3}: {e} FAIL", r.failed),
                    None => writeln!(
                        s,
                        "  node {:>3}: cost {:>5} bound {:>6} {}",
                        r.failed,
                        fraction(&r.cost_achieved),
                        fraction(&r.cost_bound),
                        if r.pass { "ok" } else { "FAIL" }
                    ),
                };
            }
            s
        }
    };
    print!("{out}");
    match report.first_failure() {
        Some(why) => Err(CliError::Failed(why)),
        None => Ok(String::new()),
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let threads = if cli.jobs == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { cli.jobs };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    match &cli.cmd {
        Command::Bound(a) => cmd_bound(a, cli.format.unwrap_or(Format::Json)),
        Command::Repair(a) => cmd_repair(a, cli.format.unwrap_or(Format::Json)),
        Command::Table { dims } => cmd_table(dims, cli.format.unwrap_or(Format::Csv)),
        Command::Verify(a) => cmd_verify(a, cli.format.unwrap_or(Format::Json)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let label = if matches!(e, CliError::Failed(_)) { "verification failed" } else { "error" };
            eprintln!("{label}: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
