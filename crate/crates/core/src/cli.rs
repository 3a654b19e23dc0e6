//! The `kasi` command line: `solve`, `gen`, `verify` and `bench`.
//!
//! Exit codes: 0 success, 1 internal failure (including a solver/oracle
//! disagreement found by `verify`), 2 bad input or usage, 3 budget exceeded.
//!
//! `--config FILE` reads `key = value` lines and treats each as the long flag
//! `--key value` placed before the command-line flags, so explicit flags win.
//! `key = true` sets a switch; `key = false` leaves it unset. Lines starting
//! with `#` are comments. The environment variable `KASI_BUDGET` sets the
//! default oracle state budget for `verify`.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::batch;
use crate::game::{Energy, EnergyVector, GameGraph};
use crate::gen::{self, CollectParams, Family, GenSpec, SupplyParams, TaxiParams};
use crate::io::{self, BenchRow, Problem, BENCH_HEADER};
use crate::kasi::{self, InitialStrategy, SolveError, SolveOptions};
use crate::oracle::{self, OracleBudget, OracleError};
use crate::vi;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Graph(_) | SolveError::OverflowRisk { .. } => CliError::Input(e.to_string()),
            SolveError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Budget(e.to_string())
    }
}

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<gen::GenError> for CliError {
    fn from(e: gen::GenError) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "kasi", version, about = "Energy problems on mean-payoff games", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Solve lb or lwub on a game file.
    Solve(SolveArgs),
    /// Generate an instance.
    Gen(GenArgs),
    /// Differential test of the solvers against the brute-force oracle.
    Verify(VerifyArgs),
    /// Time solvers on game files.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Kasi,
    Vi,
}

impl Algorithm {
    fn as_str(self) -> &'static str {
        match self {
            Algorithm::Kasi => "kasi",
            Algorithm::Vi => "vi",
        }
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Game file, or `-` for standard input.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Algorithm::Kasi)]
    pub algorithm: Algorithm,
    #[arg(long, default_value = "lb")]
    pub problem: Problem,
    /// Energy cap; required for lwub, rejected for lb.
    #[arg(long)]
    pub bound: Option<u64>,
    /// Result file (default: standard output).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Write Max's strategy (kasi only).
    #[arg(long)]
    pub emit_strategy: Option<PathBuf>,
    /// Write Min's witness (kasi only).
    #[arg(long)]
    pub emit_witness: Option<PathBuf>,
    /// Random initial Min strategy for kasi instead of the lowest successor.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Check solver invariants while running.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Sprand,
    Torus,
    Layered,
    Collect,
    Supply,
    Taxi,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Vertex count (sprand).
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Edges per vertex (sprand).
    #[arg(long, default_value_t = 5)]
    pub edge_factor: usize,
    /// Grid rows (torus, collect).
    #[arg(long)]
    pub rows: Option<usize>,
    /// Grid columns (torus, collect).
    #[arg(long)]
    pub cols: Option<usize>,
    /// Added cycles (torus).
    #[arg(long, default_value_t = 0)]
    pub cycles: usize,
    #[arg(long, default_value_t = 8)]
    pub layers: usize,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub weight_lo: i64,
    #[arg(long, default_value_t = 10_000, allow_hyphen_values = true)]
    pub weight_hi: i64,
    /// Constant subtracted from every weight.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub shift: i64,
    /// Pick the smallest shift giving at least this fraction of ν < 0 vertices.
    #[arg(long, conflicts_with = "shift")]
    pub negative_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Collect: row-major cell indices.
    #[arg(long, value_delimiter = ',')]
    pub docks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub obstacles: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub item_sites: Option<Vec<usize>>,
    #[arg(long)]
    pub move_cost: Option<i64>,
    #[arg(long)]
    pub idle_cost: Option<i64>,
    #[arg(long)]
    pub recharge: Option<i64>,
    /// Supply and taxi ring size.
    #[arg(long)]
    pub locations: Option<usize>,
    #[arg(long)]
    pub max_request: Option<i64>,
    #[arg(long)]
    pub refill: Option<i64>,
    #[arg(long)]
    pub drive_cost: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub fare_base: Option<i64>,
    #[arg(long)]
    pub fare_rate: Option<i64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    pub n_max: usize,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 10)]
    pub bound_max: u64,
    #[arg(long, default_value_t = 4)]
    pub weight_max: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Oracle state budget per instance.
    #[arg(long, env = "KASI_BUDGET", default_value_t = 1_000_000)]
    pub budget: u64,
    /// Solver to check; both by default.
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    /// Where to write a shrunk counterexample (default: standard error).
    #[arg(long)]
    pub counterexample: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Game files.
    pub inputs: Vec<PathBuf>,
    /// Add the built-in desk-scale corpus.
    #[arg(long)]
    pub desk: bool,
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "kasi,vi")]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', default_value = "lb,lwub")]
    pub problems: Vec<Problem>,
    /// lwub bound for every instance; default is half the mean finite lb.
    #[arg(long)]
    pub bound: Option<u64>,
    /// Per-run limit in seconds for vi; cells that hit it are reported on
    /// standard error and left out of the CSV.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Run cells on the thread pool.
    #[arg(long)]
    pub parallel: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Splices `--config FILE` into the argument list.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let pos = args.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="));
    let Some(pos) = pos else {
        return Ok(args);
    };
    let (path, width) = match args[pos].to_string_lossy().strip_prefix("--config=") {
        Some(p) => (PathBuf::from(p), 1),
        None => match args.get(pos + 1) {
            Some(p) => (PathBuf::from(p), 2),
            None => return Err(CliError::Input("--config needs a file".into())),
        },
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut flags = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Input(format!("{}:{}: expected key=value", path.display(), i + 1)));
        };
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        match value {
            "true" => flags.push(OsString::from(format!("--{key}"))),
            "false" => {}
            v => flags.push(OsString::from(format!("--{key}={v}"))),
        }
    }
    let mut out: Vec<OsString> = args[..pos].to_vec();
    // Config flags go right after the subcommand so later flags override them.
    let insert_at = out.len().min(2);
    out.splice(insert_at..insert_at, flags);
    out.extend_from_slice(&args[pos + width..]);
    Ok(out)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run(args: Vec<OsString>) -> Result<(), CliError> {
    let args = expand_config(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::{DisplayHelp, DisplayVersion};
            if matches!(e.kind(), DisplayHelp | DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Input(e.to_string().trim_end().to_string()));
        }
    };
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    if path == Path::new("-") {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Input(format!("stdin: {e}")))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(format!("stdout: {e}"))),
        Some(p) if p == Path::new("-") => write_output(None, text),
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
    }
}

fn load_game(path: &Path) -> Result<GameGraph, CliError> {
    let text = read_input(path)?;
    io::parse_game(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// The bound a run uses: the given one for lwub, `(|V| − 1)·W` for lb.
fn resolve_bound(graph: &GameGraph, problem: Problem, bound: Option<u64>) -> Result<u64, CliError> {
    match (problem, bound) {
        (Problem::Lwub, Some(b)) => Ok(b),
        (Problem::Lwub, None) => Err(CliError::Input("--bound is required for lwub".into())),
        (Problem::Lb, Some(_)) => Err(CliError::Input("--bound applies to lwub only".into())),
        (Problem::Lb, None) => Ok(kasi::lb_bound(graph)?),
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let graph = load_game(&a.input)?;
    let bound = resolve_bound(&graph, a.problem, a.bound)?;
    match a.algorithm {
        Algorithm::Kasi => {
            let options = SolveOptions {
                initial: a.seed.map_or(InitialStrategy::LowestSuccessor, InitialStrategy::Seeded),
                check_invariants: a.check,
                ..SolveOptions::default()
            };
            let r = kasi::solve_lwub_with(&graph, bound, &options)?;
            write_output(a.output.as_deref(), &io::render_result(&r.lwub))?;
            if let Some(p) = &a.emit_strategy {
                write_output(Some(p), &io::render_strategy(&r.max_strategy))?;
            }
            if let Some(p) = &a.emit_witness {
                write_output(Some(p), &io::render_witness(&r.min_witness))?;
            }
        }
        Algorithm::Vi => {
            if a.emit_strategy.is_some() || a.emit_witness.is_some() {
                return Err(CliError::Input("strategies and witnesses come from kasi only".into()));
            }
            write_output(a.output.as_deref(), &io::render_result(&vi::vi_solve(&graph, bound)))?;
        }
    }
    Ok(())
}

fn gen_spec(a: &GenArgs) -> GenSpec {
    let family = match a.family {
        FamilyArg::Sprand => Family::Sprand {
            n: a.n,
            edge_factor: a.edge_factor,
        },
        FamilyArg::Torus => Family::Torus {
            rows: a.rows.unwrap_or(16),
            cols: a.cols.unwrap_or(16),
            cycles: a.cycles,
        },
        FamilyArg::Layered => Family::Layered {
            layers: a.layers,
            width: a.width,
            degree: a.degree,
        },
        FamilyArg::Collect => {
            let d = CollectParams::default();
            Family::Collect(CollectParams {
                rows: a.rows.unwrap_or(d.rows),
                cols: a.cols.unwrap_or(d.cols),
                obstacles: a.obstacles.clone().unwrap_or(d.obstacles),
                docks: a.docks.clone().unwrap_or(d.docks),
                item_sites: a.item_sites.clone().or(d.item_sites),
                move_cost: a.move_cost.unwrap_or(d.move_cost),
                idle_cost: a.idle_cost.unwrap_or(d.idle_cost),
                recharge: a.recharge.unwrap_or(d.recharge),
            })
        }
        FamilyArg::Supply => {
            let d = SupplyParams::default();
            Family::Supply(SupplyParams {
                locations: a.locations.unwrap_or(d.locations),
                max_request: a.max_request.unwrap_or(d.max_request),
                refill: a.refill.unwrap_or(d.refill),
            })
        }
        FamilyArg::Taxi => {
            let d = TaxiParams::default();
            Family::Taxi(TaxiParams {
                locations: a.locations.unwrap_or(d.locations),
                drive_cost: a.drive_cost.unwrap_or(d.drive_cost),
                fare_base: a.fare_base.unwrap_or(d.fare_base),
                fare_rate: a.fare_rate.unwrap_or(d.fare_rate),
            })
        }
    };
    GenSpec {
        family,
        weights: (a.weight_lo, a.weight_hi),
        shift: a.shift,
        seed: a.seed,
    }
}

fn negative_count(g: &GameGraph) -> Result<usize, SolveError> {
    Ok(kasi::winning_sign(g)?.negative().len())
}

fn cmd_gen(a: &GenArgs) -> Result<(), CliError> {
    let mut spec = gen_spec(a);
    if let Some(target) = a.negative_fraction {
        if !(0.0..=1.0).contains(&target) {
            return Err(CliError::Input("--negative-fraction must lie in [0, 1]".into()));
        }
        let choice = gen::tune_shift(&spec, target, negative_count).map_err(|e| match e {
            gen::TuneError::Gen(e) => CliError::from(e),
            gen::TuneError::Solve(e) => CliError::from(e),
        })?;
        spec.shift = choice.shift;
    }
    let graph = gen::generate(&spec)?;
    let mut text = format!("c {} seed {} shift {}\n", spec.family_name(), spec.seed, spec.shift);
    text.push_str(&io::render_game(&graph));
    write_output(a.output.as_deref(), &text)
}

/// One verify instance: a random game and a bound.
pub fn verify_instance(seed: u64, trial: usize, n_max: usize, w_max: i64, bound_max: u64) -> (GameGraph, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let g = gen::random_game(rng.gen(), n_max, w_max);
    (g, rng.gen_range(0..=bound_max))
}

/// First difference between the solvers and the oracle on `(g, b)`, if any.
fn disagreement(
    g: &GameGraph,
    b: u64,
    algorithms: &[Algorithm],
    budget: &OracleBudget,
) -> Result<Option<String>, CliError> {
    let lb_b = kasi::lb_bound(g)?;
    for (problem, bound) in [(Problem::Lwub, b), (Problem::Lb, lb_b)] {
        let want = oracle::oracle_lwub(g, bound, budget)?;
        for &alg in algorithms {
            let got: EnergyVector = match alg {
                Algorithm::Kasi => kasi::solve_lwub_with(g, bound, &SolveOptions::audited())?.lwub,
                Algorithm::Vi => vi::vi_solve(g, bound),
            };
            if got != want {
                return Ok(Some(format!(
                    "{} {} (b = {bound}): solver {:?}, oracle {:?}",
                    alg.as_str(),
                    problem.as_str(),
                    render_values(&got),
                    render_values(&want)
                )));
            }
        }
    }
    Ok(None)
}

fn render_values(v: &EnergyVector) -> String {
    v.as_slice().iter().map(Energy::to_string).collect::<Vec<_>>().join(" ")
}

/// Deletes vertices one at a time while the disagreement persists.
fn shrink(
    mut g: GameGraph,
    b: u64,
    algorithms: &[Algorithm],
    budget: &OracleBudget,
) -> Result<(GameGraph, String), CliError> {
    let mut why = disagreement(&g, b, algorithms, budget)?.expect("starts disagreeing");
    'outer: loop {
        if g.vertex_count() == 1 {
            break;
        }
        for v in 0..g.vertex_count() {
            let keep: Vec<bool> = (0..g.vertex_count()).map(|u| u != v).collect();
            let (sub, _) = g.induced_subgame(&keep).map_err(|e| CliError::Internal(e.to_string()))?;
            // A smaller game may exceed the budget differently; treat that as "no longer reproduces".
            if let Ok(Some(w)) = disagreement(&sub, b, algorithms, budget) {
                g = sub;
                why = w;
                continue 'outer;
            }
        }
        break;
    }
    Ok((g, why))
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    if a.n_max == 0 || a.weight_max < 0 {
        return Err(CliError::Input("--n-max must be positive and --weight-max non-negative".into()));
    }
    let budget = OracleBudget {
        states: a.budget,
        ..OracleBudget::default()
    };
    let algorithms: Vec<Algorithm> = match a.algorithm {
        Some(x) => vec![x],
        None => vec![Algorithm::Kasi, Algorithm::Vi],
    };
    let outcomes = batch::map_indices(a.trials, |i| {
        let (g, b) = verify_instance(a.seed, i, a.n_max, a.weight_max, a.bound_max);
        disagreement(&g, b, &algorithms, &budget).map(|d| d.map(|_| (g, b)))
    });
    let mut agree = 0;
    let mut first_bad = None;
    for o in outcomes {
        match o? {
            None => agree += 1,
            Some(x) => {
                first_bad.get_or_insert(x);
            }
        }
    }
    println!("{agree}/{} agree", a.trials);
    if let Some((g, b)) = first_bad {
        let (g, why) = shrink(g, b, &algorithms, &budget)?;
        let text = format!("c {why}\n{}", io::render_game(&g));
        match &a.counterexample {
            Some(p) => write_output(Some(p), &text)?,
            None => eprint!("{text}"),
        }
        return Err(CliError::Internal(format!("disagreement: {why}")));
    }
    Ok(())
}

/// One timed run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timing {
    pub seconds: f64,
    pub iterations: u64,
}

/// Times one solve; `None` if vi passes `deadline`.
pub fn time_solve(
    graph: &GameGraph,
    algorithm: Algorithm,
    bound: u64,
    limit: Option<Duration>,
) -> Result<Option<Timing>, CliError> {
    let start = Instant::now();
    let iterations = match algorithm {
        Algorithm::Kasi => kasi::solve_lwub_with(graph, bound, &SolveOptions::fast())?.iterations as u64,
        Algorithm::Vi => match limit {
            None => vi::vi_solve_with(graph, bound, vi::ViVariant::Worklist).work,
            Some(limit) => match vi::vi_solve_until(graph, bound, || start.elapsed() < limit) {
                Some(o) => o.work,
                None => return Ok(None),
            },
        },
    };
    Ok(Some(Timing {
        seconds: start.elapsed().as_secs_f64(),
        iterations,
    }))
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        (xs[k / 2 - 1] + xs[k / 2]) / 2.0
    }
}

/// Half the mean finite lb, the default lwub bound for benchmarks.
pub fn default_lwub_bound(graph: &GameGraph) -> Result<u64, CliError> {
    let lb = kasi::solve_lb_with(graph, &SolveOptions::fast())?.lwub;
    let finite: Vec<u64> = lb.as_slice().iter().filter_map(|x| x.finite()).collect();
    if finite.is_empty() {
        return Ok(0);
    }
    let sum: u128 = finite.iter().map(|&x| x as u128).sum();
    Ok((sum / finite.len() as u128 / 2) as u64)
}

fn cached_bound(path: &Path, graph: &GameGraph) -> Result<u64, CliError> {
    let mut cache = path.as_os_str().to_owned();
    cache.push(".bound");
    let cache = PathBuf::from(cache);
    if let Some(b) = fs::read_to_string(&cache).ok().and_then(|t| t.trim().parse().ok()) {
        return Ok(b);
    }
    let b = default_lwub_bound(graph)?;
    // The cache is an optimization; failing to write it is not an error.
    let _ = fs::write(&cache, format!("{b}\n"));
    Ok(b)
}

struct Instance {
    name: String,
    graph: GameGraph,
    lwub_bound: u64,
}

/// Desk-scale instances of each family; synthetic ones are shifted so that a
/// quarter of the vertices have ν < 0.
pub fn desk_corpus(seed: u64) -> Result<Vec<(String, GameGraph)>, CliError> {
    let synthetic = [
        ("rand5-desk", GenSpec::sprand(2000, 5)),
        ("torus-desk", GenSpec::torus(32, 32, 4)),
        ("layered-desk", GenSpec::layered(16, 64, 4)),
    ];
    let mut out = Vec::new();
    for (name, spec) in synthetic {
        let spec = spec.with_seed(seed);
        let choice = gen::tune_shift(&spec, 0.25, negative_count).map_err(|e| match e {
            gen::TuneError::Gen(e) => CliError::from(e),
            gen::TuneError::Solve(e) => CliError::from(e),
        })?;
        out.push((name.to_string(), gen::generate(&spec.with_shift(choice.shift))?));
    }
    let models = [
        (
            "collect-desk",
            Family::Collect(CollectParams {
                rows: 4,
                cols: 4,
                obstacles: vec![5, 10],
                docks: vec![0],
                ..CollectParams::default()
            }),
        ),
        (
            "supply-desk",
            Family::Supply(SupplyParams {
                locations: 8,
                max_request: 3,
                refill: 4,
            }),
        ),
        (
            "taxi-desk",
            Family::Taxi(TaxiParams {
                locations: 12,
                fare_base: 0,
                ..TaxiParams::default()
            }),
        ),
    ];
    for (name, family) in models {
        out.push((name.to_string(), gen::generate(&GenSpec::new(family))?));
    }
    Ok(out)
}

fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    if a.repeat == 0 {
        return Err(CliError::Input("--repeat must be at least 1".into()));
    }
    if a.inputs.is_empty() && !a.desk {
        return Err(CliError::Input("no instances: pass game files or --desk".into()));
    }
    let limit = match a.timeout {
        Some(t) if !(t.is_finite() && t > 0.0) => return Err(CliError::Input("--timeout must be positive".into())),
        t => t.map(Duration::from_secs_f64),
    };
    let mut instances = Vec::new();
    for path in &a.inputs {
        // Parsing happens here, outside every timed region.
        let graph = load_game(path)?;
        let lwub_bound = match a.bound {
            Some(b) => b,
            None if a.problems.contains(&Problem::Lwub) => cached_bound(path, &graph)?,
            None => 0,
        };
        let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        instances.push(Instance { name, graph, lwub_bound });
    }
    if a.desk {
        for (name, graph) in desk_corpus(a.seed)? {
            let lwub_bound = match a.bound {
                Some(b) => b,
                None => default_lwub_bound(&graph)?,
            };
            instances.push(Instance { name, graph, lwub_bound });
        }
    }

    let mut cells = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        for &problem in &a.problems {
            let bound = match problem {
                Problem::Lb => kasi::lb_bound(&inst.graph)?,
                Problem::Lwub => inst.lwub_bound,
            };
            for &alg in &a.algorithms {
                cells.push((i, problem, bound, alg));
            }
        }
    }
    let run_cell = |&(i, problem, bound, alg): &(usize, Problem, u64, Algorithm)| -> Result<Option<BenchRow>, CliError> {
        let inst = &instances[i];
        let mut secs = Vec::with_capacity(a.repeat);
        let mut iterations = 0;
        for _ in 0..a.repeat {
            match time_solve(&inst.graph, alg, bound, limit)? {
                Some(t) => {
                    secs.push(t.seconds);
                    iterations = t.iterations;
                }
                None => {
                    eprintln!(
                        "{} {} {}: exceeded {:.1} s",
                        inst.name,
                        problem.as_str(),
                        alg.as_str(),
                        limit.map_or(0.0, |l| l.as_secs_f64())
                    );
                    return Ok(None);
                }
            }
        }
        Ok(Some(BenchRow {
            instance: inst.name.clone(),
            n: inst.graph.vertex_count(),
            m: inst.graph.edge_count(),
            problem,
            bound,
            algorithm: alg.as_str().to_string(),
            seconds: median(&mut secs),
            iterations,
        }))
    };
    let rows = if a.parallel {
        batch::map(&cells, run_cell)
    } else {
        batch::map_sequential(&cells, run_cell)
    };
    let mut csv = format!("{BENCH_HEADER}\n");
    for row in rows {
        if let Some(row) = row? {
            csv.push_str(&io::render_bench_row(&row));
            csv.push('\n');
        }
    }
    write_output(a.output.as_deref(), &csv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Owner;

    fn args(s: &[&str]) -> Vec<OsString> {
        s.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_flags_come_first() {
        let dir = std::env::temp_dir().join(format!("kasi-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("run.cfg");
        fs::write(&cfg, "# comment\nfamily = torus\nrows=4\nnegative_fraction = false\nseed = 3\n").unwrap();
        let out = expand_config(args(&["kasi", "gen", "--config", cfg.to_str().unwrap(), "--seed", "9"])).unwrap();
        assert_eq!(
            out,
            args(&["kasi", "gen", "--family=torus", "--rows=4", "--seed=3", "--seed", "9"])
        );
        let Command::Gen(g) = Cli::try_parse_from(out).unwrap().command else {
            panic!("gen expected")
        };
        assert_eq!((g.family, g.rows, g.seed), (FamilyArg::Torus, Some(4), 9));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn bound_presence_follows_the_problem() {
        let g = GameGraph::from_triples(vec![Owner::Max], [(0, 0, 3)]).unwrap();
        assert!(resolve_bound(&g, Problem::Lwub, None).is_err());
        assert!(resolve_bound(&g, Problem::Lb, Some(1)).is_err());
        assert_eq!(resolve_bound(&g, Problem::Lwub, Some(7)).unwrap(), 7);
        assert_eq!(resolve_bound(&g, Problem::Lb, None).unwrap(), 0);
    }

    #[test]
    fn median_of_repeats() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn verify_instances_are_reproducible() {
        let a = verify_instance(5, 17, 7, 4, 10);
        let b = verify_instance(5, 17, 7, 4, 10);
        assert_eq!(a, b);
        assert!(a.0.vertex_count() <= 7 && a.1 <= 10);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Internal(String::new()).exit_code(), 1);
        assert_eq!(CliError::Input(String::new()).exit_code(), 2);
        assert_eq!(CliError::Budget(String::new()).exit_code(), 3);
        let e: CliError = SolveError::BudgetExceeded { what: "x", limit: 1 }.into();
        assert_eq!(e.exit_code(), 3);
    }
}
