use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use valsat::bench::{fit_scaling, run_experiment, summarize_sizes, write_csv, ExperimentSpec, ResolutionRule};
use valsat::cnf::{generate_planted_3sat, generate_random_3sat, parse_dimacs, CnfFormula};
use valsat::solvers::{solve, Algorithm, InitMode, Outcome, SolverConfig};
use valsat::transform::cluster_expression;

mod chain;

/// Truth-valuation random walks for 3SAT.
#[derive(Debug, Parser)]
#[command(name = "valsat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a local-search solver on a DIMACS CNF formula.
    Solve(SolveArgs),
    /// Rewrite a 3SAT formula so that every variable occurs in at most three
    /// clauses.
    Transform(TransformArgs),
    /// Generate a random or planted 3SAT instance in DIMACS format.
    Generate(GenerateArgs),
    /// Check properties of the reflecting random walk on 0..=M.
    AnalyzeChain(chain::ChainArgs),
    /// Run a scaling experiment and write one CSV row per run.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Solver: classic (boolean walk, 3n flips per try), valuation (walk on
    /// the grid k/M), hillclimb (coordinate ascent on the clustered formula)
    /// or sparrow (make/break flips on the clustered formula).
    #[arg(long, default_value = "valuation")]
    algo: Algorithm,
    /// Grid resolution M: valuations take the values k/M, 0 ≤ k ≤ M.
    #[arg(long = "M", default_value_t = 4)]
    resolution: u32,
    /// Total probability of a negative flip (sparrow).
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// RNG seed; runs with the same seed are reproducible.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Steps per try [default: 3n classic, 4n²M² valuation, 4N² hillclimb,
    /// 2m² sparrow].
    #[arg(long)]
    max_steps: Option<u64>,
    /// Number of independent tries.
    #[arg(long, default_value_t = 1)]
    restarts: u32,
    /// Start state: half (every level at M/2), s0 (uniform on the even
    /// levels) or boolean (uniform on 0 and M).
    #[arg(long, default_value = "half")]
    init: InitMode,
    /// Also accept when rounding every level to the nearer barrier satisfies
    /// the formula (valuation walk; off by default).
    #[arg(long)]
    check_rounded: bool,
    /// DIMACS file; standard input when absent or `-`.
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TransformArgs {
    /// Output file for the clustered formula; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Output file for the occurrence map (`occurrence original` per line)
    /// [default: <output>.map; not written for standard output].
    #[arg(long)]
    map: Option<PathBuf>,
    /// DIMACS file; standard input when absent or `-`.
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Number of variables.
    #[arg(long)]
    n: usize,
    /// Number of clauses [default: round(4n)].
    #[arg(long)]
    m: Option<usize>,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plant a hidden solution; it is written as a `c planted` comment line.
    #[arg(long)]
    planted: bool,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// TOML experiment spec; the flags below override its entries.
    spec: Option<PathBuf>,
    /// Solver to study.
    #[arg(long)]
    algo: Option<Algorithm>,
    /// Comma-separated instance sizes [default: 10,20,30,40].
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Clauses per variable [default: 4.0].
    #[arg(long)]
    ratio: Option<f64>,
    /// Grid resolution: `n`, `2n` or a fixed integer [default: n].
    #[arg(long = "M")]
    resolution: Option<ResolutionRule>,
    /// Seeds per size [default: 25].
    #[arg(long)]
    seeds: Option<u64>,
    /// First seed of each size [default: 0].
    #[arg(long)]
    first_seed: Option<u64>,
    /// Steps per try [default: the solver's own budget].
    #[arg(long)]
    max_steps: Option<u64>,
    /// Tries per run [default: 1].
    #[arg(long)]
    restarts: Option<u32>,
    /// Negative-flip mass for sparrow [default: 0.1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Start state: half, s0 or boolean [default: half].
    #[arg(long)]
    init: Option<InitMode>,
    /// Also accept when rounding the valuation walk's levels satisfies the
    /// formula (beyond the published walk).
    #[arg(long)]
    check_rounded: bool,
    /// Uniform random instances decided by brute force instead of planted
    /// ones (n ≤ 24).
    #[arg(long)]
    random: bool,
    /// Record wall-clock milliseconds (makes the CSV irreproducible).
    #[arg(long)]
    timing: bool,
    /// CSV output file; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) if p != Path::new("-") => {
            std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))
        }
        _ => {
            let mut text = String::new();
            io::stdin().read_to_string(&mut text).context("cannot read standard input")?;
            Ok(text)
        }
    }
}

fn read_formula(path: Option<&Path>) -> Result<CnfFormula> {
    let parsed = parse_dimacs(&read_input(path)?)?;
    for w in &parsed.warnings {
        log::warn!("{w:?}");
    }
    Ok(parsed.formula)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run_solve(args: SolveArgs) -> Result<ExitCode> {
    let formula = read_formula(args.input.as_deref())?;
    let cfg = SolverConfig {
        resolution: args.resolution,
        max_steps: args.max_steps,
        restarts: args.restarts,
        alpha: args.alpha,
        seed: args.seed,
        init_mode: args.init,
        check_rounded: args.check_rounded,
        ..Default::default()
    };
    cfg.validate()?;
    log::info!("solve: algo={} input={:?} config={:?}", args.algo, args.input, cfg);
    let result = solve(args.algo, &formula, &cfg, None)?;

    let mut out = String::new();
    match &result.outcome {
        Outcome::Sat(a) => {
            out.push_str("SAT\n");
            out.push_str(&a.to_v_lines());
        }
        Outcome::Exhausted => out.push_str("UNKNOWN\n"),
    }
    let stats = json!({
        "algo": args.algo.to_string(),
        "M": cfg.resolution,
        "seed": cfg.seed,
        "steps": result.steps_used,
        "restarts": result.restarts_used,
        "reflections": result.reflections,
    });
    out.push_str(&serde_json::to_string(&stats)?);
    out.push('\n');
    io::stdout().write_all(out.as_bytes())?;
    Ok(if result.outcome.is_sat() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_transform(args: TransformArgs) -> Result<ExitCode> {
    let formula = read_formula(args.input.as_deref())?;
    log::info!("transform: input={:?} output={:?} map={:?}", args.input, args.output, args.map);
    let cf = cluster_expression(&formula)?;
    write_output(args.output.as_deref(), &cf.formula().to_dimacs())?;
    let map = args.map.or_else(|| {
        args.output.as_ref().map(|o| {
            let mut name = o.clone().into_os_string();
            name.push(".map");
            PathBuf::from(name)
        })
    });
    if let Some(map) = map {
        write_output(Some(&map), &cf.mapping_text())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_generate(args: GenerateArgs) -> Result<ExitCode> {
    let m = args.m.unwrap_or((4.0 * args.n as f64).round() as usize);
    log::info!("generate: n={} m={} seed={} planted={}", args.n, m, args.seed, args.planted);
    let text = if args.planted {
        let (formula, solution) = generate_planted_3sat(args.n, m, args.seed)?;
        let lits: Vec<String> = (1..=args.n as u32)
            .map(|v| if solution.value(v) { v.to_string() } else { format!("-{v}") })
            .collect();
        format!("c planted {}\n{}", lits.join(" "), formula.to_dimacs())
    } else {
        generate_random_3sat(args.n, m, args.seed)?.to_dimacs()
    };
    write_output(args.output.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_bench(args: BenchArgs) -> Result<ExitCode> {
    let mut spec = match &args.spec {
        Some(path) => ExperimentSpec::from_path(path).with_context(|| format!("in {}", path.display()))?,
        None => ExperimentSpec::default(),
    };
    if let Some(v) = args.algo {
        spec.algo = v;
    }
    if let Some(v) = args.n {
        spec.n_grid = v;
    }
    if let Some(v) = args.ratio {
        spec.clause_ratio = v;
    }
    if let Some(v) = args.resolution {
        spec.resolution = v;
    }
    if let Some(v) = args.seeds {
        spec.seeds = v;
    }
    if let Some(v) = args.first_seed {
        spec.first_seed = v;
    }
    if args.max_steps.is_some() {
        spec.max_steps = args.max_steps;
    }
    if let Some(v) = args.restarts {
        spec.restarts = v;
    }
    if let Some(v) = args.alpha {
        spec.alpha = v;
    }
    if let Some(v) = args.init {
        spec.init = v;
    }
    spec.check_rounded |= args.check_rounded;
    spec.planted &= !args.random;
    spec.timing |= args.timing;
    if args.output.is_some() {
        spec.output = args.output;
    }
    spec.validate()?;
    log::info!("bench: jobs={:?} spec={:?}", args.jobs, spec);

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        pool = pool.num_threads(jobs);
    }
    let results = pool.build()?.install(|| run_experiment(&spec))?;
    if spec.output.is_none() {
        write_csv(&results, io::stdout().lock())?;
    }
    match fit_scaling(&results) {
        Ok(fit) if spec.output.is_some() => print!("{fit}"),
        Ok(fit) => eprint!("{fit}"),
        Err(e) => {
            log::warn!("{e}");
            let mut text = String::from("n,cells,solved,solved_fraction,median_steps\n");
            for s in summarize_sizes(&results) {
                let median = s.median_steps.map(|m| m.to_string()).unwrap_or_default();
                text.push_str(&format!("{},{},{},{},{}\n", s.n, s.cells, s.solved, s.solved_fraction, median));
            }
            if spec.output.is_some() {
                print!("{text}");
            } else {
                eprint!("{text}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Transform(args) => run_transform(args),
        Command::Generate(args) => run_generate(args),
        Command::AnalyzeChain(args) => chain::run(args),
        Command::Bench(args) => run_bench(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
