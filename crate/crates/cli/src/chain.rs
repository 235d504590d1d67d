use std::fmt::Write as _;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};

use valsat::markov::{
    a3_closed_form, convergence_limits, first_passage_estimate, matrix_power, normal_first_passage_limit,
    period_and_classes, reflecting_classes_closed_form, reflecting_stationary_closed_form, reflecting_walk_matrix,
    stationary_distribution, Parity,
};
use valsat::{BigRational, Scalar};

const STATIONARY_TOLERANCE: f64 = 1e-10;
const LIMIT_TOLERANCE: f64 = 1e-8;
const A3_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    /// Solve πA = π exactly and compare with 1/(2M) at the barriers, 1/M
    /// inside.
    Stationary,
    /// Period and cyclic classes (even and odd levels).
    Period,
    /// Rows of A^m and A^(m+1) against d·π on the reachable class.
    Limits,
    /// Closed forms of A^(2k−1) and A^(2k) for M = 4, k = 1..=K.
    A3,
    /// Monte Carlo probability that a ±1 walk reaches distance r within
    /// t·r² steps, against 2(1 − Φ(1/√t)).
    FirstPassage,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Grid resolution: the walk lives on 0..=M.
    #[arg(long = "M", default_value_t = 4)]
    resolution: u32,
    /// Property to check.
    #[arg(long, value_enum)]
    check: Check,
    /// Largest k for the a3 check.
    #[arg(long, default_value_t = 20)]
    k: u32,
    /// Time ratio t (steps = t·r²) for first-passage.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Target distance r for first-passage.
    #[arg(long, default_value_t = 100)]
    r: u64,
    /// Monte Carlo trials for first-passage.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// RNG seed for first-passage.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exponent m for the limits check (m and m + 1 are both used).
    #[arg(long, default_value_t = 10_000)]
    m_large: u64,
    /// Start state for the limits check [default: every state].
    #[arg(long)]
    from: Option<usize>,
    /// Print CSV instead of a text report.
    #[arg(long)]
    csv: bool,
}

fn tuple(values: impl IntoIterator<Item = String>) -> String {
    format!("({})", values.into_iter().collect::<Vec<_>>().join(", "))
}

fn set(states: &[usize]) -> String {
    format!("{{{}}}", states.iter().map(usize::to_string).collect::<Vec<_>>().join(", "))
}

fn stationary(args: &ChainArgs, out: &mut String) -> Result<bool> {
    let m = args.resolution;
    let a = reflecting_walk_matrix::<BigRational>(m)?;
    let pi = stationary_distribution(&a)?;
    let closed = reflecting_stationary_closed_form::<BigRational>(m);
    let exact_match = pi.pi == closed;
    let residual = pi.residual(&a);
    let a64 = reflecting_walk_matrix::<f64>(m)?;
    let pi64 = stationary_distribution(&a64)?;
    let float_error =
        pi64.pi.iter().zip(&closed).map(|(x, c)| (x - c.to_f64()).abs()).fold(0.0, f64::max);
    let float_residual = pi64.residual(&a64);
    let pass = exact_match && residual == 0.0 && float_error < STATIONARY_TOLERANCE && float_residual < STATIONARY_TOLERANCE;
    if args.csv {
        writeln!(out, "state,pi,exact,closed_form")?;
        for (i, (p, c)) in pi.pi.iter().zip(&closed).enumerate() {
            writeln!(out, "{i},{},{p},{c}", p.to_f64())?;
        }
    } else {
        writeln!(out, "M = {m}")?;
        writeln!(out, "pi = {}", tuple(pi.pi.iter().map(|p| p.to_f64().to_string())))?;
        writeln!(out, "exact = {}", tuple(pi.pi.iter().map(|p| p.to_string())))?;
        writeln!(out, "closed form 1/(2M) at barriers, 1/M inside: {}", if exact_match { "match" } else { "MISMATCH" })?;
        writeln!(out, "exact residual |piA - pi| = {residual}")?;
        writeln!(out, "floating point: max error {float_error:e}, residual {float_residual:e}")?;
    }
    Ok(pass)
}

fn period(args: &ChainArgs, out: &mut String) -> Result<bool> {
    let m = args.resolution;
    let cyc = period_and_classes(&reflecting_walk_matrix::<BigRational>(m)?)?;
    let pass = cyc == reflecting_classes_closed_form(m);
    if args.csv {
        writeln!(out, "state,class")?;
        for s in 0..=m as usize {
            writeln!(out, "{s},{}", cyc.class_of(s).expect("classes cover the states"))?;
        }
    } else {
        writeln!(out, "M = {m}")?;
        writeln!(out, "period = {}", cyc.period)?;
        for (r, class) in cyc.classes.iter().enumerate() {
            writeln!(out, "S{r} = {}", set(class))?;
        }
        writeln!(out, "even/odd levels: {}", if pass { "match" } else { "MISMATCH" })?;
    }
    Ok(pass)
}

fn limits(args: &ChainArgs, out: &mut String) -> Result<bool> {
    let m = args.resolution;
    let a = reflecting_walk_matrix::<f64>(m)?;
    let states: Vec<usize> = match args.from {
        Some(s) if s > m as usize => bail!("--from {s} is not a state of 0..={m}"),
        Some(s) => vec![s],
        None => (0..=m as usize).collect(),
    };
    let mut pass = true;
    if args.csv {
        writeln!(out, "from,exponent,state,row,expected")?;
    } else {
        writeln!(out, "M = {m}")?;
    }
    for &from in &states {
        for exponent in [args.m_large, args.m_large + 1] {
            let rep = convergence_limits(&a, from, Parity::of(exponent), exponent)?;
            let err = rep.max_error();
            pass &= err < LIMIT_TOLERANCE;
            if args.csv {
                for (y, (r, e)) in rep.row.iter().zip(&rep.expected).enumerate() {
                    writeln!(out, "{from},{exponent},{y},{r},{e}")?;
                }
            } else {
                writeln!(
                    out,
                    "from {from}, A^{exponent}: expected {} max error {err:e}",
                    tuple(rep.expected.iter().map(f64::to_string))
                )?;
            }
        }
    }
    Ok(pass)
}

fn a3(args: &ChainArgs, out: &mut String) -> Result<bool> {
    if args.resolution != 4 {
        bail!("the a3 closed forms are for M = 4, got M = {}", args.resolution);
    }
    let a = reflecting_walk_matrix::<f64>(4)?;
    let exact = reflecting_walk_matrix::<BigRational>(4)?;
    let mut pass = true;
    writeln!(out, "{}", if args.csv { "k,power,max_error,exact_match" } else { "M = 4" })?;
    for k in 1..=args.k {
        for (parity, power) in [(Parity::Odd, 2 * k - 1), (Parity::Even, 2 * k)] {
            let closed = a3_closed_form::<f64>(k, parity)?;
            let err = closed.max_abs_diff(&matrix_power(&a, u64::from(power)));
            let exact_match = a3_closed_form::<BigRational>(k, parity)? == matrix_power(&exact, u64::from(power));
            pass &= err < A3_TOLERANCE && exact_match;
            if args.csv {
                writeln!(out, "{k},{power},{err:e},{exact_match}")?;
            } else {
                writeln!(out, "k = {k}, A^{power}: max error {err:e}, exact {}", if exact_match { "match" } else { "MISMATCH" })?;
            }
        }
    }
    Ok(pass)
}

fn first_passage(args: &ChainArgs, out: &mut String) -> Result<bool> {
    let est = first_passage_estimate(args.r, args.t, args.trials, args.seed)?;
    let limit = normal_first_passage_limit(args.t)?;
    let p = est.probability();
    let se = est.std_error();
    let z = if se > 0.0 { (p - limit) / se } else { f64::INFINITY };
    let pass = (p - limit).abs() <= 3.0 * se;
    if args.csv {
        writeln!(out, "r,t,steps,trials,hits,estimate,std_error,limit,z")?;
        writeln!(out, "{},{},{},{},{},{p},{se},{limit},{z}", args.r, args.t, est.max_steps, est.trials, est.hits)?;
    } else {
        writeln!(out, "r = {}, t = {}, steps = {}, trials = {}", args.r, args.t, est.max_steps, est.trials)?;
        writeln!(out, "estimate = {p} (std error {se})")?;
        writeln!(out, "limit 2(1 - Phi(1/sqrt(t))) = {limit}")?;
        writeln!(out, "z = {z:.3}, within 3 std errors: {pass}")?;
    }
    Ok(pass)
}

pub fn run(args: ChainArgs) -> Result<ExitCode> {
    log::info!("analyze-chain: {args:?}");
    let mut out = String::new();
    let pass = match args.check {
        Check::Stationary => stationary(&args, &mut out)?,
        Check::Period => period(&args, &mut out)?,
        Check::Limits => limits(&args, &mut out)?,
        Check::A3 => a3(&args, &mut out)?,
        Check::FirstPassage => first_passage(&args, &mut out)?,
    };
    if !args.csv {
        writeln!(out, "{}", if pass { "PASS" } else { "FAIL" })?;
    }
    print!("{out}");
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
