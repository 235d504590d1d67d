//! Scaling experiments: solve generated instances over a grid of sizes and
//! seeds, write one CSV row per run, and fit `log(median steps)` against
//! `log(n)`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::cnf::{brute_force_sat, generate_planted_3sat, generate_random_3sat, CnfError, BRUTE_FORCE_MAX_VARS};
use crate::rng::derive_seed;
use crate::solvers::{solve, Algorithm, InitMode, SolverConfig, SolverError};

/// Exact CSV header written by [`write_csv`].
pub const CSV_HEADER: &str = "algo,n,m,M,seed,solved,steps,restarts,wall_ms,pos_refl,neg_refl,final_hamming";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("cannot parse experiment spec: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error("n = {n}, seed = {seed}: {source}")]
    Solver { n: usize, seed: u64, source: SolverError },
    #[error("cannot fit scaling: {0}")]
    InsufficientData(String),
}

/// How the grid resolution `M` follows the instance size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(try_from = "RawResolutionRule")]
pub enum ResolutionRule {
    Fixed(u32),
    EqualN,
    TwiceN,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawResolutionRule {
    Fixed(u32),
    Named(String),
}

impl TryFrom<RawResolutionRule> for ResolutionRule {
    type Error = String;

    fn try_from(raw: RawResolutionRule) -> Result<Self, Self::Error> {
        match raw {
            RawResolutionRule::Fixed(k) => Ok(ResolutionRule::Fixed(k)),
            RawResolutionRule::Named(s) => s.parse(),
        }
    }
}

impl ResolutionRule {
    pub fn resolve(self, n: usize) -> u32 {
        match self {
            ResolutionRule::Fixed(k) => k,
            ResolutionRule::EqualN => n as u32,
            ResolutionRule::TwiceN => 2 * n as u32,
        }
    }
}

impl FromStr for ResolutionRule {
    type Err = String;

    /// `n`, `2n` or a fixed positive integer.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "n" => Ok(ResolutionRule::EqualN),
            "2n" => Ok(ResolutionRule::TwiceN),
            other => other
                .parse()
                .map(ResolutionRule::Fixed)
                .map_err(|_| format!("M rule must be `n`, `2n` or an integer, got `{other}`")),
        }
    }
}

impl fmt::Display for ResolutionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolutionRule::Fixed(k) => write!(f, "{k}"),
            ResolutionRule::EqualN => f.write_str("n"),
            ResolutionRule::TwiceN => f.write_str("2n"),
        }
    }
}

/// One experiment: every `n` of the grid crossed with seeds
/// `first_seed..first_seed + seeds`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub algo: Algorithm,
    pub n_grid: Vec<usize>,
    /// Clauses per variable; `m = round(ratio · n)`.
    pub clause_ratio: f64,
    #[serde(rename = "M")]
    pub resolution: ResolutionRule,
    pub seeds: u64,
    pub first_seed: u64,
    /// Steps per try; `None` keeps the algorithm's default budget.
    pub max_steps: Option<u64>,
    pub restarts: u32,
    pub alpha: f64,
    pub init: InitMode,
    /// Also accept a satisfying rounding of the valuation walk's state (not
    /// part of the published walk).
    pub check_rounded: bool,
    /// Planted instances; otherwise uniform random ones, decided by brute
    /// force (so `n` is capped).
    pub planted: bool,
    /// Record wall-clock time. Off by default so the CSV is reproducible.
    pub timing: bool,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            algo: Algorithm::Valuation,
            n_grid: vec![10, 20, 30, 40],
            clause_ratio: 4.0,
            resolution: ResolutionRule::EqualN,
            seeds: 25,
            first_seed: 0,
            max_steps: None,
            restarts: 1,
            alpha: 0.1,
            init: InitMode::AllHalf,
            check_rounded: false,
            planted: true,
            timing: false,
            output: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, BenchError> {
        let spec: ExperimentSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self, BenchError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::InvalidSpec(msg));
        if self.n_grid.is_empty() {
            return bad("n grid is empty".into());
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 3) {
            return bad(format!("n = {n}: 3SAT needs at least 3 variables"));
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        if !(self.clause_ratio > 0.0 && self.clause_ratio.is_finite()) {
            return bad(format!("clause ratio must be positive, got {}", self.clause_ratio));
        }
        if !self.planted {
            if let Some(&n) = self.n_grid.iter().find(|&&n| n > BRUTE_FORCE_MAX_VARS) {
                return bad(format!("n = {n}: random instances are decided by brute force, n ≤ {BRUTE_FORCE_MAX_VARS}"));
            }
        }
        for &n in &self.n_grid {
            self.solver_config(n, 0).validate().map_err(|e| BenchError::InvalidSpec(format!("n = {n}: {e}")))?;
        }
        Ok(())
    }

    pub fn clauses_for(&self, n: usize) -> usize {
        (self.clause_ratio * n as f64).round() as usize
    }

    fn solver_config(&self, n: usize, seed: u64) -> SolverConfig {
        SolverConfig {
            resolution: self.resolution.resolve(n),
            max_steps: self.max_steps,
            restarts: self.restarts,
            alpha: self.alpha,
            seed,
            init_mode: self.init,
            check_rounded: self.check_rounded,
            ..Default::default()
        }
    }

    /// The `(n, seed)` cells in output order.
    pub fn cells(&self) -> Vec<(usize, u64)> {
        let mut grid = self.n_grid.clone();
        grid.sort_unstable();
        grid.dedup();
        grid.iter()
            .flat_map(|&n| (self.first_seed..self.first_seed + self.seeds).map(move |s| (n, s)))
            .collect()
    }
}

/// One solver run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub algo: Algorithm,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "M")]
    pub resolution: u32,
    pub seed: u64,
    pub solved: bool,
    pub steps: u64,
    pub restarts: u32,
    pub wall_ms: u64,
    pub pos_refl: u64,
    pub neg_refl: u64,
    pub final_hamming: Option<f64>,
    /// Whether the instance has a solution: known for planted instances,
    /// decided by brute force otherwise.
    #[serde(skip)]
    pub satisfiable: bool,
}

/// Instance and solver seeds of a cell; the instance does not depend on the
/// algorithm, so every algorithm sees the same formulas.
fn cell_seeds(n: usize, seed: u64) -> (u64, u64) {
    let base = derive_seed(seed, n as u64);
    (derive_seed(base, 0), derive_seed(base, 1))
}

fn run_cell(spec: &ExperimentSpec, n: usize, seed: u64) -> Result<CellResult, BenchError> {
    let m = spec.clauses_for(n);
    let (instance_seed, solver_seed) = cell_seeds(n, seed);
    let (formula, planted) = if spec.planted {
        let (f, p) = generate_planted_3sat(n, m, instance_seed)?;
        (f, Some(p))
    } else {
        (generate_random_3sat(n, m, instance_seed)?, None)
    };
    let satisfiable = planted.is_some() || brute_force_sat(&formula)?.is_some();
    let cfg = spec.solver_config(n, solver_seed);
    let start = Instant::now();
    let result = solve(spec.algo, &formula, &cfg, planted.as_ref())
        .map_err(|source| BenchError::Solver { n, seed, source })?;
    let wall_ms = if spec.timing { start.elapsed().as_millis() as u64 } else { 0 };
    Ok(CellResult {
        algo: spec.algo,
        n,
        m,
        resolution: cfg.resolution,
        seed,
        solved: result.outcome.is_sat(),
        steps: result.steps_used,
        restarts: result.restarts_used,
        wall_ms,
        pos_refl: result.reflections.positive_reflections,
        neg_refl: result.reflections.negative_reflections,
        final_hamming: result.final_hamming,
        satisfiable,
    })
}

/// Runs every cell, in parallel on the current rayon pool, and returns the
/// results ordered by `(n, seed)`. Writes the CSV to `spec.output` if set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<CellResult>, BenchError> {
    spec.validate()?;
    let results = spec
        .cells()
        .into_par_iter()
        .map(|(n, seed)| run_cell(spec, n, seed))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(path) = &spec.output {
        let file = std::fs::File::create(path)?;
        write_csv(&results, std::io::BufWriter::new(file))?;
    }
    Ok(results)
}

pub fn write_csv<W: Write>(results: &[CellResult], writer: W) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER.split(','))?;
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(results: &[CellResult]) -> Result<String, BenchError> {
    let mut buf = Vec::new();
    write_csv(results, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Per-size summary used by the fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeSummary {
    pub n: usize,
    pub cells: usize,
    pub solved: usize,
    /// Solved cells over satisfiable cells.
    pub solved_fraction: f64,
    /// Median steps among solved cells.
    pub median_steps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval of the slope.
    pub slope_ci: (f64, f64),
    pub sizes: Vec<SizeSummary>,
}

impl fmt::Display for ScalingFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n,cells,solved,solved_fraction,median_steps")?;
        for s in &self.sizes {
            let median = s.median_steps.map(|m| m.to_string()).unwrap_or_default();
            writeln!(f, "{},{},{},{},{}", s.n, s.cells, s.solved, s.solved_fraction, median)?;
        }
        writeln!(
            f,
            "slope {} (95% CI {} .. {}), intercept {}",
            self.slope, self.slope_ci.0, self.slope_ci.1, self.intercept
        )
    }
}

fn median(values: &mut [u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid] as f64
    } else {
        (values[mid - 1] as f64 + values[mid] as f64) / 2.0
    })
}

/// Solved fraction and median steps per size, in increasing `n`.
pub fn summarize_sizes(results: &[CellResult]) -> Vec<SizeSummary> {
    let mut by_n: BTreeMap<usize, Vec<&CellResult>> = BTreeMap::new();
    for r in results {
        by_n.entry(r.n).or_default().push(r);
    }
    by_n
        .iter()
        .map(|(&n, cells)| {
            let mut steps: Vec<u64> = cells.iter().filter(|c| c.solved).map(|c| c.steps).collect();
            let satisfiable = cells.iter().filter(|c| c.satisfiable).count();
            SizeSummary {
                n,
                cells: cells.len(),
                solved: steps.len(),
                solved_fraction: if satisfiable == 0 { 0.0 } else { steps.len() as f64 / satisfiable as f64 },
                median_steps: median(&mut steps),
            }
        })
        .collect()
}

/// Least-squares fit of `log(median steps)` against `log(n)` over the sizes
/// with at least one solved cell. A median of zero steps counts as one.
pub fn fit_scaling(results: &[CellResult]) -> Result<ScalingFit, BenchError> {
    let sizes = summarize_sizes(results);

    let points: Vec<(f64, f64)> = sizes
        .iter()
        .filter_map(|s| s.median_steps.map(|m| ((s.n as f64).ln(), m.max(1.0).ln())))
        .collect();
    if points.len() < 3 {
        return Err(BenchError::InsufficientData(format!(
            "need 3 sizes with a solved cell, have {}",
            points.len()
        )));
    }
    let k = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let dof = k - 2.0;
    let se = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom").inverse_cdf(0.975);
    Ok(ScalingFit { slope, intercept, slope_ci: (slope - t * se, slope + t * se), sizes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(steps: impl Fn(usize) -> u64) -> Vec<CellResult> {
        [10, 20, 40, 80]
            .iter()
            .flat_map(|&n| {
                (0..3).map(move |seed| (n, seed))
            })
            .map(|(n, seed)| CellResult {
                algo: Algorithm::Valuation,
                n,
                m: 4 * n,
                resolution: n as u32,
                seed,
                solved: true,
                steps: steps(n),
                restarts: 1,
                wall_ms: 0,
                pos_refl: 0,
                neg_refl: 0,
                final_hamming: None,
                satisfiable: true,
            })
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        let fit = fit_scaling(&synthetic(|n| (n * n) as u64)).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-9);
        assert!((fit.slope_ci.1 - fit.slope_ci.0).abs() < 1e-6);
        let fit = fit_scaling(&synthetic(|_| 17)).unwrap();
        assert!(fit.slope.abs() < 1e-9);
        assert!((fit.intercept - 17f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn too_few_sizes() {
        let results: Vec<_> = synthetic(|n| n as u64).into_iter().filter(|r| r.n <= 20).collect();
        assert!(matches!(fit_scaling(&results), Err(BenchError::InsufficientData(_))));
    }

    #[test]
    fn median_of_even_count() {
        assert_eq!(median(&mut [4, 1, 3, 2]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }

    #[test]
    fn spec_parsing() {
        let spec = ExperimentSpec::from_toml_str("algo = \"classic\"\nn_grid = [10]\nseeds = 1\nM = \"2n\"\n").unwrap();
        assert_eq!(spec.algo, Algorithm::Classic);
        assert_eq!(spec.resolution, ResolutionRule::TwiceN);
        assert_eq!(spec.clause_ratio, 4.0);
        let spec = ExperimentSpec::from_toml_str("M = 6").unwrap();
        assert_eq!(spec.resolution, ResolutionRule::Fixed(6));
        assert!(ExperimentSpec::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentSpec::from_toml_str("n_grid = []").is_err());
        assert!(ExperimentSpec::from_toml_str("seeds = 0").is_err());
        assert!(ExperimentSpec::from_toml_str("planted = false\nn_grid = [30]").is_err());
    }

    #[test]
    fn single_cell_and_deterministic_csv() {
        let spec = ExperimentSpec { algo: Algorithm::Classic, n_grid: vec![10], seeds: 1, restarts: 50, ..Default::default() };
        let results = run_experiment(&spec).unwrap();
        assert_eq!(results.len(), 1);
        let spec = ExperimentSpec { n_grid: vec![8, 6], seeds: 4, ..spec };
        let a = csv_string(&run_experiment(&spec).unwrap()).unwrap();
        let b = csv_string(&run_experiment(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(&format!("{CSV_HEADER}\n")));
        assert_eq!(a.lines().count(), 9);
        assert!(a.lines().nth(1).unwrap().starts_with("classic,6,24,"));
    }

    #[test]
    fn random_mode_decides_satisfiability() {
        let spec = ExperimentSpec {
            algo: Algorithm::Classic,
            n_grid: vec![8],
            clause_ratio: 6.0,
            seeds: 20,
            restarts: 20,
            planted: false,
            ..Default::default()
        };
        for r in run_experiment(&spec).unwrap() {
            assert!(!r.solved || r.satisfiable);
            assert_eq!((r.pos_refl, r.neg_refl, r.final_hamming), (0, 0, None));
        }
    }
}
