//! The four local-search solvers behind one interface.
//!
//! * [`schoening_classic`]: boolean random walk, flipping a random literal of
//!   a random unsatisfied clause, `3n` flips per try.
//! * [`valuation_walk`]: every variable walks on the grid `0..=M` with
//!   reflecting barriers; the step is taken in a clause of minimal valuation.
//! * [`hill_climb`]: coordinate ascent of the formula valuation over real
//!   valuations of a clustered formula, with random restarts.
//! * [`clustered_sparrow`]: make/break weighted flips on a clustered formula.
//!
//! [`solve`] runs any of them on a plain formula, clustering and projecting
//! back where needed. Every `Sat` outcome has been re-checked against the
//! input formula.

mod classic;
mod cubic;
mod hill_climb;
mod sparrow;
mod tracker;
mod walk;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{evaluate, Assignment, CnfFormula};
use crate::transform::{cluster_expression, TransformError};

pub use classic::schoening_classic;
pub use cubic::maximize_cubic_on_unit_interval;
pub use hill_climb::{hill_climb, HillClimbState, HILL_CLIMB_STALL_THRESHOLD, MONOTONICITY_SLACK};
pub use sparrow::{clustered_sparrow, flip_class_masses, flip_probabilities, make_break};
pub use walk::valuation_walk;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("solver produced an assignment that does not satisfy the formula")]
    Unsound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Every variable at level `M/2`; needs even `M`.
    AllHalf,
    /// Each level drawn uniformly from the even levels (the class of 0).
    UniformS0,
    /// Each variable uniformly at 0 or `M`.
    UniformBoolean,
}

impl FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "half" | "all-half" => Ok(InitMode::AllHalf),
            "s0" | "uniform-s0" => Ok(InitMode::UniformS0),
            "boolean" | "uniform-boolean" => Ok(InitMode::UniformBoolean),
            other => Err(format!("unknown init mode `{other}` (expected half, s0 or boolean)")),
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::AllHalf => "half",
            InitMode::UniformS0 => "s0",
            InitMode::UniformBoolean => "boolean",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Classic,
    Valuation,
    HillClimb,
    Sparrow,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::Classic, Algorithm::Valuation, Algorithm::HillClimb, Algorithm::Sparrow];

    /// Step budget per try when none is configured. `n` and `m` are the
    /// variable and clause counts of the formula the solver walks on (the
    /// clustered one for hill climbing and Sparrow).
    pub fn default_budget(self, n: usize, m: usize, resolution: u32) -> u64 {
        let (n, m, res) = (n as u64, m as u64, u64::from(resolution));
        let budget = match self {
            Algorithm::Classic => 3u64.saturating_mul(n),
            Algorithm::Valuation => 4u64.saturating_mul(n * n).saturating_mul(res * res),
            Algorithm::HillClimb => 4u64.saturating_mul(n * n),
            Algorithm::Sparrow => 2u64.saturating_mul(m * m),
        };
        budget.max(1)
    }

    pub fn works_on_clustered(self) -> bool {
        matches!(self, Algorithm::HillClimb | Algorithm::Sparrow)
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classic" => Ok(Algorithm::Classic),
            "valuation" => Ok(Algorithm::Valuation),
            "hillclimb" => Ok(Algorithm::HillClimb),
            "sparrow" => Ok(Algorithm::Sparrow),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Classic => "classic",
            Algorithm::Valuation => "valuation",
            Algorithm::HillClimb => "hillclimb",
            Algorithm::Sparrow => "sparrow",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Grid resolution `M` of the valuation walk.
    pub resolution: u32,
    /// Steps per try; `None` selects [`Algorithm::default_budget`].
    pub max_steps: Option<u64>,
    /// Number of tries (independent restarts). Hill climbing restarts on
    /// stalls within its budget instead.
    pub restarts: u32,
    /// Total probability given to negative flips by Sparrow.
    pub alpha: f64,
    pub seed: u64,
    pub init_mode: InitMode,
    /// Not part of the published walk: also accept when rounding every level
    /// to the nearer barrier (ties towards true) satisfies the formula.
    pub check_rounded: bool,
    pub record_trace: bool,
    /// Assert the per-step invariants (levels in range, Hamming moves of one
    /// step, hill-climb monotonicity); violations return an error.
    pub check_invariants: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            resolution: 4,
            max_steps: None,
            restarts: 1,
            alpha: 0.1,
            seed: 0,
            init_mode: InitMode::AllHalf,
            check_rounded: false,
            record_trace: false,
            check_invariants: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.resolution == 0 {
            return Err(SolverError::Config("M must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SolverError::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.max_steps == Some(0) {
            return Err(SolverError::Config("step budget must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(SolverError::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn budget(&self, algo: Algorithm, n: usize, m: usize) -> u64 {
        self.max_steps.unwrap_or_else(|| algo.default_budget(n, m, self.resolution))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Sat(Assignment),
    Exhausted,
}

impl Outcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, Outcome::Sat(_))
    }

    pub fn assignment(&self) -> Option<&Assignment> {
        match self {
            Outcome::Sat(a) => Some(a),
            Outcome::Exhausted => None,
        }
    }
}

/// Barrier events relative to a known solution.
///
/// A positive reflection pushes a variable off the barrier opposite to its
/// value in the solution (distance shrinks); a negative one pushes it off its
/// own barrier (distance grows). Steps between barriers are interior steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReflectionStats {
    pub positive_reflections: u64,
    pub negative_reflections: u64,
    pub interior_steps: u64,
}

impl ReflectionStats {
    pub fn total(&self) -> u64 {
        self.positive_reflections + self.negative_reflections + self.interior_steps
    }

    fn record(&mut self, level: u32, resolution: u32, target: u32) {
        if level != 0 && level != resolution {
            self.interior_steps += 1;
        } else if level == target {
            self.negative_reflections += 1;
        } else {
            self.positive_reflections += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub clause: Option<usize>,
    pub var: u32,
    /// +1 when the variable moved towards true, −1 towards false.
    pub direction: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub outcome: Outcome,
    /// Steps over all tries.
    pub steps_used: u64,
    /// Tries started (hill climbing: stall restarts plus the first start).
    pub restarts_used: u32,
    pub reflections: ReflectionStats,
    pub trace: Option<Vec<TraceStep>>,
    /// Hamming distance from the final state to the planted solution, in the
    /// solver's own variables, when a solution was supplied.
    pub final_hamming: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FlipKind {
    Negative,
    Null,
    Positive,
}

/// A flip and its `make − break` score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipClass {
    pub delta: i32,
    pub kind: FlipKind,
}

impl FlipClass {
    pub fn from_delta(delta: i32) -> Self {
        let kind = match delta.signum() {
            1 => FlipKind::Positive,
            0 => FlipKind::Null,
            _ => FlipKind::Negative,
        };
        FlipClass { delta, kind }
    }
}

/// Re-checks a candidate solution; a failure is a solver bug.
pub(crate) fn verified(formula: &CnfFormula, a: Assignment) -> Result<Outcome, SolverError> {
    match evaluate(formula, &a) {
        Ok(e) if e.satisfied => Ok(Outcome::Sat(a)),
        _ => Err(SolverError::Unsound),
    }
}

/// Runs `algo` on `formula`. `planted`, if given, labels reflections and
/// measures the final distance; it never steers the search.
pub fn solve(
    algo: Algorithm,
    formula: &CnfFormula,
    cfg: &SolverConfig,
    planted: Option<&Assignment>,
) -> Result<SolverResult, SolverError> {
    cfg.validate()?;
    if let Some(p) = planted {
        if p.len() != formula.num_vars() {
            return Err(SolverError::Config("planted assignment length mismatch".into()));
        }
    }
    let mut result = match algo {
        Algorithm::Classic => schoening_classic(formula, cfg, planted)?,
        Algorithm::Valuation => valuation_walk(formula, cfg, planted)?,
        Algorithm::HillClimb => hill_climb::<f64>(&cluster_expression(formula)?, cfg)?,
        Algorithm::Sparrow => {
            let cf = cluster_expression(formula)?;
            let lifted = planted.map(|p| crate::transform::lift_assignment(&cf, p)).transpose()?;
            clustered_sparrow(&cf, cfg, lifted.as_ref())?
        }
    };
    if let Outcome::Sat(a) = result.outcome {
        result.outcome = verified(formula, a)?;
    }
    Ok(result)
}
