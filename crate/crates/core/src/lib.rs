//! Truth-valuation random walks for 3SAT.
//!
//! Boolean assignments are generalized to valuations on the grid
//! `{0, 1/M, …, 1}`; a clause is valued like an independent OR and a formula
//! by the product of its clauses. The crate provides:
//!
//! * [`cnf`]: formulas, DIMACS input and output, evaluation, generators.
//! * [`valuation`]: valuation vectors, clause and formula valuations.
//! * [`transform`]: clustering into a formula where every variable occurs in
//!   at most three clauses.
//! * [`solvers`]: Schöning's walk, the valuation walk, coordinate ascent and
//!   a Sparrow-style walk.
//! * [`markov`]: the reflecting walk on `0..=M`, its stationary
//!   distribution, period, matrix powers and first-passage estimates.
//! * [`bench`]: scaling experiments with CSV output.
//!
//! Numeric code is generic over [`Scalar`]; `f64`, `f32`, [`Rational`] and
//! [`BigRational`] implement it.

pub mod bench;
pub mod cnf;
pub mod markov;
pub mod rng;
pub mod scalar;
pub mod solvers;
pub mod transform;
pub mod valuation;

/// Exact rationals with machine-word parts; enough for small `M`.
pub type Rational = num_rational::Ratio<i64>;
/// Exact rationals without overflow, for high matrix powers.
pub type BigRational = num_rational::BigRational;

pub type TransitionMatrix64 = markov::TransitionMatrix<f64>;
pub type ExactTransitionMatrix = markov::TransitionMatrix<BigRational>;
pub type StationaryDistribution64 = markov::StationaryDistribution<f64>;
pub type DenseMatrix64 = markov::DenseMatrix<f64>;

pub use bench::{fit_scaling, run_experiment, CellResult, ExperimentSpec, ScalingFit};
pub use cnf::{parse_dimacs, Assignment, Clause, CnfError, CnfFormula, Literal};
pub use markov::{reflecting_walk_matrix, stationary_distribution, MarkovError, TransitionMatrix};
pub use scalar::Scalar;
pub use solvers::{solve, Algorithm, InitMode, Outcome, SolverConfig, SolverError, SolverResult};
pub use transform::{cluster_expression, ClusteredFormula};
pub use valuation::ValuationVector;
