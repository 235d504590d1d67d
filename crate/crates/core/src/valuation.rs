//! Truth valuations on the grid `{0, 1/M, …, 1}` and the product-form
//! connectives used to value clauses and formulas.
//!
//! A variable's valuation is stored as an integer level `k` in `0..=M`; the
//! valuation itself is `k / M`. Clause and formula valuations are computed in
//! any [`Scalar`], so exact rationals give exact answers.

use thiserror::Error;

use crate::cnf::{Assignment, Clause, CnfFormula, Literal};
use crate::scalar::Scalar;

/// Tolerance for comparing clause valuations when exact integer comparison
/// is not available.
pub const VALUATION_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValuationError {
    #[error("grid resolution must be at least 1")]
    ZeroResolution,
    #[error("level {level} exceeds resolution {resolution}")]
    LevelOutOfRange { level: u32, resolution: u32 },
    #[error("variable {var} out of range for {len} valuations")]
    VariableOutOfRange { var: u32, len: usize },
    #[error("resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(u32, u32),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValuationVector {
    resolution: u32,
    levels: Vec<u32>,
}

impl ValuationVector {
    pub fn new(resolution: u32, levels: Vec<u32>) -> Result<Self, ValuationError> {
        if resolution == 0 {
            return Err(ValuationError::ZeroResolution);
        }
        if let Some(&level) = levels.iter().find(|&&k| k > resolution) {
            return Err(ValuationError::LevelOutOfRange { level, resolution });
        }
        Ok(ValuationVector { resolution, levels })
    }

    /// Every variable at the same level.
    pub fn constant(resolution: u32, num_vars: usize, level: u32) -> Result<Self, ValuationError> {
        Self::new(resolution, vec![level; num_vars])
    }

    /// The boolean assignment embedded at the barriers.
    pub fn from_assignment(resolution: u32, a: &Assignment) -> Result<Self, ValuationError> {
        let levels = a.values().iter().map(|&b| if b { resolution } else { 0 }).collect();
        Self::new(resolution, levels)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Level of 1-based variable `var`.
    pub fn level(&self, var: u32) -> u32 {
        self.levels[var as usize - 1]
    }

    pub fn set_level(&mut self, var: u32, level: u32) -> Result<(), ValuationError> {
        if level > self.resolution {
            return Err(ValuationError::LevelOutOfRange { level, resolution: self.resolution });
        }
        self.levels[var as usize - 1] = level;
        Ok(())
    }

    pub fn is_interior(&self, var: u32) -> bool {
        let k = self.level(var);
        k != 0 && k != self.resolution
    }

    /// Valuation `k / M` of 1-based variable `var`.
    pub fn value<T: Scalar>(&self, var: u32) -> T {
        T::from_ratio(i64::from(self.level(var)), i64::from(self.resolution))
    }

    /// All valuations as scalars, indexed by zero-based variable.
    pub fn to_values<T: Scalar>(&self) -> Vec<T> {
        let m = i64::from(self.resolution);
        self.levels.iter().map(|&k| T::from_ratio(i64::from(k), m)).collect()
    }

    fn check_var(&self, lit: Literal) -> Result<(), ValuationError> {
        if lit.index() >= self.levels.len() {
            return Err(ValuationError::VariableOutOfRange { var: lit.var(), len: self.levels.len() });
        }
        Ok(())
    }

    fn check_formula(&self, formula: &CnfFormula) -> Result<(), ValuationError> {
        if formula.num_vars() != self.levels.len() {
            return Err(ValuationError::LengthMismatch(formula.num_vars(), self.levels.len()));
        }
        Ok(())
    }
}

/// `v(x) = k/M`, `v(¬x) = 1 − k/M`.
pub fn literal_valuation<T: Scalar>(lit: Literal, vv: &ValuationVector) -> Result<T, ValuationError> {
    vv.check_var(lit)?;
    let v: T = vv.value(lit.var());
    Ok(if lit.is_negated() { T::one() - v } else { v })
}

/// Valuation of a literal whose variable has value `value`.
#[inline]
pub fn literal_value<T: Scalar>(lit: Literal, value: T) -> T {
    if lit.is_negated() {
        T::one() - value
    } else {
        value
    }
}

/// Clause valuation over arbitrary per-variable values in `[0, 1]`.
///
/// Computed as `1 − ∏ (1 − v(ℓ))`, which equals the pairwise rule
/// `v(x ∨ y) = v(x) + v(y) − v(x)·v(y)` applied left to right. The empty clause
/// has valuation 0.
pub fn clause_value<T: Scalar>(clause: &Clause, values: &[T]) -> T {
    let complement = clause
        .literals()
        .iter()
        .fold(T::one(), |acc, &lit| acc * (T::one() - literal_value(lit, values[lit.index()].clone())));
    T::one() - complement
}

pub fn clause_valuation<T: Scalar>(clause: &Clause, vv: &ValuationVector) -> Result<T, ValuationError> {
    let mut complement = T::one();
    for &lit in clause.literals() {
        complement = complement * (T::one() - literal_valuation::<T>(lit, vv)?);
    }
    Ok(T::one() - complement)
}

/// Product of clause valuations over arbitrary per-variable values.
pub fn expression_value<T: Scalar>(formula: &CnfFormula, values: &[T]) -> T {
    formula
        .clauses()
        .iter()
        .fold(T::one(), |acc, c| acc * clause_value(c, values))
}

pub fn expression_valuation<T: Scalar>(
    formula: &CnfFormula,
    vv: &ValuationVector,
) -> Result<T, ValuationError> {
    vv.check_formula(formula)?;
    Ok(expression_value(formula, &vv.to_values::<T>()))
}

/// `Σ |k1 − k2| / M`.
pub fn hamming_distance<T: Scalar>(a: &ValuationVector, b: &ValuationVector) -> Result<T, ValuationError> {
    let steps = normalized_hamming_distance(a, b)?;
    Ok(T::from_ratio(steps as i64, i64::from(a.resolution)))
}

/// Hamming distance measured in grid steps, `Σ |k1 − k2|`.
pub fn normalized_hamming_distance(a: &ValuationVector, b: &ValuationVector) -> Result<u64, ValuationError> {
    if a.resolution != b.resolution {
        return Err(ValuationError::ResolutionMismatch(a.resolution, b.resolution));
    }
    if a.len() != b.len() {
        return Err(ValuationError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.levels
        .iter()
        .zip(&b.levels)
        .map(|(&x, &y)| u64::from(x.abs_diff(y)))
        .sum())
}

/// The boolean assignment, if every level sits on a barrier.
pub fn as_boolean_assignment(vv: &ValuationVector) -> Option<Assignment> {
    let m = vv.resolution;
    vv.levels
        .iter()
        .map(|&k| match k {
            0 => Some(false),
            k if k == m => Some(true),
            _ => None,
        })
        .collect::<Option<Vec<bool>>>()
        .map(Assignment::new)
}

/// Per-clause "deficits" `1 − v(C)`, kept in a form that ranks clauses by
/// valuation without rounding error.
///
/// When `M^w` fits in a `u64` (`w` the longest clause) each deficit is stored
/// as the integer `∏ (M − t_j) · M^(w − len)` over the common denominator
/// `M^w`, where `t_j` is the level at which literal `j` is true. Otherwise
/// deficits are `f64` and ties are resolved with [`VALUATION_TIE_TOLERANCE`].
#[derive(Debug, Clone)]
pub enum ClauseDeficits {
    /// `scale[c]` is `M^(w − len(c))`; `worst` is the largest deficit and
    /// `at_worst` the number of clauses attaining it.
    Exact { resolution: u64, scale: Vec<u64>, values: Vec<u64>, worst: u64, at_worst: usize },
    Approx { resolution: f64, values: Vec<f64> },
}

impl ClauseDeficits {
    pub fn new(formula: &CnfFormula, vv: &ValuationVector) -> Self {
        let width = formula.max_clause_len() as u32;
        let m = u64::from(vv.resolution());
        let mut deficits = match m.checked_pow(width) {
            Some(_) => ClauseDeficits::Exact {
                resolution: m,
                scale: formula.clauses().iter().map(|c| m.pow(width - c.len() as u32)).collect(),
                values: vec![0; formula.num_clauses()],
                worst: 0,
                at_worst: formula.num_clauses(),
            },
            None => ClauseDeficits::Approx {
                resolution: f64::from(vv.resolution()),
                values: vec![0.0; formula.num_clauses()],
            },
        };
        for (ci, clause) in formula.clauses().iter().enumerate() {
            deficits.update(ci, clause, vv.levels());
        }
        deficits
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ClauseDeficits::Exact { .. })
    }

    /// Recomputes the deficit of clause `ci` from zero-based `levels`.
    pub fn update(&mut self, ci: usize, clause: &Clause, levels: &[u32]) {
        match self {
            ClauseDeficits::Exact { resolution, scale, values, worst, at_worst } => {
                let m = *resolution;
                let mut prod = scale[ci];
                for &lit in clause.literals() {
                    let k = u64::from(levels[lit.index()]);
                    let falseness = if lit.is_negated() { k } else { m - k };
                    prod *= falseness;
                }
                let old = std::mem::replace(&mut values[ci], prod);
                if prod > *worst {
                    *worst = prod;
                    *at_worst = 1;
                } else if prod == *worst {
                    if old != prod {
                        *at_worst += 1;
                    }
                } else if old == *worst {
                    *at_worst -= 1;
                    if *at_worst == 0 {
                        *worst = values.iter().copied().max().unwrap_or(0);
                        *at_worst = values.iter().filter(|&&d| d == *worst).count();
                    }
                }
            }
            ClauseDeficits::Approx { resolution, values } => {
                let m = *resolution;
                values[ci] = clause.literals().iter().fold(1.0, |acc, &lit| {
                    let k = f64::from(levels[lit.index()]);
                    acc * if lit.is_negated() { k / m } else { 1.0 - k / m }
                });
            }
        }
    }

    /// True when every clause has valuation 1.
    pub fn all_satisfied(&self) -> bool {
        match self {
            ClauseDeficits::Exact { worst, .. } => *worst == 0,
            ClauseDeficits::Approx { values, .. } => values.iter().all(|&d| d == 0.0),
        }
    }

    /// Fills `out` with the indices of all clauses of minimal valuation.
    pub fn minimal_clauses(&self, out: &mut Vec<usize>) {
        out.clear();
        match self {
            ClauseDeficits::Exact { values, worst, .. } => {
                out.extend(values.iter().enumerate().filter(|(_, &d)| d == *worst).map(|(i, _)| i));
            }
            ClauseDeficits::Approx { values, .. } => {
                let worst = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                out.extend(
                    values
                        .iter()
                        .enumerate()
                        .filter(|(_, &d)| worst - d <= VALUATION_TIE_TOLERANCE)
                        .map(|(i, _)| i),
                );
            }
        }
    }

    /// Number of clauses of minimal valuation.
    pub fn minimal_count(&self) -> usize {
        match self {
            ClauseDeficits::Exact { at_worst, .. } => *at_worst,
            ClauseDeficits::Approx { .. } => {
                let mut out = Vec::new();
                self.minimal_clauses(&mut out);
                out.len()
            }
        }
    }

    /// The `r`-th clause (in index order) of minimal valuation; the same as
    /// `minimal_clauses(..)[r]` without building the list.
    pub fn nth_minimal(&self, r: usize) -> usize {
        match self {
            ClauseDeficits::Exact { values, worst, .. } => values
                .iter()
                .enumerate()
                .filter(|(_, &d)| d == *worst)
                .nth(r)
                .map(|(i, _)| i)
                .expect("r below minimal_count"),
            ClauseDeficits::Approx { .. } => {
                let mut out = Vec::new();
                self.minimal_clauses(&mut out);
                out[r]
            }
        }
    }
}

/// Indices of the clauses with minimal valuation under `vv`.
pub fn minimal_clauses(formula: &CnfFormula, vv: &ValuationVector) -> Result<Vec<usize>, ValuationError> {
    vv.check_formula(formula)?;
    let mut out = Vec::new();
    ClauseDeficits::new(formula, vv).minimal_clauses(&mut out);
    Ok(out)
}
