//! Markov-chain checks for the per-variable reflecting walk.
//!
//! The walk on levels `0..=M` moves ±1 with probability ½ from interior
//! levels and is pushed back deterministically from the barriers `0` and `M`.
//! This module builds its transition matrix, solves for the stationary
//! distribution, computes the period and cyclic classes, raises matrices to
//! powers, and compares long-run transition probabilities against `d·π`.
//! It also has the closed-form powers for `M = 4` and a Monte Carlo estimate
//! of first-passage probabilities for the unbounded symmetric walk.
//!
//! Matrix code is generic over [`Scalar`]: use `f64` for speed and
//! [`crate::Rational`] or [`crate::BigRational`] for exact answers.

use std::collections::VecDeque;
use std::fmt;

use rand::RngCore;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::Scalar;

/// Row sums of a float transition matrix must be within this of 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Default exponent for long-run limit checks.
pub const DEFAULT_LIMIT_EXPONENT: u64 = 10_000;

/// Largest `k` accepted by [`a3_closed_form`]; keeps `2^(k+1)` in an `i64`.
pub const A3_MAX_K: u32 = 61;

/// Monte Carlo work is split into this many independently seeded partitions,
/// regardless of how many threads run them.
pub const FIRST_PASSAGE_PARTITIONS: u64 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkovError {
    #[error("resolution M must be at least 1")]
    ZeroResolution,
    #[error("matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("row {row} is not a probability vector (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("chain is not irreducible")]
    Reducible,
    #[error("linear system is singular")]
    Singular,
    #[error("state {state} out of range for {states} states")]
    StateOutOfRange { state: usize, states: usize },
    #[error("exponent {exponent} does not have {parity} parity")]
    ParityMismatch { exponent: u64, parity: Parity },
    #[error("closed form defined for 1 <= k <= {A3_MAX_K}, got {0}")]
    InvalidIndex(u32),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: u64) -> Self {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// Dense square matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, MarkovError> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(MarkovError::NotSquare { rows: dim, row, len: r.len() });
            }
            data.extend(r);
        }
        Ok(DenseMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.dim + j] = value;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.dim.max(1)).take(self.dim)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &other.data[k * n + j];
                    if !b.is_zero() {
                        let cell = &mut out.data[i * n + j];
                        *cell = cell.clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, mut k: u64) -> Self {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Largest entrywise absolute difference, in `f64`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> DenseMatrix<f64> {
        DenseMatrix { dim: self.dim, data: self.data.iter().map(Scalar::to_f64).collect() }
    }
}

/// A row-stochastic matrix on the states `0/M, 1/M, …, M/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T> {
    resolution: u32,
    matrix: DenseMatrix<T>,
}

impl<T: Scalar> TransitionMatrix<T> {
    /// Validates that `matrix` is `(M+1)×(M+1)`, nonnegative, and row
    /// stochastic (exactly for exact scalars, within
    /// [`ROW_SUM_TOLERANCE`] otherwise).
    pub fn new(resolution: u32, matrix: DenseMatrix<T>) -> Result<Self, MarkovError> {
        if resolution == 0 {
            return Err(MarkovError::ZeroResolution);
        }
        let states = resolution as usize + 1;
        if matrix.dim() != states {
            return Err(MarkovError::NotSquare { rows: states, row: 0, len: matrix.dim() });
        }
        for (i, row) in matrix.rows().enumerate() {
            let sum = row.iter().fold(T::zero(), |acc, x| acc + x.clone());
            let ok = if T::EXACT { sum == T::one() } else { (sum.to_f64() - 1.0).abs() <= ROW_SUM_TOLERANCE };
            if !ok || row.iter().any(|x| *x < T::zero()) {
                return Err(MarkovError::NotStochastic { row: i, sum: sum.to_f64() });
            }
        }
        Ok(TransitionMatrix { resolution, matrix })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn states(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        self.matrix.get(i, j)
    }

    /// Successors with positive probability.
    fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.matrix.row(i).iter().enumerate().filter(|(_, p)| **p > T::zero()).map(|(j, _)| j)
    }

    /// True for the exact reflecting-walk structure: zero diagonal, ½ to each
    /// neighbour from interior levels, 1 from the barriers.
    pub fn is_reflecting_walk(&self) -> bool {
        *self == reflecting_walk_matrix(self.resolution).expect("resolution >= 1")
            || (!T::EXACT
                && self.matrix.max_abs_diff(reflecting_walk_matrix::<T>(self.resolution).unwrap().matrix())
                    <= ROW_SUM_TOLERANCE)
    }
}

/// Transition matrix of the reflecting walk on `0..=M`.
pub fn reflecting_walk_matrix<T: Scalar>(resolution: u32) -> Result<TransitionMatrix<T>, MarkovError> {
    if resolution == 0 {
        return Err(MarkovError::ZeroResolution);
    }
    let m = resolution as usize;
    let mut a = DenseMatrix::zeros(m + 1);
    a.set(0, 1, T::one());
    a.set(m, m - 1, T::one());
    let half = T::from_ratio(1, 2);
    for i in 1..m {
        a.set(i, i - 1, half.clone());
        a.set(i, i + 1, half.clone());
    }
    Ok(TransitionMatrix { resolution, matrix: a })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution<T> {
    pub pi: Vec<T>,
}

impl<T: Scalar> StationaryDistribution<T> {
    /// `max_j |(π·A)_j − π_j|`.
    pub fn residual(&self, a: &TransitionMatrix<T>) -> f64 {
        let n = a.states();
        (0..n)
            .map(|j| {
                let pa = (0..n).fold(T::zero(), |acc, i| acc + self.pi[i].clone() * a.get(i, j).clone());
                (pa - self.pi[j].clone()).abs().to_f64()
            })
            .fold(0.0, f64::max)
    }

    pub fn total(&self) -> T {
        self.pi.iter().fold(T::zero(), |acc, x| acc + x.clone())
    }
}

fn check_irreducible<T: Scalar>(a: &TransitionMatrix<T>) -> Result<(), MarkovError> {
    let n = a.states();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let edge = if forward { a.get(u, v) } else { a.get(v, u) };
                if !seen[v] && *edge > T::zero() {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    if reach(true) && reach(false) {
        Ok(())
    } else {
        Err(MarkovError::Reducible)
    }
}

/// Solves `π·A = π`, `Σπ = 1` directly.
///
/// The reflecting walk is periodic, so power iteration would oscillate; the
/// system `(Aᵀ − I)πᵀ = 0` with its last equation replaced by the
/// normalization is solved by Gaussian elimination with partial pivoting.
pub fn stationary_distribution<T: Scalar>(a: &TransitionMatrix<T>) -> Result<StationaryDistribution<T>, MarkovError> {
    check_irreducible(a)?;
    let n = a.states();
    // augmented system, n × (n + 1)
    let mut sys: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut row: Vec<T> = (0..n)
                .map(|j| {
                    let v = a.get(j, i).clone();
                    if i == j {
                        v - T::one()
                    } else {
                        v
                    }
                })
                .collect();
            row.push(T::zero());
            row
        })
        .collect();
    sys[n - 1] = vec![T::one(); n + 1];

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| {
                sys[x][col].abs().partial_cmp(&sys[y][col].abs()).unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty range");
        let p = sys[pivot][col].clone();
        if p.is_zero() || (!T::EXACT && p.abs().to_f64() < 1e-14) {
            return Err(MarkovError::Singular);
        }
        sys.swap(col, pivot);
        for r in 0..n {
            if r == col || sys[r][col].is_zero() {
                continue;
            }
            let factor = sys[r][col].clone() / sys[col][col].clone();
            for c in col..=n {
                let delta = factor.clone() * sys[col][c].clone();
                sys[r][c] = sys[r][c].clone() - delta;
            }
        }
    }
    let pi = (0..n).map(|i| sys[i][n].clone() / sys[i][i].clone()).collect();
    Ok(StationaryDistribution { pi })
}

/// Stationary distribution of the reflecting walk in closed form: `1/(2M)` at
/// the barriers and `1/M` at interior levels.
pub fn reflecting_stationary_closed_form<T: Scalar>(resolution: u32) -> Vec<T> {
    let m = i64::from(resolution);
    (0..=m)
        .map(|i| if i == 0 || i == m { T::from_ratio(1, 2 * m) } else { T::from_ratio(1, m) })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicDecomposition {
    pub period: usize,
    /// `classes[r]` holds the states reached from state 0 only at times
    /// `≡ r (mod period)`, in increasing order.
    pub classes: Vec<Vec<usize>>,
}

impl CyclicDecomposition {
    pub fn class_of(&self, state: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&state))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period and cyclic classes of an irreducible chain.
///
/// With `dist` the BFS distance from state 0, every edge `u → v` closes a
/// cycle through 0 of length `≡ dist(u) + 1 − dist(v)`; the period is the gcd
/// of these, and `S_r = {y : dist(y) ≡ r (mod d)}`.
pub fn period_and_classes<T: Scalar>(a: &TransitionMatrix<T>) -> Result<CyclicDecomposition, MarkovError> {
    check_irreducible(a)?;
    let n = a.states();
    let mut dist = vec![usize::MAX; n];
    dist[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in a.successors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut period = 0;
    for u in 0..n {
        for v in a.successors(u) {
            period = gcd(period, (dist[u] + 1).abs_diff(dist[v]));
        }
    }
    let mut classes = vec![Vec::new(); period];
    for (state, &d) in dist.iter().enumerate() {
        classes[d % period].push(state);
    }
    Ok(CyclicDecomposition { period, classes })
}

/// Cyclic classes of the reflecting walk in closed form: even levels form
/// `S_0`, odd levels `S_1`, for both parities of `M`.
pub fn reflecting_classes_closed_form(resolution: u32) -> CyclicDecomposition {
    let m = resolution as usize;
    CyclicDecomposition {
        period: 2,
        classes: vec![(0..=m).step_by(2).collect(), (1..=m).step_by(2).collect()],
    }
}

pub fn matrix_power<T: Scalar>(a: &TransitionMatrix<T>, k: u64) -> DenseMatrix<T> {
    a.matrix.pow(k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub from_state: usize,
    pub exponent: u64,
    /// Row `from_state` of `A^exponent`.
    pub row: Vec<f64>,
    /// `d·π(y)` on the class reached at this exponent, 0 elsewhere.
    pub expected: Vec<f64>,
}

impl ConvergenceReport {
    pub fn max_error(&self) -> f64 {
        self.row.iter().zip(&self.expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Compares row `from_state` of `A^m_large` with the periodic-chain limit
/// `p_{md+r}(x, y) → d·π(y)` for `y ∈ S_r`, classes taken relative to `x`.
pub fn convergence_limits<T: Scalar>(
    a: &TransitionMatrix<T>,
    from_state: usize,
    parity: Parity,
    m_large: u64,
) -> Result<ConvergenceReport, MarkovError> {
    let states = a.states();
    if from_state >= states {
        return Err(MarkovError::StateOutOfRange { state: from_state, states });
    }
    if Parity::of(m_large) != parity {
        return Err(MarkovError::ParityMismatch { exponent: m_large, parity });
    }
    let cyc = period_and_classes(a)?;
    let pi = stationary_distribution(a)?;
    let d = cyc.period;
    let start_class = cyc.class_of(from_state).expect("classes partition the states");
    let target = (start_class + (m_large % d as u64) as usize) % d;
    let expected = (0..states)
        .map(|y| if cyc.classes[target].contains(&y) { d as f64 * pi.pi[y].to_f64() } else { 0.0 })
        .collect();
    let power = matrix_power(a, m_large);
    let row = power.row(from_state).iter().map(Scalar::to_f64).collect();
    Ok(ConvergenceReport { from_state, exponent: m_large, row, expected })
}

/// Closed forms for the powers of the `M = 4` reflecting walk matrix.
///
/// With `a = 2^(k−1)`, `b = 2^k`: the odd power `A^(2k−1)` has rows
/// `(0, (a+1)/b, 0, (a−1)/b, 0)`, `((a+1)/2b, 0, ½, 0, (a−1)/2b)`,
/// `(0, ½, 0, ½, 0)` and their mirror images; the even power `A^(2k)` has
/// rows `((a+1)/2b, 0, ½, 0, (a−1)/2b)`, `(0, (b+1)/2b, 0, (b−1)/2b, 0)`,
/// `(¼, 0, ½, 0, ¼)` and mirrors.
pub fn a3_closed_form<T: Scalar>(k: u32, parity: Parity) -> Result<DenseMatrix<T>, MarkovError> {
    if !(1..=A3_MAX_K).contains(&k) {
        return Err(MarkovError::InvalidIndex(k));
    }
    let a = 1i64 << (k - 1);
    let b = 1i64 << k;
    let r = |num: i64, den: i64| T::from_ratio(num, den);
    let z = || T::zero();
    let rows = match parity {
        Parity::Odd => vec![
            vec![z(), r(a + 1, b), z(), r(a - 1, b), z()],
            vec![r(a + 1, 2 * b), z(), r(1, 2), z(), r(a - 1, 2 * b)],
            vec![z(), r(1, 2), z(), r(1, 2), z()],
            vec![r(a - 1, 2 * b), z(), r(1, 2), z(), r(a + 1, 2 * b)],
            vec![z(), r(a - 1, b), z(), r(a + 1, b), z()],
        ],
        Parity::Even => vec![
            vec![r(a + 1, 2 * b), z(), r(1, 2), z(), r(a - 1, 2 * b)],
            vec![z(), r(b + 1, 2 * b), z(), r(b - 1, 2 * b), z()],
            vec![r(1, 4), z(), r(1, 2), z(), r(1, 4)],
            vec![z(), r(b - 1, 2 * b), z(), r(b + 1, 2 * b), z()],
            vec![r(a - 1, 2 * b), z(), r(1, 2), z(), r(a + 1, 2 * b)],
        ],
    };
    DenseMatrix::from_rows(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPassageEstimate {
    pub hits: u64,
    pub trials: u64,
    /// The step budget `⌊t·r²⌋`.
    pub max_steps: u64,
}

impl FirstPassageEstimate {
    pub fn probability(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }

    /// Binomial standard error of [`Self::probability`].
    pub fn std_error(&self) -> f64 {
        let p = self.probability();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// One ±1 walk from 0: does it reach `+r` within `max_steps` steps?
///
/// Steps are drawn 64 at a time from one random word. While the walk is more
/// than 64 below `r` a whole word is applied at once through its popcount.
fn walk_hits(r: i64, max_steps: u64, rng: &mut impl RngCore) -> bool {
    let mut pos = 0i64;
    let mut steps = 0u64;
    while steps < max_steps {
        let word = rng.next_u64();
        let remaining = max_steps - steps;
        if pos + 64 < r && remaining >= 64 {
            pos += 2 * i64::from(word.count_ones()) - 64;
            steps += 64;
            continue;
        }
        let take = remaining.min(64);
        for bit in 0..take {
            pos += if word >> bit & 1 == 1 { 1 } else { -1 };
            if pos >= r {
                return true;
            }
        }
        steps += take;
    }
    false
}

/// Monte Carlo probability that a symmetric ±1 walk started at 0 first passes
/// through `r` within `t·r²` steps.
///
/// Trials are split over [`FIRST_PASSAGE_PARTITIONS`] partitions with seeds
/// derived from `seed`, so the estimate does not depend on thread count.
pub fn first_passage_estimate(r: u64, t: f64, trials: u64, seed: u64) -> Result<FirstPassageEstimate, MarkovError> {
    if r == 0 || trials == 0 {
        return Err(MarkovError::InvalidArgument("r and trials must be at least 1".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(MarkovError::InvalidArgument(format!("time ratio must be positive, got {t}")));
    }
    let max_steps = (t * (r as f64) * (r as f64)).floor() as u64;
    let parts = FIRST_PASSAGE_PARTITIONS.min(trials);
    let hits: u64 = (0..parts)
        .into_par_iter()
        .map(|p| {
            let n = trials / parts + u64::from(p < trials % parts);
            let mut rng = rng_from_seed(derive_seed(seed, p));
            (0..n).filter(|_| walk_hits(r as i64, max_steps, &mut rng)).count() as u64
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(FirstPassageEstimate { hits, trials, max_steps })
}

/// Standard normal CDF, `Φ(x) = erfc(−x/√2)/2`.
///
/// `erfc` comes from `libm` (the fdlibm algorithm), accurate to about one
/// ulp.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Large-`r` limit of the first-passage probability: `2(1 − Φ(1/√t))`.
pub fn normal_first_passage_limit(t: f64) -> Result<f64, MarkovError> {
    if t <= 0.0 || t.is_nan() {
        return Err(MarkovError::InvalidArgument(format!("time ratio must be positive, got {t}")));
    }
    // 2(1 − Φ(z)) = erfc(z/√2), without cancellation
    Ok(libm::erfc(1.0 / (2.0 * t).sqrt()))
}
