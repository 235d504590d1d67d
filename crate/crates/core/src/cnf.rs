//! CNF formulas: the data model, DIMACS input/output, boolean evaluation and
//! random instance generation.
//!
//! Variables are 1-based everywhere in the public API, matching DIMACS.
//! Internal arrays are indexed by `var - 1`.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::rng::{rng_from_seed, SeededRng};

/// Largest variable count [`brute_force_sat`] will enumerate.
pub const BRUTE_FORCE_MAX_VARS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CnfError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("literal {literal} out of range for {num_vars} variables")]
    LiteralOutOfRange { literal: i64, num_vars: usize },
    #[error("duplicate literal {0} in clause")]
    DuplicateLiteral(i64),
    #[error("assignment has {got} values, formula has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("brute force limited to {BRUTE_FORCE_MAX_VARS} variables, formula has {0}")]
    TooManyVariables(usize),
    #[error("random 3SAT needs at least 3 variables, got {0}")]
    TooFewVariables(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    var: u32,
    negated: bool,
}

impl Literal {
    /// Panics if `var` is zero.
    pub fn new(var: u32, negated: bool) -> Self {
        assert!(var >= 1, "variables are 1-based");
        Literal { var, negated }
    }

    pub fn positive(var: u32) -> Self {
        Self::new(var, false)
    }

    pub fn negative(var: u32) -> Self {
        Self::new(var, true)
    }

    /// `k` maps to `x_k`, `-k` to `¬x_k`; zero has no literal.
    pub fn from_dimacs(code: i64) -> Option<Self> {
        if code == 0 || code.unsigned_abs() > u64::from(u32::MAX) {
            return None;
        }
        Some(Literal::new(code.unsigned_abs() as u32, code < 0))
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -i64::from(self.var)
        } else {
            i64::from(self.var)
        }
    }

    pub fn var(self) -> u32 {
        self.var
    }

    /// Zero-based index of the variable.
    pub fn index(self) -> usize {
        self.var as usize - 1
    }

    pub fn is_negated(self) -> bool {
        self.negated
    }

    pub fn negate(self) -> Self {
        Literal { var: self.var, negated: !self.negated }
    }

    /// Truth value of the literal when its variable has value `value`.
    #[inline]
    pub fn holds_for(self, value: bool) -> bool {
        value != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A disjunction of literals with no repeated literal.
///
/// Tautologies (`x ∨ ¬x ∨ …`) are allowed. The empty clause is allowed and is
/// never satisfied.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Result<Self, CnfError> {
        for (i, lit) in literals.iter().enumerate() {
            if literals[..i].contains(lit) {
                return Err(CnfError::DuplicateLiteral(lit.to_dimacs()));
            }
        }
        Ok(Clause { literals })
    }

    pub fn from_dimacs(codes: &[i64]) -> Result<Self, CnfError> {
        let literals = codes
            .iter()
            .map(|&c| {
                Literal::from_dimacs(c)
                    .ok_or(CnfError::LiteralOutOfRange { literal: c, num_vars: u32::MAX as usize })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Clause::new(literals)
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.literals.iter().any(|l| l.holds_for(a.values[l.index()]))
    }

    /// Position of the literal over `var`, if any.
    pub fn position_of(&self, var: u32) -> Option<usize> {
        self.literals.iter().position(|l| l.var == var)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for lit in &self.literals {
            write!(f, "{lit} ")?;
        }
        write!(f, "0")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self, CnfError> {
        for clause in &clauses {
            for lit in clause.literals() {
                if lit.var as usize > num_vars {
                    return Err(CnfError::LiteralOutOfRange { literal: lit.to_dimacs(), num_vars });
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    /// Builds a formula from DIMACS-style integer clauses.
    pub fn from_dimacs_clauses(num_vars: usize, clauses: &[&[i64]]) -> Result<Self, CnfError> {
        let clauses = clauses
            .iter()
            .map(|c| Clause::from_dimacs(c))
            .collect::<Result<Vec<_>, _>>()?;
        CnfFormula::new(num_vars, clauses)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, index: usize) -> &Clause {
        &self.clauses[index]
    }

    pub fn max_clause_len(&self) -> usize {
        self.clauses.iter().map(Clause::len).max().unwrap_or(0)
    }

    /// For each variable (by zero-based index), the clauses it occurs in, in
    /// clause order. A clause listing a variable twice appears twice.
    pub fn occurrence_lists(&self) -> Vec<Vec<usize>> {
        let mut occ = vec![Vec::new(); self.num_vars];
        for (ci, clause) in self.clauses.iter().enumerate() {
            for lit in clause.literals() {
                occ[lit.index()].push(ci);
            }
        }
        occ
    }

    pub fn check_assignment(&self, a: &Assignment) -> Result<(), CnfError> {
        if a.len() != self.num_vars {
            return Err(CnfError::LengthMismatch { expected: self.num_vars, got: a.len() });
        }
        Ok(())
    }

    /// Serializes in DIMACS CNF. The output parses back to an equal formula.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            out.push_str(&clause.to_string());
            out.push('\n');
        }
        out
    }
}

/// A boolean value for every variable of a formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    pub fn all_false(num_vars: usize) -> Self {
        Assignment { values: vec![false; num_vars] }
    }

    pub fn random(num_vars: usize, rng: &mut SeededRng) -> Self {
        Assignment { values: (0..num_vars).map(|_| rng.random()).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of 1-based variable `var`.
    pub fn value(&self, var: u32) -> bool {
        self.values[var as usize - 1]
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn set(&mut self, var: u32, value: bool) {
        self.values[var as usize - 1] = value;
    }

    pub fn flip(&mut self, var: u32) {
        let v = &mut self.values[var as usize - 1];
        *v = !*v;
    }

    pub fn literal_holds(&self, lit: Literal) -> bool {
        lit.holds_for(self.values[lit.index()])
    }

    /// DIMACS solution line(s): `v 1 -2 3 ... 0`, wrapped at 10 literals.
    pub fn to_v_lines(&self) -> String {
        let mut out = String::new();
        let codes: Vec<String> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &b)| if b { format!("{}", i + 1) } else { format!("-{}", i + 1) })
            .collect();
        for chunk in codes.chunks(10) {
            out.push_str("v ");
            out.push_str(&chunk.join(" "));
            out.push('\n');
        }
        out.push_str("v 0\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub satisfied: bool,
    pub unsatisfied: Vec<usize>,
}

pub fn evaluate(formula: &CnfFormula, a: &Assignment) -> Result<Evaluation, CnfError> {
    formula.check_assignment(a)?;
    let unsatisfied: Vec<usize> = formula
        .clauses
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_satisfied_by(a))
        .map(|(i, _)| i)
        .collect();
    Ok(Evaluation { satisfied: unsatisfied.is_empty(), unsatisfied })
}

/// Exhaustive search. Candidates are tried in increasing order of the integer
/// whose bit `i - 1` is the value of `x_i`, so the result is the satisfying
/// assignment with the smallest such encoding.
pub fn brute_force_sat(formula: &CnfFormula) -> Result<Option<Assignment>, CnfError> {
    let n = formula.num_vars;
    if n > BRUTE_FORCE_MAX_VARS {
        return Err(CnfError::TooManyVariables(n));
    }
    // (positive mask, negative mask) per clause
    let masks: Vec<(u32, u32)> = formula
        .clauses
        .iter()
        .map(|c| {
            c.literals().iter().fold((0u32, 0u32), |(p, q), l| {
                let bit = 1u32 << l.index();
                if l.negated {
                    (p, q | bit)
                } else {
                    (p | bit, q)
                }
            })
        })
        .collect();
    for code in 0u32..(1u32 << n) {
        if masks.iter().all(|&(p, q)| code & p != 0 || !code & q != 0) {
            let values = (0..n).map(|i| code >> i & 1 == 1).collect();
            return Ok(Some(Assignment::new(values)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimacsWarning {
    /// The header declared `declared` clauses but `found` were read.
    ClauseCountMismatch { declared: usize, found: usize },
}

#[derive(Debug, Clone)]
pub struct ParsedDimacs {
    pub formula: CnfFormula,
    pub warnings: Vec<DimacsWarning>,
}

/// Parses DIMACS CNF.
///
/// Accepts `c` comment lines anywhere, a single `p cnf <n> <m>` header before
/// any clause, and clauses of nonzero integers terminated by `0` that may span
/// lines. A line starting with `%` ends the input (SATLIB convention).
pub fn parse_dimacs(text: &str) -> Result<ParsedDimacs, CnfError> {
    let err = |line: usize, message: String| CnfError::Parse { line, message };
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut pending: Vec<Literal> = Vec::new();
    let mut pending_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err(line_no, "duplicate header".into()));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(err(line_no, format!("malformed header `{line}`")));
            }
            let n = parts[2]
                .parse::<usize>()
                .map_err(|_| err(line_no, format!("malformed variable count `{}`", parts[2])))?;
            let m = parts[3]
                .parse::<usize>()
                .map_err(|_| err(line_no, format!("malformed clause count `{}`", parts[3])))?;
            header = Some((n, m));
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(err(line_no, "clause before `p cnf` header".into()));
        };
        for token in line.split_whitespace() {
            let code: i64 = token
                .parse()
                .map_err(|_| err(line_no, format!("invalid literal `{token}`")))?;
            if code == 0 {
                let clause = Clause::new(std::mem::take(&mut pending))
                    .map_err(|e| err(line_no, e.to_string()))?;
                clauses.push(clause);
                continue;
            }
            if code.unsigned_abs() > num_vars as u64 {
                return Err(err(line_no, format!("literal out of range: {code}")));
            }
            if pending.is_empty() {
                pending_line = line_no;
            }
            pending.push(Literal::from_dimacs(code).expect("nonzero and in range"));
        }
    }

    let Some((num_vars, declared)) = header else {
        return Err(err(text.lines().count().max(1), "missing `p cnf` header".into()));
    };
    if !pending.is_empty() {
        return Err(err(pending_line, "unterminated final clause (missing 0)".into()));
    }
    let mut warnings = Vec::new();
    if declared != clauses.len() {
        warnings.push(DimacsWarning::ClauseCountMismatch { declared, found: clauses.len() });
    }
    let formula = CnfFormula::new(num_vars, clauses).expect("ranges checked while parsing");
    Ok(ParsedDimacs { formula, warnings })
}

fn random_clause(n: usize, rng: &mut SeededRng) -> Clause {
    let vars = index::sample(rng, n, 3);
    let literals = vars
        .iter()
        .map(|v| Literal::new(v as u32 + 1, rng.random()))
        .collect();
    Clause { literals }
}

/// Uniform random 3SAT: each clause has three distinct variables and uniform
/// polarities.
pub fn generate_random_3sat(n: usize, m: usize, seed: u64) -> Result<CnfFormula, CnfError> {
    if n < 3 {
        return Err(CnfError::TooFewVariables(n));
    }
    let mut rng = rng_from_seed(seed);
    let clauses = (0..m).map(|_| random_clause(n, &mut rng)).collect();
    Ok(CnfFormula { num_vars: n, clauses })
}

/// Random 3SAT conditioned on a hidden uniform assignment: clauses that the
/// hidden assignment falsifies are resampled.
pub fn generate_planted_3sat(
    n: usize,
    m: usize,
    seed: u64,
) -> Result<(CnfFormula, Assignment), CnfError> {
    if n < 3 {
        return Err(CnfError::TooFewVariables(n));
    }
    let mut rng = rng_from_seed(seed);
    let planted = Assignment::random(n, &mut rng);
    let clauses = (0..m)
        .map(|_| loop {
            let clause = random_clause(n, &mut rng);
            if clause.is_satisfied_by(&planted) {
                break clause;
            }
        })
        .collect();
    Ok((CnfFormula { num_vars: n, clauses }, planted))
}
