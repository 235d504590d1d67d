//! Clustering: rewrite a 3SAT formula so that every variable occurs in at
//! most three clauses.
//!
//! Every occurrence of a variable `x` gets a fresh occurrence variable
//! `x_i`, substituted in place. When `x` occurs `m ≥ 2` times, the cyclic
//! chain `(x_1 ∨ ¬x_2) ∧ (x_2 ∨ ¬x_3) ∧ … ∧ (x_m ∨ ¬x_1)` is appended, which
//! holds exactly when all `x_i` agree. Each occurrence variable then appears
//! in its original clause plus once positively and once negatively in the
//! chain: the cluster `(x ∨ α ∨ β) ∧ (x ∨ ¬γ) ∧ (¬x ∨ θ)` up to polarity.

use std::fmt::Write as _;

use thiserror::Error;

use crate::cnf::{Assignment, Clause, CnfFormula, Literal};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("clause {clause} has {len} literals; clustering needs exactly 3")]
    NotThreeSat { clause: usize, len: usize },
    #[error("assignment has {got} values, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("occurrence variables of x{var} disagree; chain clause {clause} is falsified")]
    ChainViolated { var: u32, clause: usize },
}

/// Where a clause of the clustered formula came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseRole {
    /// An input clause with its variables replaced by occurrence variables.
    Primary,
    /// A two-literal clause of an equality chain.
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Membership {
    pub clause: usize,
    pub negated: bool,
    pub role: ClauseRole,
}

/// The clauses containing one occurrence variable.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cluster {
    pub members: Vec<Membership>,
}

impl Cluster {
    pub fn clauses(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(|m| m.clause)
    }

    /// The clause with three literals, if the variable has one.
    pub fn three_literal_clause(&self) -> Option<usize> {
        self.members.iter().find(|m| m.role == ClauseRole::Primary).map(|m| m.clause)
    }

    /// Clauses in which the variable has its majority polarity: the two
    /// clauses that flipping the variable towards that polarity can only help.
    /// Empty for unchained variables.
    pub fn majority_polarity_clauses(&self) -> Vec<usize> {
        let negs = self.members.iter().filter(|m| m.negated).count();
        let pos = self.members.len() - negs;
        if self.members.len() < 3 || negs == pos {
            return Vec::new();
        }
        let majority_negated = negs > pos;
        self.members
            .iter()
            .filter(|m| m.negated == majority_negated)
            .map(|m| m.clause)
            .collect()
    }

    /// (positive, negative) occurrence counts.
    pub fn polarity_counts(&self) -> (usize, usize) {
        let negs = self.members.iter().filter(|m| m.negated).count();
        (self.members.len() - negs, negs)
    }
}

/// For each original variable (zero-based), its occurrence variables in order
/// of appearance.
pub type OccurrenceMap = Vec<Vec<u32>>;

#[derive(Debug, Clone)]
pub struct ClusteredFormula {
    formula: CnfFormula,
    origin: Vec<u32>,
    occurrences: OccurrenceMap,
    clusters: Vec<Cluster>,
    source_vars: usize,
    source_clauses: usize,
}

impl ClusteredFormula {
    /// The clustered clauses: the substituted input clauses first, then chains.
    pub fn formula(&self) -> &CnfFormula {
        &self.formula
    }

    /// Original variable of 1-based occurrence variable `occ`.
    pub fn origin_var(&self, occ: u32) -> u32 {
        self.origin[occ as usize - 1]
    }

    pub fn occurrences(&self) -> &OccurrenceMap {
        &self.occurrences
    }

    /// Cluster of 1-based occurrence variable `occ`.
    pub fn cluster(&self, occ: u32) -> &Cluster {
        &self.clusters[occ as usize - 1]
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn source_num_vars(&self) -> usize {
        self.source_vars
    }

    pub fn source_num_clauses(&self) -> usize {
        self.source_clauses
    }

    pub fn is_chain_clause(&self, clause: usize) -> bool {
        clause >= self.source_clauses
    }

    /// Sidecar text: one `occ_var orig_var` line per occurrence variable.
    pub fn mapping_text(&self) -> String {
        let mut out = String::new();
        for (i, orig) in self.origin.iter().enumerate() {
            writeln!(out, "{} {}", i + 1, orig).expect("writing to a String");
        }
        out
    }
}

pub fn cluster_expression(formula: &CnfFormula) -> Result<ClusteredFormula, TransformError> {
    let mut origin = Vec::new();
    let mut occurrences: OccurrenceMap = vec![Vec::new(); formula.num_vars()];
    let mut clauses = Vec::with_capacity(formula.num_clauses());

    for (ci, clause) in formula.clauses().iter().enumerate() {
        if clause.len() != 3 {
            return Err(TransformError::NotThreeSat { clause: ci, len: clause.len() });
        }
        let lits = clause
            .literals()
            .iter()
            .map(|lit| {
                origin.push(lit.var());
                let occ = origin.len() as u32;
                occurrences[lit.index()].push(occ);
                Literal::new(occ, lit.is_negated())
            })
            .collect();
        clauses.push(Clause::new(lits).expect("occurrence variables are fresh"));
    }
    let source_clauses = clauses.len();

    for occ in occurrences.iter().filter(|o| o.len() >= 2) {
        for (i, &a) in occ.iter().enumerate() {
            let b = occ[(i + 1) % occ.len()];
            clauses.push(Clause::new(vec![Literal::positive(a), Literal::negative(b)]).expect("a ≠ b"));
        }
    }

    let num_occ = origin.len();
    let clustered = CnfFormula::new(num_occ, clauses).expect("occurrence variables in range");
    let mut clusters = vec![Cluster::default(); num_occ];
    for (ci, clause) in clustered.clauses().iter().enumerate() {
        let role = if ci < source_clauses { ClauseRole::Primary } else { ClauseRole::Chain };
        for lit in clause.literals() {
            clusters[lit.index()].members.push(Membership { clause: ci, negated: lit.is_negated(), role });
        }
    }

    Ok(ClusteredFormula {
        formula: clustered,
        origin,
        occurrences,
        clusters,
        source_vars: formula.num_vars(),
        source_clauses,
    })
}

/// Reads the original assignment off the occurrence variables. Fails if the
/// equality chains are not all satisfied. Variables that never occur map to
/// `false`.
pub fn project_assignment(cf: &ClusteredFormula, a_star: &Assignment) -> Result<Assignment, TransformError> {
    if a_star.len() != cf.formula.num_vars() {
        return Err(TransformError::LengthMismatch { expected: cf.formula.num_vars(), got: a_star.len() });
    }
    for ci in cf.source_clauses..cf.formula.num_clauses() {
        let clause = cf.formula.clause(ci);
        if !clause.is_satisfied_by(a_star) {
            let var = cf.origin_var(clause.literals()[0].var());
            return Err(TransformError::ChainViolated { var, clause: ci });
        }
    }
    let values = cf
        .occurrences
        .iter()
        .map(|occ| occ.first().is_some_and(|&o| a_star.value(o)))
        .collect();
    Ok(Assignment::new(values))
}

/// Copies each original value onto all of its occurrence variables.
pub fn lift_assignment(cf: &ClusteredFormula, a: &Assignment) -> Result<Assignment, TransformError> {
    if a.len() != cf.source_vars {
        return Err(TransformError::LengthMismatch { expected: cf.source_vars, got: a.len() });
    }
    Ok(Assignment::new(cf.origin.iter().map(|&v| a.value(v)).collect()))
}
