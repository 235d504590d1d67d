use rand::Rng;

use crate::cnf::{Assignment, CnfFormula};
use crate::rng::SeededRng;

/// Incremental bookkeeping of a boolean assignment: true-literal counts per
/// clause and the set of unsatisfied clauses.
#[derive(Debug, Clone)]
pub(crate) struct UnsatTracker {
    /// Per zero-based variable: (clause, literal negated).
    occurrences: Vec<Vec<(usize, bool)>>,
    true_count: Vec<u32>,
    unsat: Vec<usize>,
    /// Position of each clause in `unsat`, or `usize::MAX`.
    position: Vec<usize>,
}

impl UnsatTracker {
    pub fn new(formula: &CnfFormula, a: &Assignment) -> Self {
        let mut occurrences = vec![Vec::new(); formula.num_vars()];
        let mut true_count = vec![0; formula.num_clauses()];
        for (ci, clause) in formula.clauses().iter().enumerate() {
            for &lit in clause.literals() {
                occurrences[lit.index()].push((ci, lit.is_negated()));
                if a.literal_holds(lit) {
                    true_count[ci] += 1;
                }
            }
        }
        let mut tracker = UnsatTracker {
            occurrences,
            true_count,
            unsat: Vec::new(),
            position: vec![usize::MAX; formula.num_clauses()],
        };
        for ci in 0..formula.num_clauses() {
            if tracker.true_count[ci] == 0 {
                tracker.insert(ci);
            }
        }
        tracker
    }

    fn insert(&mut self, ci: usize) {
        self.position[ci] = self.unsat.len();
        self.unsat.push(ci);
    }

    fn remove(&mut self, ci: usize) {
        let pos = self.position[ci];
        let last = *self.unsat.last().expect("clause is tracked");
        self.unsat.swap_remove(pos);
        if last != ci {
            self.position[last] = pos;
        }
        self.position[ci] = usize::MAX;
    }

    pub fn is_sat(&self) -> bool {
        self.unsat.is_empty()
    }

    pub fn unsat(&self) -> &[usize] {
        &self.unsat
    }

    pub fn random_unsat(&self, rng: &mut SeededRng) -> usize {
        self.unsat[rng.random_range(0..self.unsat.len())]
    }

    pub fn occurrences(&self, var: u32) -> &[(usize, bool)] {
        &self.occurrences[var as usize - 1]
    }

    /// `(make, break)` for flipping `var` under `a`.
    pub fn make_break(&self, a: &Assignment, var: u32) -> (u32, u32) {
        let value = a.value(var);
        let mut make = 0;
        let mut brk = 0;
        for &(ci, negated) in self.occurrences(var) {
            let lit_true = value != negated;
            match (lit_true, self.true_count[ci]) {
                (false, 0) => make += 1,
                (true, 1) => brk += 1,
                _ => {}
            }
        }
        (make, brk)
    }

    /// Flips `var` in `a` and updates the counts.
    pub fn flip(&mut self, a: &mut Assignment, var: u32) {
        a.flip(var);
        let value = a.value(var);
        for i in 0..self.occurrences[var as usize - 1].len() {
            let (ci, negated) = self.occurrences[var as usize - 1][i];
            if value != negated {
                self.true_count[ci] += 1;
                if self.true_count[ci] == 1 {
                    self.remove(ci);
                }
            } else {
                self.true_count[ci] -= 1;
                if self.true_count[ci] == 0 {
                    self.insert(ci);
                }
            }
        }
    }
}
