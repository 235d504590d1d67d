use rand::Rng;

use super::tracker::UnsatTracker;
use super::{verified, Algorithm, Outcome, ReflectionStats, SolverConfig, SolverError, SolverResult, TraceStep};
use crate::cnf::{Assignment, CnfFormula};
use crate::rng::rng_from_seed;

/// Schöning's walk: per try, a uniform random assignment and up to `3n`
/// flips, each of a uniformly chosen literal of a uniformly chosen
/// unsatisfied clause.
///
/// The assignment is also checked once after the last flip of a try.
pub fn schoening_classic(
    formula: &CnfFormula,
    cfg: &SolverConfig,
    planted: Option<&Assignment>,
) -> Result<SolverResult, SolverError> {
    cfg.validate()?;
    let n = formula.num_vars();
    let budget = cfg.budget(Algorithm::Classic, n, formula.num_clauses());
    let mut rng = rng_from_seed(cfg.seed);
    let mut stats = ReflectionStats::default();
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut steps_used = 0;
    let has_empty_clause = formula.clauses().iter().any(|c| c.is_empty());
    let mut last = Assignment::all_false(n);

    for attempt in 1..=cfg.restarts {
        let mut a = Assignment::random(n, &mut rng);
        let mut tracker = UnsatTracker::new(formula, &a);
        let mut steps = 0;
        while !tracker.is_sat() && steps < budget && !has_empty_clause {
            let ci = tracker.random_unsat(&mut rng);
            let clause = formula.clause(ci);
            let lit = clause.literals()[rng.random_range(0..clause.len())];
            let var = lit.var();
            if let Some(p) = planted {
                let level = u32::from(a.value(var));
                stats.record(level, 1, u32::from(p.value(var)));
            }
            tracker.flip(&mut a, var);
            if let Some(t) = trace.as_mut() {
                t.push(TraceStep { clause: Some(ci), var, direction: if a.value(var) { 1 } else { -1 } });
            }
            steps += 1;
        }
        steps_used += steps;
        if tracker.is_sat() {
            return Ok(SolverResult {
                final_hamming: planted.map(|p| hamming(&a, p)),
                outcome: verified(formula, a)?,
                steps_used,
                restarts_used: attempt,
                reflections: stats,
                trace,
            });
        }
        last = a;
    }
    Ok(SolverResult {
        outcome: Outcome::Exhausted,
        steps_used,
        restarts_used: cfg.restarts,
        reflections: stats,
        trace,
        final_hamming: planted.map(|p| hamming(&last, p)),
    })
}

pub(crate) fn hamming(a: &Assignment, b: &Assignment) -> f64 {
    a.values().iter().zip(b.values()).filter(|(x, y)| x != y).count() as f64
}
