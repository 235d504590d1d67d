use rand::Rng;

use super::tracker::UnsatTracker;
use super::{verified, Algorithm, FlipClass, FlipKind, Outcome, ReflectionStats, SolverConfig, SolverError, SolverResult, TraceStep};
use crate::cnf::{Assignment, CnfFormula};
use crate::rng::rng_from_seed;
use crate::solvers::classic::hamming;
use crate::transform::{project_assignment, ClusteredFormula};

/// `make − break` of flipping `var` under `a`: clauses that become
/// satisfied minus clauses that become unsatisfied.
pub fn make_break(formula: &CnfFormula, a: &Assignment, var: u32) -> FlipClass {
    let mut delta = 0;
    for clause in formula.clauses() {
        if clause.position_of(var).is_none() {
            continue;
        }
        let before = clause.is_satisfied_by(a);
        let after = clause
            .literals()
            .iter()
            .any(|&l| if l.var() == var { !a.literal_holds(l) } else { a.literal_holds(l) });
        delta += i32::from(after) - i32::from(before);
    }
    FlipClass::from_delta(delta)
}

/// Probability mass of the negative, null and positive class, given the
/// class sizes. `None` when there is no candidate at all.
///
/// With all three classes present the masses are `α, (1−α)/2, (1−α)/2`.
/// A missing positive class leaves `1−α` to the null flips, a missing null
/// class leaves it to the positive flips, and without negative flips null
/// and positive split evenly. A lone class gets everything.
pub fn flip_class_masses(n1: usize, n2: usize, n3: usize, alpha: f64) -> Option<[f64; 3]> {
    let masses = match (n1 > 0, n2 > 0, n3 > 0) {
        (false, false, false) => return None,
        (true, true, true) => [alpha, (1.0 - alpha) / 2.0, (1.0 - alpha) / 2.0],
        (true, true, false) => [alpha, 1.0 - alpha, 0.0],
        (true, false, true) => [alpha, 0.0, 1.0 - alpha],
        (false, true, true) => [0.0, 0.5, 0.5],
        (true, false, false) => [1.0, 0.0, 0.0],
        (false, true, false) => [0.0, 1.0, 0.0],
        (false, false, true) => [0.0, 0.0, 1.0],
    };
    Some(masses)
}

/// Probability of each single negative, null and positive flip.
pub fn flip_probabilities(n1: usize, n2: usize, n3: usize, alpha: f64) -> Option<[f64; 3]> {
    let masses = flip_class_masses(n1, n2, n3, alpha)?;
    let per = |mass: f64, n: usize| if n == 0 { 0.0 } else { mass / n as f64 };
    Some([per(masses[0], n1), per(masses[1], n2), per(masses[2], n3)])
}

/// Sparrow-style walk on a clustered formula.
///
/// Per try: a uniform random assignment and up to `2m²` flips (`m` clauses
/// of the clustered formula). Each step scores the flip of every variable
/// occurring in an unsatisfied clause by `make − break`, picks a class with
/// [`flip_class_masses`] and a flip uniformly inside it. A satisfying
/// assignment is projected back to the original variables.
///
/// `planted` is a solution of the clustered formula, used only to label
/// reflections and measure the final distance.
pub fn clustered_sparrow(
    cf: &ClusteredFormula,
    cfg: &SolverConfig,
    planted: Option<&Assignment>,
) -> Result<SolverResult, SolverError> {
    cfg.validate()?;
    let formula = cf.formula();
    let n = formula.num_vars();
    let budget = cfg.budget(Algorithm::Sparrow, n, formula.num_clauses());
    let mut rng = rng_from_seed(cfg.seed);
    let mut stats = ReflectionStats::default();
    let mut trace = cfg.record_trace.then(Vec::new);
    let has_empty_clause = formula.clauses().iter().any(|c| c.is_empty());
    let mut steps_used = 0;
    let mut last = Assignment::all_false(n);

    let mut seen = vec![0u64; n];
    let mut stamp = 0u64;
    let mut classes: [Vec<u32>; 3] = Default::default();

    for attempt in 1..=cfg.restarts {
        let mut a = Assignment::random(n, &mut rng);
        let mut tracker = UnsatTracker::new(formula, &a);
        let mut steps = 0;
        while !tracker.is_sat() && steps < budget && !has_empty_clause {
            stamp += 1;
            classes.iter_mut().for_each(Vec::clear);
            for &ci in tracker.unsat() {
                for lit in formula.clause(ci).literals() {
                    let idx = lit.index();
                    if seen[idx] == stamp {
                        continue;
                    }
                    seen[idx] = stamp;
                    let (make, brk) = tracker.make_break(&a, lit.var());
                    let class = match FlipClass::from_delta(make as i32 - brk as i32).kind {
                        FlipKind::Negative => 0,
                        FlipKind::Null => 1,
                        FlipKind::Positive => 2,
                    };
                    classes[class].push(lit.var());
                }
            }
            let masses = flip_class_masses(classes[0].len(), classes[1].len(), classes[2].len(), cfg.alpha)
                .expect("a variable of an unsatisfied clause is always a candidate");
            let u: f64 = rng.random();
            let mut cumulative = 0.0;
            let mut chosen = None;
            for (class, mass) in masses.iter().enumerate() {
                if classes[class].is_empty() {
                    continue;
                }
                cumulative += mass;
                chosen = Some(class);
                if u < cumulative {
                    break;
                }
            }
            let members = &classes[chosen.expect("some class is nonempty")];
            let var = members[rng.random_range(0..members.len())];

            if let Some(p) = planted {
                stats.record(u32::from(a.value(var)), 1, u32::from(p.value(var)));
            }
            tracker.flip(&mut a, var);
            if let Some(t) = trace.as_mut() {
                t.push(TraceStep { clause: None, var, direction: if a.value(var) { 1 } else { -1 } });
            }
            steps += 1;
        }
        steps_used += steps;
        if tracker.is_sat() {
            let final_hamming = planted.map(|p| hamming(&a, p));
            let a = match verified(formula, a)? {
                Outcome::Sat(a) => a,
                Outcome::Exhausted => unreachable!(),
            };
            return Ok(SolverResult {
                outcome: Outcome::Sat(project_assignment(cf, &a)?),
                steps_used,
                restarts_used: attempt,
                reflections: stats,
                trace,
                final_hamming,
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
