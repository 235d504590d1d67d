use rand::Rng;

use super::{Algorithm, InitMode, Outcome, ReflectionStats, SolverConfig, SolverError, SolverResult, TraceStep};
use crate::cnf::{evaluate, Assignment, CnfFormula};
use crate::rng::{rng_from_seed, SeededRng};
use crate::valuation::{ClauseDeficits, ValuationVector};

fn initial_levels(n: usize, cfg: &SolverConfig, rng: &mut SeededRng) -> Vec<u32> {
    let m = cfg.resolution;
    match cfg.init_mode {
        InitMode::AllHalf => vec![m / 2; n],
        InitMode::UniformS0 => (0..n).map(|_| 2 * rng.random_range(0..=m / 2)).collect(),
        InitMode::UniformBoolean => (0..n).map(|_| if rng.random() { m } else { 0 }).collect(),
    }
}

/// Rounds every level to the nearer barrier, ties towards true.
fn rounded(vv: &ValuationVector) -> Assignment {
    let m = vv.resolution();
    Assignment::new(vv.levels().iter().map(|&k| 2 * k >= m).collect())
}

/// The valuation walk.
///
/// All variables start at `M/2` (or as `init_mode` says). Each step: accept
/// if every level is on a barrier and the formula holds; otherwise choose a
/// clause of minimal valuation uniformly among ties, one of its literals
/// uniformly, and move that variable one level: up or down with probability
/// ½ from an interior level, deterministically away from a barrier. Minimal
/// clauses are found by exact integer comparison where possible (see
/// [`ClauseDeficits`]).
pub fn valuation_walk(
    formula: &CnfFormula,
    cfg: &SolverConfig,
    planted: Option<&Assignment>,
) -> Result<SolverResult, SolverError> {
    cfg.validate()?;
    let m = cfg.resolution;
    if cfg.init_mode == InitMode::AllHalf && m % 2 == 1 {
        return Err(SolverError::Config(format!("init mode `half` needs even M, got {m}")));
    }
    let n = formula.num_vars();
    let budget = cfg.budget(Algorithm::Valuation, n, formula.num_clauses());
    let occurrences = formula.occurrence_lists();
    let targets: Option<Vec<u32>> =
        planted.map(|p| p.values().iter().map(|&b| if b { m } else { 0 }).collect());
    let has_empty_clause = formula.clauses().iter().any(|c| c.is_empty());

    let mut rng = rng_from_seed(cfg.seed);
    let mut stats = ReflectionStats::default();
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut steps_used = 0;
    let mut vv = ValuationVector::new(m, vec![0; n]).expect("M >= 1");

    for attempt in 1..=cfg.restarts {
        vv = ValuationVector::new(m, initial_levels(n, cfg, &mut rng)).expect("levels within grid");
        let mut levels = vv.levels().to_vec();
        let mut deficits = ClauseDeficits::new(formula, &vv);
        let mut interior = levels.iter().filter(|&&k| k != 0 && k != m).count();
        let mut distance: Option<u64> = targets
            .as_ref()
            .map(|t| levels.iter().zip(t).map(|(&k, &g)| u64::from(k.abs_diff(g))).sum());

        let mut steps = 0;
        let found = loop {
            if interior == 0 && deficits.all_satisfied() {
                break Some(Assignment::new(levels.iter().map(|&k| k == m).collect()));
            }
            if cfg.check_rounded {
                let vv_now = ValuationVector::new(m, levels.clone()).expect("levels within grid");
                let candidate = rounded(&vv_now);
                if evaluate(formula, &candidate).map(|e| e.satisfied).unwrap_or(false) {
                    break Some(candidate);
                }
            }
            if steps >= budget || has_empty_clause {
                break None;
            }

            let ci = deficits.nth_minimal(rng.random_range(0..deficits.minimal_count()));
            let clause = formula.clause(ci);
            let var = clause.literals()[rng.random_range(0..clause.len())].var();
            let idx = var as usize - 1;
            let k = levels[idx];
            let next = if k == 0 {
                1
            } else if k == m {
                m - 1
            } else if rng.random::<bool>() {
                k + 1
            } else {
                k - 1
            };

            if let Some(t) = &targets {
                stats.record(k, m, t[idx]);
                let before = u64::from(k.abs_diff(t[idx]));
                let after = u64::from(next.abs_diff(t[idx]));
                if cfg.check_invariants {
                    let is_barrier = k == 0 || k == m;
                    let positive = is_barrier && k != t[idx];
                    let negative = is_barrier && k == t[idx];
                    if before.abs_diff(after) != 1
                        || (positive && after > before)
                        || (negative && after < before)
                    {
                        return Err(SolverError::InvariantViolated(format!(
                            "step {steps}: distance to solution moved {before} -> {after} at level {k}"
                        )));
                    }
                }
                let d = distance.as_mut().expect("tracked with targets");
                *d = *d + after - before;
            }
            if cfg.check_invariants && next > m {
                return Err(SolverError::InvariantViolated(format!("level {next} above M = {m}")));
            }

            let was_interior = k != 0 && k != m;
            let is_interior = next != 0 && next != m;
            match (was_interior, is_interior) {
                (true, false) => interior -= 1,
                (false, true) => interior += 1,
                _ => {}
            }
            levels[idx] = next;
            for &c in &occurrences[idx] {
                deficits.update(c, formula.clause(c), &levels);
            }
            if let Some(t) = trace.as_mut() {
                t.push(TraceStep { clause: Some(ci), var, direction: if next > k { 1 } else { -1 } });
            }
            steps += 1;

            if cfg.check_invariants {
                if let (Some(t), Some(d)) = (&targets, distance) {
                    let full: u64 = levels.iter().zip(t).map(|(&a, &b)| u64::from(a.abs_diff(b))).sum();
                    if full != d {
                        return Err(SolverError::InvariantViolated(format!(
                            "incremental distance {d} disagrees with recomputed {full}"
                        )));
                    }
                }
            }
        };
        steps_used += steps;
        vv = ValuationVector::new(m, levels).expect("levels within grid");
        if let Some(a) = found {
            return Ok(SolverResult {
                outcome: super::verified(formula, a)?,
                steps_used,
                restarts_used: attempt,
                reflections: stats,
                trace,
                final_hamming: final_distance(&vv, targets.as_deref()),
            });
        }
    }
    Ok(SolverResult {
        outcome: Outcome::Exhausted,
        steps_used,
        restarts_used: cfg.restarts,
        reflections: stats,
        trace,
        final_hamming: final_distance(&vv, targets.as_deref()),
    })
}

fn final_distance(vv: &ValuationVector, targets: Option<&[u32]>) -> Option<f64> {
    targets.map(|t| {
        let steps: u64 = vv.levels().iter().zip(t).map(|(&k, &g)| u64::from(k.abs_diff(g))).sum();
        steps as f64 / f64::from(vv.resolution())
    })
}
