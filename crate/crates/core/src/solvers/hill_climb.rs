use num_traits::Float;
use rand::Rng;

use super::{verified, Algorithm, InitMode, Outcome, ReflectionStats, SolverConfig, SolverError, SolverResult, TraceStep};
use crate::cnf::{Assignment, CnfFormula};
use crate::rng::{rng_from_seed, SeededRng};
use crate::scalar::Scalar;
use crate::solvers::maximize_cubic_on_unit_interval;
use crate::transform::{project_assignment, ClusteredFormula};
use crate::valuation::{clause_value, expression_value, literal_value};

/// A sweep that raises the formula valuation by less than this counts as a
/// stall and triggers a random restart.
pub const HILL_CLIMB_STALL_THRESHOLD: f64 = 1e-9;

/// Allowed decrease of the formula valuation across one coordinate update,
/// for floating-point noise.
pub const MONOTONICITY_SLACK: f64 = 1e-12;

/// Real valuations of a clustered formula, improved one variable at a time.
///
/// With every other variable fixed, each clause containing `x` is affine in
/// `v(x)`, so the product of the (at most three) clauses containing `x` is a
/// cubic; an update moves `v(x)` to its maximizer on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct HillClimbState<'a, T> {
    formula: &'a CnfFormula,
    /// Per zero-based variable: (clause, literal negated).
    clauses_of: Vec<Vec<(usize, bool)>>,
    values: Vec<T>,
}

impl<'a, T: Float + Scalar> HillClimbState<'a, T> {
    /// Fails if some variable occurs in more than three clauses.
    pub fn new(formula: &'a CnfFormula, values: Vec<T>) -> Result<Self, SolverError> {
        assert_eq!(values.len(), formula.num_vars(), "one value per variable");
        let mut clauses_of = vec![Vec::new(); formula.num_vars()];
        for (ci, clause) in formula.clauses().iter().enumerate() {
            for lit in clause.literals() {
                clauses_of[lit.index()].push((ci, lit.is_negated()));
            }
        }
        if let Some(v) = clauses_of.iter().position(|c| c.len() > 3) {
            return Err(SolverError::Config(format!(
                "variable {} occurs in {} clauses; hill climbing needs a clustered formula",
                v + 1,
                clauses_of[v].len()
            )));
        }
        Ok(HillClimbState { formula, clauses_of, values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn set_values(&mut self, values: Vec<T>) {
        assert_eq!(values.len(), self.values.len());
        self.values = values;
    }

    pub fn expression_valuation(&self) -> T {
        expression_value(self.formula, &self.values)
    }

    pub fn all_satisfied(&self) -> bool {
        self.formula.clauses().iter().all(|c| clause_value(c, &self.values) == <T as num_traits::One>::one())
    }

    /// Coefficients `[c0, c1, c2, c3]` of the product of the clauses
    /// containing 1-based `var`, as a polynomial in its valuation.
    pub fn local_polynomial(&self, var: u32) -> [T; 4] {
        let one = <T as num_traits::One>::one();
        let zero = <T as num_traits::Zero>::zero();
        let mut poly = [one, zero, zero, zero];
        for &(ci, negated) in &self.clauses_of[var as usize - 1] {
            // ∏ over the other literals of (1 − v(ℓ))
            let rest = self.formula.clause(ci).literals().iter().filter(|l| l.var() != var).fold(one, |acc, &l| {
                acc * (one - literal_value(l, self.values[l.index()]))
            });
            // positive: 1 − (1 − v)·rest; negated: 1 − v·rest
            let (a, b) = if negated { (one, -rest) } else { (one - rest, rest) };
            let mut next = [zero; 4];
            for d in 0..3 {
                next[d] = next[d] + poly[d] * a;
                next[d + 1] = next[d + 1] + poly[d] * b;
            }
            poly = next;
        }
        poly
    }

    /// Moves `var` to the maximizer of its local cubic. Returns the old and
    /// new valuation of the variable.
    pub fn update(&mut self, var: u32) -> (T, T) {
        let c = self.local_polynomial(var);
        let (x, _) = maximize_cubic_on_unit_interval(c[0], c[1], c[2], c[3]);
        let old = std::mem::replace(&mut self.values[var as usize - 1], x);
        (old, x)
    }

    /// Rounds every valuation to the nearer of 0 and 1 (½ goes to true).
    pub fn rounded_assignment(&self) -> Assignment {
        let half = T::from(0.5).expect("representable");
        Assignment::new(self.values.iter().map(|&v| v >= half).collect())
    }
}

fn random_values<T: Float>(n: usize, mode: InitMode, rng: &mut SeededRng) -> Vec<T> {
    (0..n)
        .map(|_| {
            let v: f64 = match mode {
                InitMode::AllHalf => 0.5,
                InitMode::UniformBoolean => f64::from(u8::from(rng.random::<bool>())),
                InitMode::UniformS0 => rng.random(),
            };
            T::from(v).expect("representable")
        })
        .collect()
}

/// Coordinate ascent on the valuation of a clustered formula.
///
/// Variables are swept in order; after each sweep, a formula valuation that
/// rose by less than [`HILL_CLIMB_STALL_THRESHOLD`] without reaching 1
/// triggers a restart from uniform random valuations. The step budget counts
/// single-variable updates. When every clause reaches valuation 1 the rounded
/// valuations satisfy the clustered formula and are projected to the
/// original variables.
///
/// The first start follows `cfg.init_mode` (`s0` means uniform on `[0, 1]`
/// here). Reflection statistics do not apply and stay zero.
pub fn hill_climb<T: Float + Scalar>(cf: &ClusteredFormula, cfg: &SolverConfig) -> Result<SolverResult, SolverError> {
    cfg.validate()?;
    let formula = cf.formula();
    let n = formula.num_vars();
    let budget = cfg.budget(Algorithm::HillClimb, n, formula.num_clauses());
    let mut rng = rng_from_seed(cfg.seed);
    let mut state = HillClimbState::<T>::new(formula, random_values(n, cfg.init_mode, &mut rng))?;
    let mut trace = cfg.record_trace.then(Vec::new);
    let slack = T::from(MONOTONICITY_SLACK).expect("representable");
    let stall = T::from(HILL_CLIMB_STALL_THRESHOLD).expect("representable");
    let has_empty_clause = formula.clauses().iter().any(|c| c.is_empty());

    let mut steps = 0u64;
    let mut restarts_used = 1;
    let mut previous = state.expression_valuation();
    let solved = loop {
        if state.all_satisfied() {
            break true;
        }
        if steps >= budget || has_empty_clause {
            break false;
        }
        for var in 1..=n as u32 {
            if steps >= budget {
                break;
            }
            let before = if cfg.check_invariants { Some(state.expression_valuation()) } else { None };
            let (old, new) = state.update(var);
            steps += 1;
            if let Some(before) = before {
                let after = state.expression_valuation();
                if after < before - slack {
                    return Err(SolverError::InvariantViolated(format!(
                        "valuation fell from {:?} to {:?} updating x{var}",
                        before, after
                    )));
                }
            }
            if let Some(t) = trace.as_mut() {
                let direction = if new > old { 1 } else if new < old { -1 } else { 0 };
                t.push(TraceStep { clause: None, var, direction });
            }
        }
        let total = state.expression_valuation();
        if total - previous < stall && !state.all_satisfied() && steps < budget {
            state.set_values(random_values(n, InitMode::UniformS0, &mut rng));
            restarts_used += 1;
            previous = state.expression_valuation();
        } else {
            previous = total;
        }
    };

    let outcome = if solved {
        let a_star = state.rounded_assignment();
        let a_star = match verified(formula, a_star)? {
            Outcome::Sat(a) => a,
            Outcome::Exhausted => unreachable!(),
        };
        Outcome::Sat(project_assignment(cf, &a_star)?)
    } else {
        Outcome::Exhausted
    };
    Ok(SolverResult {
        outcome,
        steps_used: steps,
        restarts_used,
        reflections: ReflectionStats::default(),
        trace,
        final_hamming: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{evaluate, generate_planted_3sat};
    use crate::transform::cluster_expression;

    #[test]
    fn already_satisfied_accepts_immediately() {
        let e = CnfFormula::from_dimacs_clauses(3, &[&[1, 2, 3]]).unwrap();
        let cf = cluster_expression(&e).unwrap();
        let cfg = SolverConfig { init_mode: InitMode::UniformBoolean, seed: 0, ..Default::default() };
        // find a seed whose random boolean start satisfies the clause
        let r = (0..16)
            .map(|seed| hill_climb::<f64>(&cf, &SolverConfig { seed, ..cfg.clone() }).unwrap())
            .find(|r| r.steps_used == 0)
            .unwrap();
        assert!(r.outcome.is_sat());
    }

    #[test]
    fn unit_clause_is_linear() {
        let f = CnfFormula::from_dimacs_clauses(1, &[&[1]]).unwrap();
        let mut state = HillClimbState::new(&f, vec![0.25f64]).unwrap();
        assert_eq!(state.local_polynomial(1), [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(state.update(1), (0.25, 1.0));
    }

    #[test]
    fn cluster_cubic_peaks_at_two_thirds() {
        // (x ∨ α ∨ β) ∧ (x ∨ ¬γ) ∧ (¬x ∨ θ), x = 1, α..θ = 2..5, all others 0
        // except γ = 1 so that v(¬γ) = 0
        let f = CnfFormula::from_dimacs_clauses(5, &[&[1, 2, 3], &[1, -4], &[-1, 5]]).unwrap();
        let mut state = HillClimbState::new(&f, vec![0.1, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let c = state.local_polynomial(1);
        assert!(c.iter().zip([0.0, 0.0, 1.0, -1.0]).all(|(a, b)| (a - b).abs() < 1e-15), "{c:?}");
        let (_, x) = state.update(1);
        assert!((x - 2.0 / 3.0).abs() < 1e-12);
        assert!((state.expression_valuation() - 4.0 / 27.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unclustered_input() {
        let f = CnfFormula::from_dimacs_clauses(3, &[&[1, 2, 3], &[1, -2, 3], &[1, 2, -3], &[-1, 2, 3]]).unwrap();
        assert!(matches!(HillClimbState::new(&f, vec![0.5; 3]), Err(SolverError::Config(_))));
    }

    #[test]
    fn monotone_and_sound_on_planted_instances() {
        for seed in 0..10 {
            let (e, _) = generate_planted_3sat(10, 30, seed).unwrap();
            let cf = cluster_expression(&e).unwrap();
            let cfg = SolverConfig { seed, check_invariants: true, max_steps: Some(50_000), ..Default::default() };
            let r = hill_climb::<f64>(&cf, &cfg).unwrap();
            if let Outcome::Sat(a) = &r.outcome {
                assert!(evaluate(&e, a).unwrap().satisfied);
            }
            assert_eq!(r, hill_climb::<f64>(&cf, &cfg).unwrap());
        }
    }

    #[test]
    fn runs_in_single_precision() {
        let (e, _) = generate_planted_3sat(8, 20, 1).unwrap();
        let cf = cluster_expression(&e).unwrap();
        let cfg = SolverConfig { max_steps: Some(20_000), ..Default::default() };
        let r = hill_climb::<f32>(&cf, &cfg).unwrap();
        if let Outcome::Sat(a) = &r.outcome {
            assert!(evaluate(&e, a).unwrap().satisfied);
        }
    }
}
