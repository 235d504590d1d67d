//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Reference values come from test-local oracles (naive matrix
//! arithmetic, a small DPLL solver, direct clause counting) rather than from
//! the library under test.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng;

use valsat::bench::{csv_string, fit_scaling, run_experiment, summarize_sizes, ExperimentSpec, ResolutionRule};
use valsat::cnf::{evaluate, generate_planted_3sat, generate_random_3sat};
use valsat::markov::{
    a3_closed_form, first_passage_estimate, matrix_power, normal_first_passage_limit, period_and_classes,
    reflecting_walk_matrix, stationary_distribution, DenseMatrix, Parity,
};
use valsat::rng::rng_from_seed;
use valsat::solvers::{flip_class_masses, flip_probabilities, make_break, maximize_cubic_on_unit_interval, HillClimbState};
use valsat::transform::{cluster_expression, lift_assignment, project_assignment};
use valsat::{solve, Algorithm, Assignment, BigRational, Clause, CnfFormula, Literal, Outcome, SolverConfig};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let elapsed = start.elapsed();
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))?;
    Ok(elapsed)
}

// ---------------------------------------------------------------- oracles

/// Reflecting walk on 0..=M written out directly.
fn walk_matrix(m: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; m + 1]; m + 1];
    for (i, row) in a.iter_mut().enumerate() {
        if i == 0 {
            row[1] = 1.0;
        } else if i == m {
            row[m - 1] = 1.0;
        } else {
            row[i - 1] = 0.5;
            row[i + 1] = 0.5;
        }
    }
    a
}

fn naive_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            c[i][j] = (0..n).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// `a^k` by repeated multiplication.
fn naive_pow(a: &[Vec<f64>], k: u64) -> Vec<Vec<f64>> {
    let mut p = a.to_vec();
    for _ in 1..k {
        p = naive_mul(&p, a);
    }
    p
}

/// `a^k` by binary powering, for large `k`.
fn square_pow(a: &[Vec<f64>], mut k: u64) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut result: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let mut base = a.to_vec();
    while k > 0 {
        if k & 1 == 1 {
            result = naive_mul(&result, &base);
        }
        base = naive_mul(&base, &base);
        k >>= 1;
    }
    result
}

fn max_diff(a: &DenseMatrix<f64>, b: &[Vec<f64>]) -> f64 {
    b.iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, v)| (i, j, v)))
        .map(|(i, j, v)| (a.get(i, j) - v).abs())
        .fold(0.0, f64::max)
}

fn stationary_oracle(m: usize) -> Vec<f64> {
    (0..=m).map(|i| if i == 0 || i == m { 0.5 / m as f64 } else { 1.0 / m as f64 }).collect()
}

fn clauses_of(f: &CnfFormula) -> Vec<Vec<i64>> {
    f.clauses().iter().map(|c| c.literals().iter().map(|l| l.to_dimacs()).collect()).collect()
}

fn holds(a: &[i8], lit: i64) -> Option<bool> {
    match a[lit.unsigned_abs() as usize] {
        0 => None,
        v => Some((v > 0) == (lit > 0)),
    }
}

fn dpll_rec(clauses: &[Vec<i64>], a: &mut Vec<i8>) -> bool {
    loop {
        let mut changed = false;
        for c in clauses {
            let mut open = None;
            let mut count = 0;
            let mut sat = false;
            for &l in c {
                match holds(a, l) {
                    Some(true) => {
                        sat = true;
                        break;
                    }
                    Some(false) => {}
                    None => {
                        count += 1;
                        open = Some(l);
                    }
                }
            }
            if sat {
                continue;
            }
            match (count, open) {
                (0, _) => return false,
                (1, Some(l)) => {
                    a[l.unsigned_abs() as usize] = if l > 0 { 1 } else { -1 };
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }
    let branch = clauses
        .iter()
        .filter(|c| !c.iter().any(|&l| holds(a, l) == Some(true)))
        .flat_map(|c| c.iter())
        .find(|&&l| holds(a, l).is_none());
    let Some(&lit) = branch else { return true };
    for value in [1i8, -1] {
        let saved = a.clone();
        a[lit.unsigned_abs() as usize] = value;
        if dpll_rec(clauses, a) {
            return true;
        }
        *a = saved;
    }
    false
}

/// Satisfying assignment by DPLL with unit propagation; free variables are
/// false.
fn dpll(f: &CnfFormula) -> Option<Assignment> {
    let mut a = vec![0i8; f.num_vars() + 1];
    dpll_rec(&clauses_of(f), &mut a).then(|| Assignment::new(a[1..].iter().map(|&v| v > 0).collect()))
}

fn satisfies(f: &CnfFormula, a: &Assignment) -> bool {
    clauses_of(f).iter().all(|c| c.iter().any(|&l| a.values()[l.unsigned_abs() as usize - 1] == (l > 0)))
}

fn unsat_count(f: &CnfFormula, a: &Assignment) -> i32 {
    clauses_of(f).iter().filter(|c| !c.iter().any(|&l| a.values()[l.unsigned_abs() as usize - 1] == (l > 0))).count()
        as i32
}

fn real_valuation(f: &CnfFormula, v: &[f64]) -> f64 {
    clauses_of(f)
        .iter()
        .map(|c| {
            1.0 - c
                .iter()
                .map(|&l| {
                    let x = v[l.unsigned_abs() as usize - 1];
                    1.0 - if l > 0 { x } else { 1.0 - x }
                })
                .product::<f64>()
        })
        .product()
}

// ---------------------------------------------------------------- criteria

fn c1_stationary() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for m in 1..=64u32 {
        let a = reflecting_walk_matrix::<f64>(m).map_err(|e| e.to_string())?;
        let pi = stationary_distribution(&a).map_err(|e| e.to_string())?.pi;
        let oracle = stationary_oracle(m as usize);
        let err = pi.iter().zip(&oracle).map(|(p, o)| (p - o).abs()).fold(0.0, f64::max);
        let w = walk_matrix(m as usize);
        let residual = (0..=m as usize)
            .map(|j| ((0..=m as usize).map(|i| pi[i] * w[i][j]).sum::<f64>() - pi[j]).abs())
            .fold(0.0, f64::max);
        ensure(err < 1e-10, || format!("M = {m}: max error {err:e}"))?;
        ensure(residual < 1e-10, || format!("M = {m}: |piA - pi| = {residual:e}"))?;
        worst = worst.max(err);
        worst_residual = worst_residual.max(residual);
    }
    let t = within_time(start, Duration::from_secs(5))?;
    Ok(format!("M = 1..64, max error {worst:e}, max residual {worst_residual:e}, {t:.2?}"))
}

fn c2_worked_examples() -> Check {
    let a1 = reflecting_walk_matrix::<BigRational>(1).map_err(|e| e.to_string())?;
    ensure(matrix_power(&a1, 2) == DenseMatrix::identity(2), || "M = 1: A^2 != I".into())?;
    let a2 = reflecting_walk_matrix::<BigRational>(2).map_err(|e| e.to_string())?;
    ensure(matrix_power(&a2, 3) == *a2.matrix(), || "M = 2: A^3 != A".into())?;
    let displayed = vec![vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0], vec![0.5, 0.0, 0.5]];
    let a2f = reflecting_walk_matrix::<f64>(2).map_err(|e| e.to_string())?;
    let err = max_diff(&matrix_power(&a2f, 2), &displayed);
    ensure(err < 1e-12, || format!("M = 2: A^2 off by {err:e}"))?;
    let pi = stationary_distribution(&a2).map_err(|e| e.to_string())?.pi;
    let quarter = BigRational::new(1.into(), 4.into());
    let half = BigRational::new(1.into(), 2.into());
    ensure(pi == vec![quarter.clone(), half, quarter], || format!("M = 2: pi = {pi:?}"))?;
    Ok("A^2 = I (M = 1); A^3 = A, A^2 displayed, pi = (1/4, 1/2, 1/4) (M = 2)".into())
}

fn c3_period() -> Check {
    for m in 1..=32u32 {
        let cyc = period_and_classes(&reflecting_walk_matrix::<BigRational>(m).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let even: Vec<usize> = (0..=m as usize).step_by(2).collect();
        let odd: Vec<usize> = (1..=m as usize).step_by(2).collect();
        ensure(cyc.period == 2, || format!("M = {m}: period {}", cyc.period))?;
        ensure(cyc.classes == vec![even, odd], || format!("M = {m}: classes {:?}", cyc.classes))?;
    }
    Ok("M = 1..32: period 2, S0 even levels, S1 odd levels".into())
}

fn c4_limits() -> Check {
    let mut worst: f64 = 0.0;
    for m in [2usize, 3, 4, 8] {
        let pi = stationary_oracle(m);
        let w = walk_matrix(m);
        for exponent in [10_000u64, 10_001] {
            let ours = square_pow(&w, exponent);
            let lib = matrix_power(&reflecting_walk_matrix::<f64>(m as u32).map_err(|e| e.to_string())?, exponent);
            for x in 0..=m {
                for y in 0..=m {
                    let reachable = (x as u64 + exponent + y as u64) % 2 == 0;
                    let expected = if reachable { 2.0 * pi[y] } else { 0.0 };
                    let err = (lib.get(x, y) - expected).abs().max((ours[x][y] - expected).abs());
                    ensure(err < 1e-8, || format!("M = {m}, A^{exponent}[{x}][{y}] off by {err:e}"))?;
                    worst = worst.max(err);
                }
            }
            if exponent % 2 == 0 {
                let p00 = *lib.get(0, 0);
                ensure((p00 - 1.0 / m as f64).abs() < 1e-8, || format!("M = {m}: p(0,0) = {p00}"))?;
                for i in (2..m).step_by(2) {
                    let pii = *lib.get(i, i);
                    ensure((pii - 2.0 / m as f64).abs() < 1e-8, || format!("M = {m}: p({i},{i}) = {pii}"))?;
                }
            }
        }
    }
    Ok(format!("M in {{2, 3, 4, 8}}, A^10000 and A^10001, max error {worst:e}"))
}

fn c5_a3() -> Check {
    let w = walk_matrix(4);
    let mut worst: f64 = 0.0;
    for k in 1..=20u32 {
        for (parity, power) in [(Parity::Odd, 2 * k - 1), (Parity::Even, 2 * k)] {
            let closed = a3_closed_form::<f64>(k, parity).map_err(|e| e.to_string())?;
            let err = max_diff(&closed, &naive_pow(&w, u64::from(power)));
            ensure(err < 1e-12, || format!("k = {k}, A^{power}: max error {err:e}"))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("k = 1..20, max error {worst:e}"))
}

fn c6_first_passage() -> Check {
    let reference = [
        (0.5, 0.157_299_207_050_285_13),
        (1.0, 0.317_310_507_862_914_1),
        (2.0, 0.479_500_122_186_953_46),
        (4.0, 0.617_075_077_451_973_8),
    ];
    let start = Instant::now();
    let mut lines = Vec::new();
    for (t, limit) in reference {
        let lib_limit = normal_first_passage_limit(t).map_err(|e| e.to_string())?;
        ensure((lib_limit - limit).abs() < 1e-14, || format!("t = {t}: limit {lib_limit} vs {limit}"))?;
        let est = first_passage_estimate(100, t, 100_000, 0).map_err(|e| e.to_string())?;
        let (p, se) = (est.probability(), est.std_error());
        let z = (p - limit) / se;
        ensure(z.abs() <= 3.0, || format!("t = {t}: estimate {p}, limit {limit}, z = {z:.2}"))?;
        lines.push(format!("t={t}: {p:.4} vs {limit:.4} (z {z:+.2})"));
    }
    let elapsed = within_time(start, Duration::from_secs(60))?;
    Ok(format!("{}, {elapsed:.2?}", lines.join("; ")))
}

fn all_clauses(n: u32) -> Vec<Clause> {
    let mut out = Vec::new();
    for a in 1..=n {
        for b in a + 1..=n {
            for c in b + 1..=n {
                for signs in 0..8u32 {
                    let lits = [a, b, c].iter().enumerate().map(|(i, &v)| Literal::new(v, signs >> i & 1 == 1)).collect();
                    out.push(Clause::new(lits).expect("distinct variables"));
                }
            }
        }
    }
    out
}

fn subsets(len: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..len {
        cur.push(i);
        subsets(len, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Equisatisfiability, solution transport both ways and the occurrence
/// pattern for one formula.
fn check_clustering(e: &CnfFormula) -> Result<bool, String> {
    let cf = cluster_expression(e).map_err(|err| err.to_string())?;
    let star = cf.formula();
    let sol_e = dpll(e);
    let sol_star = dpll(star);
    ensure(sol_e.is_some() == sol_star.is_some(), || format!("E and E* disagree on {:?}", clauses_of(e)))?;
    if let Some(a) = &sol_e {
        ensure(satisfies(e, a), || "oracle returned a non-solution".into())?;
        let lifted = lift_assignment(&cf, a).map_err(|err| err.to_string())?;
        ensure(satisfies(star, &lifted), || format!("lifted solution fails E* for {:?}", clauses_of(e)))?;
    }
    if let Some(b) = &sol_star {
        let projected = project_assignment(&cf, b).map_err(|err| err.to_string())?;
        ensure(satisfies(e, &projected), || format!("projected solution fails E for {:?}", clauses_of(e)))?;
    }
    let mut pos = vec![0usize; star.num_vars()];
    let mut neg = vec![0usize; star.num_vars()];
    for c in clauses_of(star) {
        for l in c {
            let i = l.unsigned_abs() as usize - 1;
            if l > 0 {
                pos[i] += 1;
            } else {
                neg[i] += 1;
            }
        }
    }
    for (v, occ) in cf.occurrences().iter().enumerate() {
        if occ.len() < 2 {
            continue;
        }
        for &o in occ {
            let (p, q) = (pos[o as usize - 1], neg[o as usize - 1]);
            ensure((p, q) == (2, 1) || (p, q) == (1, 2), || format!("x{}: occurrence {o} has +{p} -{q}", v + 1))?;
        }
    }
    Ok(sol_e.is_some())
}

fn c7_clustering() -> Check {
    let mut exhaustive = 0;
    let mut unsat = 0;
    for n in [3u32, 4] {
        let pool = all_clauses(n);
        for k in 0..=4 {
            let mut sets = Vec::new();
            subsets(pool.len(), k, 0, &mut Vec::new(), &mut sets);
            for set in sets {
                let e = CnfFormula::new(n as usize, set.iter().map(|&i| pool[i].clone()).collect())
                    .map_err(|err| err.to_string())?;
                if !check_clustering(&e)? {
                    unsat += 1;
                }
                exhaustive += 1;
            }
        }
    }
    let mut rng = rng_from_seed(7);
    let mut random_unsat = 0;
    for i in 0..200u64 {
        let n = rng.random_range(3..=12usize);
        let m = rng.random_range(1..=6 * n);
        let e = generate_random_3sat(n, m, 10_000 + i).map_err(|err| err.to_string())?;
        if !check_clustering(&e)? {
            random_unsat += 1;
        }
    }
    Ok(format!(
        "{exhaustive} exhaustive formulas ({unsat} unsatisfiable), 200 random with n <= 12 ({random_unsat} unsatisfiable)"
    ))
}

fn c8_hill_climb() -> Check {
    let mut updates = 0u64;
    let mut worst_drop: f64 = 0.0;
    for seed in 0..100u64 {
        let n = 5 + (seed % 11) as usize;
        let e = generate_random_3sat(n, 4 * n, 20_000 + seed).map_err(|err| err.to_string())?;
        let cf = cluster_expression(&e).map_err(|err| err.to_string())?;
        let star = cf.formula();
        let mut rng = rng_from_seed(seed);
        let init: Vec<f64> = (0..star.num_vars()).map(|_| rng.random()).collect();
        let mut state = HillClimbState::<f64>::new(star, init).map_err(|err| err.to_string())?;
        for _sweep in 0..10 {
            for var in 1..=star.num_vars() as u32 {
                let before = real_valuation(star, state.values());
                state.update(var);
                let after = real_valuation(star, state.values());
                ensure(after >= before - 1e-12, || format!("seed {seed}, x{var}: {before} -> {after}"))?;
                worst_drop = worst_drop.max(before - after);
                updates += 1;
            }
        }
    }
    let (x, fx) = maximize_cubic_on_unit_interval::<f64>(0.0, 0.0, 1.0, -1.0);
    ensure((x - 2.0 / 3.0).abs() < 1e-9 && (fx - 4.0 / 27.0).abs() < 1e-9, || format!("x^2 - x^3: ({x}, {fx})"))?;
    Ok(format!("{updates} updates on 100 instances, largest drop {worst_drop:e}; x^2 - x^3 peaks at ({x:.9}, {fx:.9})"))
}

fn c9_sparrow() -> Check {
    // (x ∨ α ∨ β) ∧ (x ∨ ¬γ) ∧ (¬x ∨ θ), x = 1
    let f = CnfFormula::from_dimacs_clauses(5, &[&[1, 2, 3], &[1, -4], &[-1, 5]]).map_err(|e| e.to_string())?;
    let (mut cases, mut majority_cases) = (0, 0);
    for code in 0u32..32 {
        let a = Assignment::new((0..5).map(|i| code >> i & 1 == 1).collect());
        let mut flipped = a.clone();
        flipped.flip(1);
        let delta = unsat_count(&f, &a) - unsat_count(&f, &flipped);
        ensure(make_break(&f, &a, 1).delta == delta, || format!("{code:05b}: make_break disagrees"))?;
        if !f.clause(0).is_satisfied_by(&a) {
            ensure(delta >= 0, || format!("{code:05b}: delta {delta}"))?;
            cases += 1;
        }
        // clauses where x has its majority polarity
        if !f.clause(0).is_satisfied_by(&a) || !f.clause(1).is_satisfied_by(&a) {
            ensure(delta >= 0, || format!("{code:05b}: delta {delta}"))?;
            majority_cases += 1;
        }
    }
    let mut checked = 0;
    for alpha in [0.01, 0.1, 0.3, 0.5, 0.9] {
        for n1 in 0..4usize {
            for n2 in 0..4usize {
                for n3 in 0..4usize {
                    let Some(p) = flip_probabilities(n1, n2, n3, alpha) else {
                        ensure(n1 + n2 + n3 == 0, || "no distribution for a nonempty candidate set".into())?;
                        continue;
                    };
                    let total = n1 as f64 * p[0] + n2 as f64 * p[1] + n3 as f64 * p[2];
                    ensure((total - 1.0).abs() < 1e-12, || format!("N = ({n1}, {n2}, {n3}), alpha {alpha}: {total}"))?;
                    let masses = flip_class_masses(n1, n2, n3, alpha).expect("nonempty");
                    for (mass, count) in masses.iter().zip([n1, n2, n3]) {
                        ensure(count > 0 || *mass == 0.0, || "mass on an empty class".into())?;
                    }
                    checked += 1;
                }
            }
        }
    }
    let p = flip_probabilities(2, 3, 4, 0.1).expect("nonempty");
    for (got, want) in p.iter().zip([0.05, 0.15, 0.1125]) {
        ensure((got - want).abs() < 1e-12, || format!("(2, 3, 4): {p:?}"))?;
    }
    Ok(format!(
        "delta >= 0 on all {cases} assignments with the 3-literal clause unsatisfied and all {majority_cases} with a majority-polarity clause unsatisfied; {checked} class-size cases sum to 1"
    ))
}

fn read_thresholds() -> Result<(f64, f64), String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/pilot/thresholds.toml");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let table: toml::Table = text.parse().map_err(|e| format!("thresholds: {e}"))?;
    let get = |key: &str| {
        table
            .get(key)
            .and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
            .ok_or_else(|| format!("thresholds: missing {key}"))
    };
    Ok((get("classic")?, get("valuation")?))
}

fn c10_solvers() -> Check {
    let start = Instant::now();
    let (classic_min, valuation_min) = read_thresholds()?;
    let mut solved = [0usize; 2];
    for seed in 0..100u64 {
        let (e, planted) = generate_planted_3sat(20, 80, seed).map_err(|err| err.to_string())?;
        let runs = [
            (Algorithm::Classic, SolverConfig { seed, restarts: 100, ..Default::default() }),
            (Algorithm::Valuation, SolverConfig { seed, resolution: 20, ..Default::default() }),
        ];
        for (i, (algo, cfg)) in runs.iter().enumerate() {
            let r = solve(*algo, &e, cfg, Some(&planted)).map_err(|err| format!("{algo} seed {seed}: {err}"))?;
            if let Outcome::Sat(a) = &r.outcome {
                ensure(satisfies(&e, a) && evaluate(&e, a).is_ok_and(|ev| ev.satisfied), || {
                    format!("{algo} seed {seed}: SAT verdict does not verify")
                })?;
                solved[i] += 1;
            }
        }
    }
    let (fc, fv) = (solved[0] as f64 / 100.0, solved[1] as f64 / 100.0);
    ensure(fc >= classic_min, || format!("classic solved {fc}, threshold {classic_min}"))?;
    ensure(fv >= valuation_min, || format!("valuation solved {fv}, threshold {valuation_min}"))?;
    let elapsed = within_time(start, Duration::from_secs(300))?;
    Ok(format!(
        "classic {fc} (threshold {classic_min}), valuation M=20 {fv} (threshold {valuation_min}), all SAT verdicts verified, {elapsed:.2?}"
    ))
}

fn sizes_report(results: &[valsat::CellResult]) -> String {
    summarize_sizes(results)
        .iter()
        .map(|s| format!("n={} {}/{}", s.n, s.solved, s.cells))
        .collect::<Vec<_>>()
        .join(", ")
}

fn slope_report(results: &[valsat::CellResult]) -> String {
    match fit_scaling(results) {
        Ok(fit) => format!("slope {:.3} (95% CI {:.3} .. {:.3})", fit.slope, fit.slope_ci.0, fit.slope_ci.1),
        Err(e) => format!("no slope ({e})"),
    }
}

fn c11_bench() -> Check {
    let spec = ExperimentSpec { resolution: ResolutionRule::EqualN, ..Default::default() };
    let results = run_experiment(&spec).map_err(|e| e.to_string())?;
    let library_csv = csv_string(&results).map_err(|e| e.to_string())?;
    ensure(results.len() == 100, || format!("{} cells", results.len()))?;
    ensure(library_csv.starts_with("algo,n,m,M,seed,solved,steps,restarts,wall_ms,pos_refl,neg_refl,final_hamming\n"), || {
        format!("header: {}", library_csv.lines().next().unwrap_or_default())
    })?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("bench.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_valsat"))
        .args(["bench", "--algo", "valuation", "--n", "10,20,30,40", "--M", "n", "--seeds", "25", "-o"])
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || format!("bench exited with {}", status.status))?;
    let cli_csv = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    ensure(cli_csv == library_csv, || "CLI and library CSV differ".into())?;
    let report = String::from_utf8_lossy(&status.stdout);
    ensure(report.contains("n,cells,solved"), || format!("no size table in report: {report}"))?;

    let rounded = ExperimentSpec { check_rounded: true, ..spec };
    let rounded_results = run_experiment(&rounded).map_err(|e| e.to_string())?;
    Ok(format!(
        "CSV identical across library and CLI runs; valuation walk solved {}; {}; with rounded acceptance solved {}; {}",
        sizes_report(&results),
        slope_report(&results),
        sizes_report(&rounded_results),
        slope_report(&rounded_results)
    ))
}

fn run_cli(args: &[&str]) -> Result<(Vec<u8>, Option<i32>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_valsat")).args(args).output().map_err(|e| e.to_string())?;
    Ok((out.stdout, out.status.code()))
}

fn c12_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cnf = dir.path().join("planted.cnf");
    let cnf_s = cnf.to_str().expect("utf-8 path");
    let (e, _) = generate_planted_3sat(12, 48, 3).map_err(|err| err.to_string())?;
    std::fs::write(&cnf, e.to_dimacs()).map_err(|err| err.to_string())?;
    let star = dir.path().join("star.cnf");
    let star_s = star.to_str().expect("utf-8 path");

    let invocations: Vec<Vec<&str>> = vec![
        vec!["generate", "--n", "20", "--m", "80", "--seed", "5", "--planted"],
        vec!["generate", "--n", "15", "--seed", "9"],
        vec!["solve", "--algo", "classic", "--seed", "4", "--restarts", "20", cnf_s],
        vec!["solve", "--algo", "valuation", "--M", "12", "--seed", "4", cnf_s],
        vec!["solve", "--algo", "valuation", "--M", "12", "--seed", "4", "--check-rounded", cnf_s],
        vec!["solve", "--algo", "hillclimb", "--seed", "4", cnf_s],
        vec!["solve", "--algo", "sparrow", "--seed", "4", cnf_s],
        vec!["transform", "-o", star_s, cnf_s],
        vec!["analyze-chain", "--M", "6", "--check", "stationary"],
        vec!["analyze-chain", "--check", "first-passage", "--r", "20", "--trials", "2000", "--seed", "11"],
        vec!["bench", "--algo", "classic", "--n", "10,12,14", "--seeds", "5", "--restarts", "10"],
    ];
    for args in &invocations {
        let first = run_cli(args)?;
        let star_first = std::fs::read(&star).ok();
        let second = run_cli(args)?;
        let star_second = std::fs::read(&star).ok();
        ensure(first == second, || format!("`valsat {}` output differs between runs", args.join(" ")))?;
        ensure(star_first == star_second, || format!("`valsat {}` file output differs", args.join(" ")))?;
        ensure(matches!(first.1, Some(0 | 1)), || format!("`valsat {}` exited with {:?}", args.join(" "), first.1))?;
    }
    Ok(format!("{} invocations, byte-identical stdout and files across two runs", invocations.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("stationary distributions", c1_stationary),
        ("worked examples", c2_worked_examples),
        ("cyclic decomposition", c3_period),
        ("convergence limits", c4_limits),
        ("closed forms for M = 4", c5_a3),
        ("first passage", c6_first_passage),
        ("clustering transform", c7_clustering),
        ("hill-climb monotonicity", c8_hill_climb),
        ("sparrow lemma", c9_sparrow),
        ("solver soundness and effectiveness", c10_solvers),
        ("bench scaling study", c11_bench),
        ("CLI determinism", c12_determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
