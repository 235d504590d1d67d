//! Pilot run fixing the solve-rate thresholds of the desk-scale check.
//!
//! Runs classic Schöning (100 tries) and the valuation walk (M = 20) on 100
//! planted instances with n = 20, m = 80, seeds 1000..1100, disjoint from the
//! seeds the acceptance suite uses. The threshold is the lower end of the
//! Wilson score interval with z = 3 around the pilot fraction, rounded down
//! to a percent.
//!
//! ```text
//! cargo run --release -p valsat --example pilot > crates/core/pilot/thresholds.toml
//! ```

use rayon::prelude::*;
use valsat::cnf::generate_planted_3sat;
use valsat::solvers::{solve, Algorithm, SolverConfig};

const N: usize = 20;
const M_CLAUSES: usize = 80;
const SEEDS: std::ops::Range<u64> = 1000..1100;

fn fraction(algo: Algorithm, cfg: &SolverConfig) -> f64 {
    let solved = SEEDS
        .into_par_iter()
        .filter(|&seed| {
            let (formula, planted) = generate_planted_3sat(N, M_CLAUSES, seed).expect("valid sizes");
            let cfg = SolverConfig { seed, ..cfg.clone() };
            solve(algo, &formula, &cfg, Some(&planted)).expect("solver runs").outcome.is_sat()
        })
        .count();
    solved as f64 / (SEEDS.end - SEEDS.start) as f64
}

fn threshold(p: f64) -> f64 {
    let n = (SEEDS.end - SEEDS.start) as f64;
    let z2 = 9.0;
    let centre = p + z2 / (2.0 * n);
    let spread = 3.0 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lower = (centre - spread) / (1.0 + z2 / n);
    (lower.max(0.0) * 100.0 + 1e-9).floor() / 100.0
}

fn main() {
    let classic = fraction(Algorithm::Classic, &SolverConfig { restarts: 100, ..Default::default() });
    let walk_cfg = SolverConfig { resolution: 20, ..Default::default() };
    let walk = fraction(Algorithm::Valuation, &walk_cfg);
    let rounded = fraction(Algorithm::Valuation, &SolverConfig { check_rounded: true, ..walk_cfg });
    println!("# pilot: n = {N}, m = {M_CLAUSES}, seeds {}..{}", SEEDS.start, SEEDS.end);
    println!("# classic, 100 tries: solved fraction {classic}");
    println!("# valuation walk, M = 20: solved fraction {walk}");
    println!("# valuation walk, M = 20, rounded acceptance (informational): solved fraction {rounded}");
    println!("classic = {}", threshold(classic));
    println!("valuation = {}", threshold(walk));
}
