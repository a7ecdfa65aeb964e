//! Reconstruct a small sparse signal and inspect the sweep.
//!
//! ```bash
//! cargo run --release -p sss --example solve_small
//! ```

use sss::harness::{evaluate, generate_problem, GeneratorSpec};
use sss::solver::{solve, SolverConfig};

fn main() {
    let spec = GeneratorSpec {
        n: 200,
        k: 8,
        m: 120,
        noise_variance: 0.0,
        seed: 42,
        amplitude_range: (0.5, 1.0),
    };
    let problem = generate_problem(&spec).expect("valid spec");
    let config = SolverConfig::default();
    let outcome = solve(&problem, &config).expect("solve");

    println!(
        "ran {} iterations, stop reason {:?}",
        outcome.trace.len(),
        outcome.stop_reason
    );
    println!(
        "final residual ||Ax - b|| = {:.3e}",
        outcome.trace.final_residual().unwrap()
    );

    let truth = problem.truth.as_ref().unwrap();
    let true_support: Vec<usize> = truth
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect();
    let mut recovered: Vec<(usize, f64)> = outcome
        .c
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect();
    recovered.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));

    println!("true support: {true_support:?}");
    println!("largest recovered entries (index, value):");
    for (i, v) in recovered.iter().take(12) {
        let marker = if truth[*i] != 0.0 { "true" } else { "spurious" };
        println!("  {i:>4}  {v:+.4}  [{marker}]");
    }

    let ev = evaluate(&problem, outcome.c.view()).expect("evaluate");
    println!(
        "s(rec)/s(truth) = {:.3}, support exact: {}",
        ev.ratio, ev.support_exact
    );
}
