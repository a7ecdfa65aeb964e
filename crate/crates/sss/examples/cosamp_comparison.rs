//! CoSaMP needs a sparsity estimate; the solver does not.
//!
//! Runs CoSaMP across a sweep of sparsity estimates k on one noisy
//! instance and compares against the estimate-free solver.
//!
//! ```bash
//! cargo run --release -p sss --example cosamp_comparison
//! ```

use sss::baselines::{cosamp, CosampConfig};
use sss::harness::{evaluate, generate_problem, GeneratorSpec};
use sss::solver::{solve, SolverConfig};

fn main() {
    let spec = GeneratorSpec {
        n: 400,
        k: 10,
        m: 200,
        noise_variance: 0.5,
        seed: 11,
        amplitude_range: (0.5, 1.0),
    };
    let problem = generate_problem(&spec).expect("valid spec");

    println!("true sparsity k = {}", spec.k);
    println!("method          s(rec)/s(truth)   support exact   ||Ax-b||");

    for k in [5, 10, 20, 40, 80] {
        let config = CosampConfig {
            k,
            residual_tolerance: spec.noise_variance.sqrt(),
            ..CosampConfig::default()
        };
        let (x, iters) = cosamp(&problem, &config).expect("cosamp");
        let ev = evaluate(&problem, x.view()).expect("evaluate");
        println!(
            "cosamp k={k:<4}   {:>13.2}   {:>13}   {:>8.2e}  ({iters} iters)",
            ev.ratio, ev.support_exact, ev.final_residual
        );
    }

    let outcome = solve(&problem, &SolverConfig::default()).expect("solve");
    let ev = evaluate(&problem, outcome.c.view()).expect("evaluate");
    println!(
        "sss (no k)      {:>13.2}   {:>13}   {:>8.2e}  ({} iters)",
        ev.ratio,
        ev.support_exact,
        ev.final_residual,
        outcome.trace.len()
    );
}
