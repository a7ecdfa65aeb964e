//! Noisy measurements with the residual stopping rule.
//!
//! With noise in b the solver can halt as soon as ||Ax - b||^2 drops
//! below sigma^2 instead of sweeping the whole schedule.
//!
//! ```bash
//! cargo run --release -p sss --example noisy_stopping
//! ```

use sss::harness::{generate_problem, GeneratorSpec};
use sss::solver::{solve, SolverConfig, StopRule};

fn main() {
    let sigma_sq = 0.01;
    let spec = GeneratorSpec {
        n: 400,
        k: 10,
        m: 200,
        noise_variance: sigma_sq,
        seed: 3,
        amplitude_range: (0.5, 1.0),
    };
    let problem = generate_problem(&spec).expect("valid spec");

    for (label, stop) in [
        ("full schedule", StopRule::EtaSchedule),
        ("residual rule", StopRule::ResidualBelowSigma),
    ] {
        let config = SolverConfig {
            stop,
            ..SolverConfig::default()
        };
        let outcome = solve(&problem, &config).expect("solve");
        let r = outcome.trace.final_residual().unwrap();
        println!(
            "{label:>13}: {} iterations, stop {:?}, ||Ax-b||^2 = {:.4e} (sigma^2 = {sigma_sq})",
            outcome.trace.len(),
            outcome.stop_reason,
            r * r,
        );
    }
}
