//! A small Monte-Carlo grid through the harness API.
//!
//! Sweeps the measurement count, runs seeded trials in parallel, and
//! prints the per-group medians the charts are built from.
//!
//! ```bash
//! cargo run --release -p sss --example simulate_grid
//! ```

use sss::harness::{run_grid, summarize, GeneratorSpec, MethodConfig};
use sss::solver::SolverConfig;

fn main() {
    let grid: Vec<(GeneratorSpec, MethodConfig)> = [60, 90, 120, 150]
        .iter()
        .map(|&m| {
            (
                GeneratorSpec {
                    n: 300,
                    k: 9,
                    m,
                    noise_variance: 0.0,
                    seed: 0,
                    amplitude_range: (0.5, 1.0),
                },
                MethodConfig::Sss(SolverConfig::default()),
            )
        })
        .collect();

    let rounds = 9;
    let records = run_grid(&grid, rounds, 2024).expect("grid");
    let table = summarize(&records);

    println!("{} trials ({} per measurement count)\n", records.len(), rounds);
    println!("   m   median s-ratio   [q1, q3]         median residual");
    for g in &table.groups {
        println!(
            "{:>4}   {:>14.2}   [{:.2}, {:.2}]     {:>12.3e}",
            g.m, g.s_hat_ratio.median, g.s_hat_ratio.q1, g.s_hat_ratio.q3,
            g.final_residual.median
        );
    }
}
