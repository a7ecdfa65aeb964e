//! Solve-Select-Scale sparse recovery.
//!
//! Reconstructs a bounded sparse signal from linear measurements
//! `A x = b` without a prior sparsity estimate. Each iteration of the
//! continuation sweep solves a ridge system for the dense iterate,
//! selects a soft support size from the residual correlation, and scales
//! the top magnitudes into a sparse auxiliary vector, while the coupling
//! weight grows geometrically.
//!
//! The crate also ships the norm-ratio sparsity metric
//! `s(x) = ||x||_1^2 / ||x||_2^2` with its log-surrogate cost and
//! analytic derivatives ([`metrics`]), a CoSaMP baseline and dense least
//! squares ([`baselines`]), a deterministic Monte-Carlo experiment
//! harness ([`harness`]), and a small CLI (`sss`) over CSV/JSON files.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --release -p sss --example solve_small
//! cargo run --release -p sss --example metrics_tour
//! cargo run --release -p sss --example cosamp_comparison
//! ```

pub mod baselines;
pub mod cli;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod solver;

pub use error::{Error, Result};
