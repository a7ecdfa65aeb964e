//! The Solve-Select-Scale continuation loop.
//!
//! One sweep alternates three steps while the coupling weight `eta` grows
//! geometrically from `eta_start` to `eta_end`:
//!
//! 1. SOLVE — ridge update of the dense iterate `x` given `c`,
//! 2. SELECT — soft support-size estimate `rho` from the residual
//!    correlation,
//! 3. SCALE — rebuild `c` from the top-`rho` magnitudes of `x`, zeroing
//!    everything else.
//!
//! `c` starts as the all-ones vector. As `eta -> infinity` the coupling
//! forces `x -> c`, so the sweep ends with a `rho`-sparse `c` and a dense
//! `x` glued to it.
//!
//! The selection rule reads an absolutely scaled correlation
//! (`1 + c^T A^T (A x - b)/2` against a rounding threshold of one-half),
//! so the measurement scale matters. By default the solver canonicalizes
//! the instance so the mean squared column norm of `A` equals the row
//! count, which is the scale of an unnormalized Gaussian ensemble; the
//! signal-space iterates `x` and `c` are unaffected. Disable with
//! [`SolverConfig::canonical_scaling`] to run on the raw instance.

mod problem;
mod steps;

pub use problem::{EigenFactorization, Problem};
pub use steps::{
    restore_c, scale_c_hypersphere, scale_c_per_component, select_rho, select_rho_raw,
    sort_magnitudes, x_update, x_update_fast, SortedSignal,
};

use std::time::Instant;

use ndarray::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;

/// How the SCALE step maps sorted magnitudes into `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CMode {
    /// Largest component matched exactly, the rest solve the per-component
    /// quadratic `c (c - x_i) = 1/eta`. The default.
    #[default]
    PerComponent,
    /// Uniform stretch of the support onto the KKT hypersphere.
    Hypersphere,
}

/// Stopping criterion for the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Run the full `eta` schedule.
    #[default]
    EtaSchedule,
    /// Additionally halt as soon as `||A x - b||^2 < sigma^2`; requires the
    /// problem to carry its noise variance.
    ResidualBelowSigma,
}

/// Why a sweep ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    EtaSchedule,
    ResidualBelowSigma,
    MaxIterations,
}

/// Continuation schedule and mode switches for one solve run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub eta_start: f64,
    pub eta_end: f64,
    /// Multiplicative growth: `eta <- (1 + epsilon) eta` each iteration.
    pub epsilon: f64,
    pub c_mode: CMode,
    pub stop: StopRule,
    /// Hard safety cap independent of the eta schedule.
    pub max_iterations: usize,
    /// Accepted normal-equation residual for the ridge solves, relative to
    /// `1 + ||A^T b||`.
    pub ridge_tolerance: f64,
    /// Rescale the instance so mean squared column norm equals the row
    /// count before sweeping. Signal-space outputs are unaffected.
    pub canonical_scaling: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        // ~1500 iterations: (1 + 0.0186)^1500 ~ 1e12.
        Self {
            eta_start: 1.0,
            eta_end: 1e12,
            epsilon: 0.0186,
            c_mode: CMode::PerComponent,
            stop: StopRule::EtaSchedule,
            max_iterations: 5000,
            ridge_tolerance: 1e-8,
            canonical_scaling: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_start > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eta_start must be positive, got {}",
                self.eta_start
            )));
        }
        if !(self.eta_end > self.eta_start) {
            return Err(Error::InvalidArgument(format!(
                "eta_end ({}) must exceed eta_start ({})",
                self.eta_end, self.eta_start
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be >= 1".into()));
        }
        let steps = (self.eta_end / self.eta_start).ln() / self.epsilon.ln_1p();
        if steps.ceil() as usize > self.max_iterations {
            return Err(Error::InvalidArgument(format!(
                "schedule needs {} iterations to reach eta_end but max_iterations is {}",
                steps.ceil(),
                self.max_iterations
            )));
        }
        Ok(())
    }

    /// Number of iterations the schedule runs when no other rule fires.
    pub fn schedule_length(&self) -> usize {
        ((self.eta_end / self.eta_start).ln() / self.epsilon.ln_1p()).ceil() as usize
    }
}

/// One completed iteration, as recorded in the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub eta: f64,
    pub rho: usize,
    /// `||A x - b||_2` at the original problem scale.
    pub residual: f64,
    /// Surrogate cost over the nonzero entries of `c`; absent when the
    /// scale step left no nonzero entries to evaluate.
    pub cost: Option<f64>,
    pub elapsed_seconds: f64,
}

/// Per-iteration records of a sweep.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual)
    }
}

/// Result of a sweep: the dense iterate, the sparse auxiliary vector, the
/// full trace, and why the loop stopped.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x: Array1<f64>,
    pub c: Array1<f64>,
    pub trace: Trace,
    pub stop_reason: StopReason,
}

/// Snapshot handed to an iteration observer, at the solver's internal
/// (canonicalized) scale. `c_input` is the vector the ridge solve used;
/// `c_output` is the result of the SCALE step.
pub struct IterationEvent<'a> {
    pub iteration: usize,
    pub eta: f64,
    pub raw_rho: f64,
    pub rho: usize,
    pub x: &'a Array1<f64>,
    pub c_input: &'a Array1<f64>,
    pub c_output: &'a Array1<f64>,
    pub sorted: &'a SortedSignal,
    /// Residual at the original problem scale.
    pub residual: f64,
}

/// Run the continuation sweep with the given config.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<SolveOutcome> {
    solve_with_observer(problem, config, |_| {})
}

/// [`solve`] with a per-iteration callback, used by tests and diagnostics
/// to check the loop's invariants in place.
pub fn solve_with_observer<F>(
    problem: &Problem,
    config: &SolverConfig,
    mut observer: F,
) -> Result<SolveOutcome>
where
    F: FnMut(&IterationEvent<'_>),
{
    config.validate()?;
    let sigma_sq = match config.stop {
        StopRule::EtaSchedule => None,
        StopRule::ResidualBelowSigma => Some(problem.noise_variance.ok_or_else(|| {
            Error::InvalidArgument(
                "residual-below-sigma stopping requires the problem's noise variance".into(),
            )
        })?),
    };

    let m = problem.rows();
    let n = problem.cols();

    let tau = if config.canonical_scaling {
        let mean_col_sq = problem.a.mapv(|v| v * v).sum() / n as f64;
        (m as f64 / mean_col_sq).sqrt()
    } else {
        1.0
    };
    let a = problem.a.mapv(|v| tau * v);
    let b = problem.b.mapv(|v| tau * v);

    let factorization = EigenFactorization::new(&a)?;
    let eigvecs = &factorization.eigenvectors;
    let eigvals = &factorization.eigenvalues;
    let atb = a.t().dot(&b);
    let projected_atb = eigvecs.t().dot(&atb);

    let mut c = Array1::from_elem(n, 1.0);
    let mut eta = config.eta_start;
    let mut iteration = 0usize;
    let mut trace = Trace::default();
    let mut stop_reason = StopReason::EtaSchedule;
    let started = Instant::now();

    while eta < config.eta_end {
        if iteration >= config.max_iterations {
            stop_reason = StopReason::MaxIterations;
            break;
        }

        // SOLVE: x = L (Lambda + 2 eta)^{-1} L^T (A^T b + 2 eta c), with
        // L^T c accumulated over the nonzero entries of c only.
        let mut w = Array1::zeros(n);
        for (j, &cj) in c.iter().enumerate() {
            if cj != 0.0 {
                w.scaled_add(2.0 * eta * cj, &eigvecs.row(j));
            }
        }
        w += &projected_atb;
        ndarray::Zip::from(&mut w)
            .and(eigvals)
            .for_each(|wi, lam| *wi /= lam + 2.0 * eta);
        let x = eigvecs.dot(&w);

        let residual_vec = a.dot(&x) - &b;
        let residual_internal = residual_vec.dot(&residual_vec).sqrt();
        let residual = residual_internal / tau;
        if !residual.is_finite() {
            return Err(Error::Numeric(format!(
                "residual diverged at iteration {iteration} (eta = {eta:.3e})"
            )));
        }

        // SELECT: rho = clamp(round(1 + c^T A^T (A x - b) / 2), 1, n).
        let correlation = a.t().dot(&residual_vec);
        let raw_rho = 1.0 + c.dot(&correlation) / 2.0;
        if !raw_rho.is_finite() {
            return Err(Error::Numeric(format!(
                "support estimate diverged at iteration {iteration} (eta = {eta:.3e})"
            )));
        }
        let rho = steps::clamp_rho(raw_rho, n);

        // SCALE: top-rho magnitudes of x into c, everything else zeroed.
        let sorted = sort_magnitudes(x.view());
        let scaled = match config.c_mode {
            CMode::PerComponent => scale_c_per_component(sorted.magnitudes.view(), rho, eta)?,
            CMode::Hypersphere => {
                if sorted.magnitudes.iter().take(rho).all(|v| *v == 0.0) {
                    // Nothing to stretch; keep the window empty this pass.
                    Array1::zeros(n)
                } else {
                    scale_c_hypersphere(sorted.magnitudes.view(), rho, eta)?
                }
            }
        };
        let c_next = restore_c(scaled.view(), &sorted)?;

        let nonzeros: Vec<f64> = c_next.iter().copied().filter(|v| *v != 0.0).collect();
        let cost = if nonzeros.is_empty() {
            None
        } else {
            metrics::surrogate_cost(Array1::from_vec(nonzeros).view()).ok()
        };

        trace.records.push(TraceRecord {
            iteration,
            eta,
            rho,
            residual,
            cost,
            elapsed_seconds: started.elapsed().as_secs_f64(),
        });

        observer(&IterationEvent {
            iteration,
            eta,
            raw_rho,
            rho,
            x: &x,
            c_input: &c,
            c_output: &c_next,
            sorted: &sorted,
            residual,
        });

        c = c_next;
        iteration += 1;

        if let Some(sigma_sq) = sigma_sq {
            if residual * residual < sigma_sq {
                stop_reason = StopReason::ResidualBelowSigma;
                return Ok(SolveOutcome {
                    x,
                    c,
                    trace,
                    stop_reason,
                });
            }
        }

        eta *= 1.0 + config.epsilon;
        if eta >= config.eta_end {
            return Ok(SolveOutcome {
                x,
                c,
                trace,
                stop_reason,
            });
        }
    }

    // Loop never ran (degenerate schedule) or hit the iteration cap; redo a
    // final ridge solve so x matches the returned c.
    let x = x_update_fast(&factorization, a.view(), b.view(), c.view(), eta.max(config.eta_start))?;
    Ok(SolveOutcome {
        x,
        c,
        trace,
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_problem(n: usize, k: usize, m: usize, seed: u64) -> (Problem, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Array2::from_shape_fn((m, n), |_| rng.sample::<f64, _>(StandardNormal));
        let mut support: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = rng.random_range(i..n);
            support.swap(i, j);
        }
        support.truncate(k);
        let mut truth = Array1::zeros(n);
        for &i in &support {
            let mag = rng.random_range(0.5..1.0);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            truth[i] = mag * sign;
        }
        let b = a.dot(&truth);
        support.sort_unstable();
        (
            Problem::with_truth(a, b, Some(truth), None).unwrap(),
            support,
        )
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.eta_start = 0.0;
        assert!(cfg.validate().is_err());
        cfg.eta_start = 10.0;
        cfg.eta_end = 1.0;
        assert!(cfg.validate().is_err());
        cfg.eta_end = 1e12;
        cfg.epsilon = 0.0186;
        cfg.max_iterations = 10; // schedule needs ~1500
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn default_schedule_runs_about_1500_iterations() {
        let cfg = SolverConfig::default();
        let len = cfg.schedule_length();
        assert!((1450..=1550).contains(&len), "schedule length {len}");
    }

    #[test]
    fn sweep_invariants_small_gaussian() {
        let (problem, _) = gaussian_problem(40, 3, 24, 21);
        let config = SolverConfig::default();
        let mut violations = 0usize;
        let outcome = solve_with_observer(&problem, &config, |ev| {
            // Sign consistency and prefix-support: the nonzeros of c sit
            // exactly on the rho largest magnitudes of x.
            let nz: Vec<usize> = ev
                .c_output
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, _)| i)
                .collect();
            let window: std::collections::BTreeSet<usize> =
                ev.sorted.order[..ev.rho].iter().copied().collect();
            for &i in &nz {
                if !window.contains(&i) {
                    violations += 1;
                }
                if ev.x[i] * ev.c_output[i] < 0.0 {
                    violations += 1;
                }
            }
            if nz.len() > ev.rho {
                violations += 1;
            }
        })
        .unwrap();
        assert_eq!(violations, 0);
        assert_eq!(outcome.stop_reason, StopReason::EtaSchedule);
        // One record per completed iteration, indices strictly increasing.
        for (i, rec) in outcome.trace.records.iter().enumerate() {
            assert_eq!(rec.iteration, i);
        }
        assert_eq!(outcome.trace.len(), config.schedule_length());
        // c is sparse; x is glued to it at the end of the schedule.
        let nnz = outcome.c.iter().filter(|v| **v != 0.0).count();
        assert!(nnz < 40);
    }

    #[test]
    fn sweep_is_deterministic() {
        let (problem, _) = gaussian_problem(30, 3, 20, 22);
        let config = SolverConfig::default();
        let a = solve(&problem, &config).unwrap();
        let b = solve(&problem, &config).unwrap();
        assert_eq!(a.c.to_vec(), b.c.to_vec());
        assert_eq!(a.x.to_vec(), b.x.to_vec());
        assert_eq!(a.trace.len(), b.trace.len());
        for (ra, rb) in a.trace.records.iter().zip(b.trace.records.iter()) {
            assert_eq!(ra.rho, rb.rho);
            assert_eq!(ra.residual, rb.residual);
        }
    }

    #[test]
    fn ridge_solves_satisfy_normal_equations_throughout() {
        let (problem, _) = gaussian_problem(25, 2, 18, 23);
        let config = SolverConfig {
            eta_start: 1.0,
            eta_end: 1e4,
            ..SolverConfig::default()
        };
        // Rebuild the canonical scale the solver uses internally.
        let m = problem.rows() as f64;
        let n = problem.cols() as f64;
        let tau = (m / (problem.a.mapv(|v| v * v).sum() / n)).sqrt();
        let a = problem.a.mapv(|v| tau * v);
        let b = problem.b.mapv(|v| tau * v);
        let atb_norm = {
            let atb = a.t().dot(&b);
            atb.dot(&atb).sqrt()
        };
        let mut worst: f64 = 0.0;
        solve_with_observer(&problem, &config, |ev| {
            let lhs = a.t().dot(&(a.dot(ev.x) - &b))
                - (ev.c_input - ev.x).mapv(|v| 2.0 * ev.eta * v);
            worst = worst.max(lhs.dot(&lhs).sqrt());
        })
        .unwrap();
        assert!(
            worst <= config.ridge_tolerance * (1.0 + atb_norm),
            "worst normal-equation residual {worst}"
        );
    }

    #[test]
    fn subproblem_objective_descends_in_x() {
        // For fixed (c, eta) the new x minimizes the strictly convex ridge
        // objective, so it cannot exceed the previous x's value.
        let (problem, _) = gaussian_problem(20, 2, 14, 24);
        let config = SolverConfig {
            eta_start: 0.5,
            eta_end: 1e6,
            ..SolverConfig::default()
        };
        let m = problem.rows() as f64;
        let n = problem.cols() as f64;
        let tau = (m / (problem.a.mapv(|v| v * v).sum() / n)).sqrt();
        let a = problem.a.mapv(|v| tau * v);
        let b = problem.b.mapv(|v| tau * v);
        let objective = |x: &Array1<f64>, c: &Array1<f64>, eta: f64| {
            let r = a.dot(x) - &b;
            let d = c - x;
            0.5 * r.dot(&r) + eta * d.dot(&d)
        };
        let mut prev_x: Option<Array1<f64>> = None;
        let mut failures = 0usize;
        solve_with_observer(&problem, &config, |ev| {
            if let Some(px) = &prev_x {
                let new_val = objective(ev.x, ev.c_input, ev.eta);
                let old_val = objective(px, ev.c_input, ev.eta);
                if new_val > old_val * (1.0 + 1e-10) + 1e-12 {
                    failures += 1;
                }
            }
            prev_x = Some(ev.x.clone());
        })
        .unwrap();
        assert_eq!(failures, 0);
    }

    #[test]
    fn sigma_stop_requires_noise_variance() {
        let (problem, _) = gaussian_problem(20, 2, 14, 25);
        let config = SolverConfig {
            stop: StopRule::ResidualBelowSigma,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve(&problem, &config),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn sigma_stop_halts_with_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let (m, n) = (30, 50);
        let a = Array2::from_shape_fn((m, n), |_| rng.sample::<f64, _>(StandardNormal));
        let mut truth = Array1::zeros(n);
        truth[7] = 0.9;
        truth[23] = -0.6;
        let sigma_sq = 0.01;
        let noise =
            Array1::from_shape_fn(m, |_| rng.sample::<f64, _>(StandardNormal))
                .mapv(|v| v * (sigma_sq / m as f64).sqrt());
        let b = a.dot(&truth) + &noise;
        let problem = Problem::with_truth(a, b, Some(truth), Some(sigma_sq)).unwrap();
        let config = SolverConfig {
            stop: StopRule::ResidualBelowSigma,
            ..SolverConfig::default()
        };
        let outcome = solve(&problem, &config).unwrap();
        if outcome.stop_reason == StopReason::ResidualBelowSigma {
            let r = outcome.trace.final_residual().unwrap();
            assert!(r * r < sigma_sq, "halted with residual^2 {} >= {}", r * r, sigma_sq);
        }
    }
}
