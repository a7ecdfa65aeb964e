//! Monte-Carlo experiment harness: problem generation, grid execution,
//! metric aggregation, and result persistence.

mod generate;
pub mod report;

pub use generate::{generate_problem, GeneratorSpec};

use std::time::Instant;

use ndarray::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{cosamp, least_squares, CosampConfig};
use crate::error::{Error, Result};
use crate::metrics::sparsity_ratio;
use crate::solver::{solve, Problem, SolverConfig};

/// Reconstruction method attached to a grid entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodConfig {
    Sss(SolverConfig),
    Cosamp(CosampConfig),
    LeastSquares,
}

impl MethodConfig {
    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::Sss(_) => "sss",
            MethodConfig::Cosamp(_) => "cosamp",
            MethodConfig::LeastSquares => "least_squares",
        }
    }
}

/// Outcome of one trial, one line of the NDJSON results file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub spec: GeneratorSpec,
    pub method: String,
    /// Full resolved method configuration for the trial.
    pub method_params: serde_json::Value,
    pub round: usize,
    /// Norm-ratio of the reconstruction over the norm-ratio of the truth.
    pub s_hat_ratio: f64,
    pub support_exact: bool,
    pub final_residual: f64,
    pub runtime_seconds: f64,
    pub iterations: usize,
    /// Set when the trial failed; metric fields are zeroed in that case.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Metric fields extracted from one reconstruction.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub s_hat: f64,
    pub s_zero: f64,
    pub ratio: f64,
    pub support_exact: bool,
    pub final_residual: f64,
}

/// Support-recovery threshold relative to the reconstruction's largest
/// magnitude.
pub const SUPPORT_THRESHOLD_REL: f64 = 1e-8;

/// Compare a reconstruction against the problem's ground truth.
pub fn evaluate(problem: &Problem, reconstruction: ArrayView1<'_, f64>) -> Result<Evaluation> {
    let n = problem.cols();
    if reconstruction.len() != n {
        return Err(Error::ShapeMismatch {
            context: "reconstruction length vs signal dimension",
            expected: n,
            actual: reconstruction.len(),
        });
    }
    let truth = problem
        .truth
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("evaluation requires ground truth".into()))?;

    let s_hat = sparsity_ratio(reconstruction).unwrap_or(0.0);
    let s_zero = sparsity_ratio(truth.view()).unwrap_or(0.0);
    let ratio = if s_zero > 0.0 { s_hat / s_zero } else { 0.0 };

    let max_mag = reconstruction.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let threshold = SUPPORT_THRESHOLD_REL * max_mag;
    let support_exact = (0..n).all(|i| (reconstruction[i].abs() > threshold) == (truth[i] != 0.0));

    let residual_vec = problem.a.dot(&reconstruction) - &problem.b;
    let final_residual = residual_vec.dot(&residual_vec).sqrt();

    Ok(Evaluation {
        s_hat,
        s_zero,
        ratio,
        support_exact,
        final_residual,
    })
}

fn splitmix64(state: &mut u64) {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    *state = z ^ (z >> 31);
}

/// Per-trial seed: a stable mix of the base seed, the spec's shape, and
/// the round index. Pure arithmetic, never dependent on platform hashers.
pub fn derive_seed(base_seed: u64, spec: &GeneratorSpec, round: usize) -> u64 {
    let mut state = base_seed;
    for word in [
        spec.n as u64,
        spec.k as u64,
        spec.m as u64,
        spec.noise_variance.to_bits(),
        spec.amplitude_range.0.to_bits(),
        spec.amplitude_range.1.to_bits(),
        round as u64,
    ] {
        state ^= word;
        splitmix64(&mut state);
    }
    state
}

/// Run one trial: generate, reconstruct, evaluate.
pub fn run_trial(spec: &GeneratorSpec, method: &MethodConfig) -> ExperimentRecord {
    let method_params = serde_json::to_value(method).unwrap_or(serde_json::Value::Null);
    let started = Instant::now();
    let result = (|| -> Result<(Array1<f64>, usize, Problem)> {
        let problem = generate_problem(spec)?;
        match method {
            MethodConfig::Sss(config) => {
                let outcome = solve(&problem, config)?;
                let iterations = outcome.trace.len();
                Ok((outcome.c, iterations, problem))
            }
            MethodConfig::Cosamp(config) => {
                let (x, iterations) = cosamp(&problem, config)?;
                Ok((x, iterations, problem))
            }
            MethodConfig::LeastSquares => {
                let x = least_squares(problem.a.view(), problem.b.view())?;
                Ok((x, 1, problem))
            }
        }
    })();
    let runtime_seconds = started.elapsed().as_secs_f64();

    match result.and_then(|(reconstruction, iterations, problem)| {
        evaluate(&problem, reconstruction.view()).map(|ev| (ev, iterations))
    }) {
        Ok((ev, iterations)) => ExperimentRecord {
            spec: spec.clone(),
            method: method.name().to_string(),
            method_params,
            round: 0,
            s_hat_ratio: ev.ratio,
            support_exact: ev.support_exact,
            final_residual: ev.final_residual,
            runtime_seconds,
            iterations,
            error: None,
        },
        Err(err) => ExperimentRecord {
            spec: spec.clone(),
            method: method.name().to_string(),
            method_params,
            round: 0,
            s_hat_ratio: 0.0,
            support_exact: false,
            final_residual: 0.0,
            runtime_seconds,
            iterations: 0,
            error: Some(err.to_string()),
        },
    }
}

/// Run every (spec, method) grid entry for `rounds` rounds. Trials execute
/// in parallel with per-trial derived seeds; the returned records are in
/// deterministic (grid, round) order regardless of scheduling, and failed
/// trials are recorded rather than aborting the grid.
pub fn run_grid(
    grid: &[(GeneratorSpec, MethodConfig)],
    rounds: usize,
    base_seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("rounds must be >= 1".into()));
    }
    let mut tasks = Vec::with_capacity(grid.len() * rounds);
    for (entry_idx, (spec, method)) in grid.iter().enumerate() {
        for round in 0..rounds {
            let mut spec = spec.clone();
            spec.seed = derive_seed(base_seed, &spec, round);
            tasks.push((entry_idx, round, spec, method.clone()));
        }
    }
    let mut records: Vec<(usize, usize, ExperimentRecord)> = tasks
        .into_par_iter()
        .map(|(entry_idx, round, spec, method)| {
            let mut record = run_trial(&spec, &method);
            record.round = round;
            (entry_idx, round, record)
        })
        .collect();
    records.sort_by_key(|(entry_idx, round, _)| (*entry_idx, *round));
    Ok(records.into_iter().map(|(_, _, r)| r).collect())
}

/// Five-number summary of one numeric field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FieldSummary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

impl FieldSummary {
    /// Order-statistic summary; the median is the lower median for even
    /// counts, and the quartiles are the order statistics at floor
    /// `(len-1)/4` and `3(len-1)/4`.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let last = sorted.len() - 1;
        Some(Self {
            median: sorted[last / 2],
            q1: sorted[last / 4],
            q3: sorted[3 * last / 4],
            min: sorted[0],
            max: sorted[last],
        })
    }
}

/// Aggregated statistics for one (spec, method) group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub noise_variance: f64,
    pub method: String,
    pub trials: usize,
    pub failures: usize,
    pub support_exact_count: usize,
    pub s_hat_ratio: FieldSummary,
    pub final_residual: FieldSummary,
    pub runtime_seconds: FieldSummary,
    pub iterations: FieldSummary,
}

/// Per-group summary table over a record set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryTable {
    pub groups: Vec<GroupSummary>,
}

/// Group records by (n, k, m, noise, method) and summarize each numeric
/// field. Failed trials count toward `trials`/`failures` but are excluded
/// from the numeric summaries; groups with no successful trial are omitted.
pub fn summarize(records: &[ExperimentRecord]) -> SummaryTable {
    use std::collections::BTreeMap;
    type Key = (usize, usize, usize, u64, String);
    let mut buckets: BTreeMap<Key, Vec<&ExperimentRecord>> = BTreeMap::new();
    for record in records {
        let key = (
            record.spec.n,
            record.spec.k,
            record.spec.m,
            record.spec.noise_variance.to_bits(),
            record.method.clone(),
        );
        buckets.entry(key).or_default().push(record);
    }
    let mut groups = Vec::new();
    for ((n, k, m, noise_bits, method), bucket) in buckets {
        let ok: Vec<&&ExperimentRecord> =
            bucket.iter().filter(|r| r.error.is_none()).collect();
        let collect = |f: &dyn Fn(&ExperimentRecord) -> f64| -> Vec<f64> {
            ok.iter().map(|r| f(r)).collect()
        };
        let Some(ratio) = FieldSummary::from_values(&collect(&|r| r.s_hat_ratio)) else {
            continue;
        };
        groups.push(GroupSummary {
            n,
            k,
            m,
            noise_variance: f64::from_bits(noise_bits),
            method,
            trials: bucket.len(),
            failures: bucket.len() - ok.len(),
            support_exact_count: ok.iter().filter(|r| r.support_exact).count(),
            s_hat_ratio: ratio,
            final_residual: FieldSummary::from_values(&collect(&|r| r.final_residual)).unwrap(),
            runtime_seconds: FieldSummary::from_values(&collect(&|r| r.runtime_seconds)).unwrap(),
            iterations: FieldSummary::from_values(&collect(&|r| r.iterations as f64)).unwrap(),
        });
    }
    SummaryTable { groups }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec(seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            n: 30,
            k: 2,
            m: 18,
            noise_variance: 0.0,
            seed,
            amplitude_range: (0.5, 1.0),
        }
    }

    fn fast_solver() -> MethodConfig {
        MethodConfig::Sss(SolverConfig {
            eta_start: 1.0,
            eta_end: 1e6,
            epsilon: 0.1,
            ..SolverConfig::default()
        })
    }

    #[test]
    fn evaluate_truth_is_perfect() {
        let problem = generate_problem(&tiny_spec(1)).unwrap();
        let truth = problem.truth.clone().unwrap();
        let ev = evaluate(&problem, truth.view()).unwrap();
        assert_eq!(ev.ratio, 1.0);
        assert!(ev.support_exact);
        assert_eq!(ev.final_residual, 0.0);
    }

    #[test]
    fn evaluate_zero_reconstruction() {
        let problem = generate_problem(&tiny_spec(2)).unwrap();
        let zero = Array1::zeros(30);
        let ev = evaluate(&problem, zero.view()).unwrap();
        assert_eq!(ev.s_hat, 0.0);
        assert_eq!(ev.ratio, 0.0);
        assert!(!ev.support_exact);
    }

    #[test]
    fn grid_counts_and_distinct_seeds() {
        let grid = vec![(tiny_spec(0), fast_solver())];
        let records = run_grid(&grid, 3, 7).unwrap();
        assert_eq!(records.len(), 3);
        let seeds: std::collections::BTreeSet<u64> =
            records.iter().map(|r| r.spec.seed).collect();
        assert_eq!(seeds.len(), 3);
        for (i, r) in records.iter().enumerate() {
            assert_eq!(r.round, i);
            assert!(r.error.is_none(), "trial failed: {:?}", r.error);
        }
    }

    #[test]
    fn grid_rerun_is_deterministic_modulo_runtime() {
        let grid = vec![
            (tiny_spec(0), fast_solver()),
            (tiny_spec(0), MethodConfig::LeastSquares),
        ];
        let a = run_grid(&grid, 2, 11).unwrap();
        let b = run_grid(&grid, 2, 11).unwrap();
        assert_eq!(a.len(), b.len());
        for (ra, rb) in a.iter().zip(b.iter()) {
            assert_eq!(ra.spec.seed, rb.spec.seed);
            assert_eq!(ra.s_hat_ratio, rb.s_hat_ratio);
            assert_eq!(ra.support_exact, rb.support_exact);
            assert_eq!(ra.final_residual, rb.final_residual);
            assert_eq!(ra.iterations, rb.iterations);
        }
    }

    #[test]
    fn summarize_single_record_group() {
        let grid = vec![(tiny_spec(0), MethodConfig::LeastSquares)];
        let records = run_grid(&grid, 1, 3).unwrap();
        let table = summarize(&records);
        assert_eq!(table.groups.len(), 1);
        let g = &table.groups[0];
        assert_eq!(g.trials, 1);
        assert_eq!(g.s_hat_ratio.median, records[0].s_hat_ratio);
        assert_eq!(g.s_hat_ratio.min, g.s_hat_ratio.max);
    }

    #[test]
    fn lower_median_convention() {
        let s = FieldSummary::from_values(&[3.0, 1.0]).unwrap();
        assert_eq!(s.median, 1.0);
        let s = FieldSummary::from_values(&[5.0, 1.0, 3.0]).unwrap();
        assert_eq!(s.median, 3.0);
        assert!(FieldSummary::from_values(&[]).is_none());
    }

    #[test]
    fn derived_seeds_differ_across_fields() {
        let spec = tiny_spec(0);
        let mut other = spec.clone();
        other.m = 19;
        assert_ne!(derive_seed(1, &spec, 0), derive_seed(1, &other, 0));
        assert_ne!(derive_seed(1, &spec, 0), derive_seed(1, &spec, 1));
        assert_ne!(derive_seed(1, &spec, 0), derive_seed(2, &spec, 0));
    }
}
