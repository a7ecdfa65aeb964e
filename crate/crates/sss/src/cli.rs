//! Command-line entry points: `solve` over CSV files, `simulate` for
//! Monte-Carlo grids, and `compare-cosamp` for the shared-instance method
//! comparison.
//!
//! Exit codes: 0 success, 2 usage or validation failure, 3 numeric
//! failure. No subcommand writes partial output on validation failure;
//! all files go through an atomic temp-file-and-rename.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::prelude::*;
use serde::Deserialize;

use crate::baselines::CosampConfig;
use crate::error::{Error, Result};
use crate::harness::report::{
    render_ndjson, render_summary_csv, render_trace_csv, svg_box_chart, svg_line_chart,
    svg_median_band_chart, write_atomic,
};
use crate::harness::{
    derive_seed, generate_problem, run_grid, summarize, GeneratorSpec, MethodConfig, SummaryTable,
};
use crate::metrics::sparsity_ratio;
use crate::solver::{solve, CMode, Problem, SolverConfig, StopRule};

#[derive(Debug, Parser)]
#[command(
    name = "sss",
    about = "Solve-Select-Scale sparse recovery over CSV/JSON files",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reconstruct a sparse signal from a measurement matrix and an
    /// observation vector stored as CSV.
    Solve(SolveArgs),
    /// Run a Monte-Carlo experiment grid from a JSON config document.
    Simulate(SimulateArgs),
    /// Run CoSaMP over a sweep of sparsity estimates against the solver on
    /// shared problem instances.
    CompareCosamp(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CModeArg {
    PerComponent,
    Hypersphere,
}

impl From<CModeArg> for CMode {
    fn from(v: CModeArg) -> Self {
        match v {
            CModeArg::PerComponent => CMode::PerComponent,
            CModeArg::Hypersphere => CMode::Hypersphere,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StopArg {
    Schedule,
    Sigma,
}

impl From<StopArg> for StopRule {
    fn from(v: StopArg) -> Self {
        match v {
            StopArg::Schedule => StopRule::EtaSchedule,
            StopArg::Sigma => StopRule::ResidualBelowSigma,
        }
    }
}

/// Solver flags shared by the subcommands; flags override config values.
#[derive(Debug, Args, Default, Clone)]
struct SolverFlags {
    #[arg(long)]
    eta_start: Option<f64>,
    #[arg(long)]
    eta_end: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    c_mode: Option<CModeArg>,
    #[arg(long, value_enum)]
    stop: Option<StopArg>,
    /// Noise energy sigma^2 for the residual stopping rule.
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

impl SolverFlags {
    fn apply(&self, mut config: SolverConfig) -> SolverConfig {
        if let Some(v) = self.eta_start {
            config.eta_start = v;
        }
        if let Some(v) = self.eta_end {
            config.eta_end = v;
        }
        if let Some(v) = self.epsilon {
            config.epsilon = v;
        }
        if let Some(v) = self.c_mode {
            config.c_mode = v.into();
        }
        if let Some(v) = self.stop {
            config.stop = v.into();
        }
        if let Some(v) = self.max_iters {
            config.max_iterations = v;
        }
        config
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Measurement matrix: CSV, row-major, no header.
    #[arg(long)]
    matrix: PathBuf,
    /// Observation vector: one value per line.
    #[arg(long)]
    vector: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    /// Output directory for the reconstruction and trace files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON config document defining the grid.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Worker threads for trial execution (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Run the CLI on the given argument list and return the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(err) => {
            // clap handles --help/--version as "errors" with exit code 0.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::CompareCosamp(args) => cmd_compare_cosamp(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Numeric(_) | Error::Linalg(_) => 3,
                _ => 2,
            }
        }
    }
}

fn env_seed() -> Option<u64> {
    std::env::var("SSS_SEED").ok().and_then(|v| v.parse().ok())
}

fn configure_jobs(jobs: Option<usize>) {
    if let Some(jobs) = jobs {
        // Fails if a global pool already exists (e.g. a second call in the
        // same process); the existing pool then stays in effect.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
}

// ---------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------

fn parse_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col_no, field) in line.split(',').enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "{}: row {}, column {}: not a number: {:?}",
                    path.display(),
                    line_no + 1,
                    col_no + 1,
                    field.trim()
                ))
            })?;
            row.push(value);
        }
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::InvalidArgument(format!(
                    "{}: ragged row {}: expected {} columns, found {}",
                    path.display(),
                    line_no + 1,
                    w,
                    row.len()
                )));
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    let m = rows.len();
    let n = width.ok_or_else(|| {
        Error::InvalidArgument(format!("{}: empty matrix file", path.display()))
    })?;
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((m, n), flat)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn parse_vector_file(path: &Path) -> Result<Array1<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        values.push(trimmed.parse::<f64>().map_err(|_| {
            Error::InvalidArgument(format!(
                "{}: line {}: not a number: {trimmed:?}",
                path.display(),
                line_no + 1
            ))
        })?);
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{}: empty vector file",
            path.display()
        )));
    }
    Ok(Array1::from_vec(values))
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let config = args.solver.apply(SolverConfig::default());
    config.validate()?;

    let a = parse_matrix_csv(&args.matrix)?;
    let b = parse_vector_file(&args.vector)?;
    let problem = Problem::with_truth(a, b, None, args.solver.sigma2)?;

    let outcome = solve(&problem, &config)?;

    fs::create_dir_all(&args.out)?;
    let mut reconstruction = String::new();
    for v in outcome.c.iter() {
        reconstruction.push_str(&v.to_string());
        reconstruction.push('\n');
    }
    write_atomic(&args.out.join("reconstruction.csv"), reconstruction.as_bytes())?;
    write_atomic(
        &args.out.join("trace.csv"),
        render_trace_csv(&outcome.trace).as_bytes(),
    )?;

    let rhos: Vec<usize> = outcome.trace.records.iter().map(|r| r.rho).collect();
    let rho_min = rhos.iter().min().copied().unwrap_or(0);
    let rho_max = rhos.iter().max().copied().unwrap_or(0);
    let rho_final = rhos.last().copied().unwrap_or(0);
    let s_hat = sparsity_ratio(outcome.c.view()).unwrap_or(0.0);
    println!(
        "iterations: {}  stop: {:?}",
        outcome.trace.len(),
        outcome.stop_reason
    );
    println!(
        "final residual: {:.6e}",
        outcome.trace.final_residual().unwrap_or(f64::NAN)
    );
    println!("rho: first {} / min {rho_min} / max {rho_max} / final {rho_final}",
        rhos.first().copied().unwrap_or(0));
    println!("sparsity ratio of reconstruction: {s_hat:.4}");
    Ok(())
}

// ---------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateDoc {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "default_rounds")]
    rounds: usize,
    specs: Vec<GeneratorSpec>,
    #[serde(default = "default_methods")]
    methods: Vec<String>,
    #[serde(default)]
    solver: Option<SolverConfig>,
    #[serde(default)]
    cosamp: Option<CosampConfig>,
    #[serde(default)]
    out: Option<PathBuf>,
    /// Dump the per-iteration trace of this many leading rounds of each
    /// solver grid entry.
    #[serde(default = "default_trace_trials")]
    trace_trials: usize,
}

fn default_rounds() -> usize {
    50
}

fn default_methods() -> Vec<String> {
    vec!["sss".to_string()]
}

fn default_trace_trials() -> usize {
    1
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn method_for(
    name: &str,
    solver: &SolverConfig,
    cosamp: &CosampConfig,
) -> Result<MethodConfig> {
    match name {
        "sss" => Ok(MethodConfig::Sss(solver.clone())),
        "cosamp" => Ok(MethodConfig::Cosamp(cosamp.clone())),
        "least_squares" => Ok(MethodConfig::LeastSquares),
        other => Err(Error::Config(format!(
            "unknown method {other:?} (expected sss, cosamp, or least_squares)"
        ))),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    configure_jobs(args.jobs);
    let doc: SimulateDoc = load_json(&args.config)?;
    let solver_config = args
        .solver
        .apply(doc.solver.clone().unwrap_or_default());
    solver_config.validate()?;
    let cosamp_config = doc.cosamp.clone().unwrap_or_default();
    let rounds = args.rounds.unwrap_or(doc.rounds);
    if rounds == 0 {
        return Err(Error::Config("rounds must be >= 1".into()));
    }
    if doc.specs.is_empty() {
        return Err(Error::Config("specs must not be empty".into()));
    }
    let seed = args.seed.or(doc.seed).or_else(env_seed).unwrap_or(0);
    let out = args.out.or(doc.out).unwrap_or_else(|| PathBuf::from("."));

    let mut grid = Vec::new();
    for spec in &doc.specs {
        let mut spec = spec.clone();
        if let Some(sigma2) = args.solver.sigma2 {
            spec.noise_variance = sigma2;
        }
        spec.validate()?;
        for method in &doc.methods {
            grid.push((spec.clone(), method_for(method, &solver_config, &cosamp_config)?));
        }
    }

    let records = run_grid(&grid, rounds, seed)?;
    let table = summarize(&records);

    fs::create_dir_all(&out)?;
    write_atomic(&out.join("records.ndjson"), render_ndjson(&records).as_bytes())?;
    write_atomic(&out.join("summary.csv"), render_summary_csv(&table).as_bytes())?;
    emit_ratio_charts(&out, &table)?;
    emit_traces(&out, &grid, doc.trace_trials, seed)?;

    let failures: usize = records.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{} records ({} failed trials) -> {}",
        records.len(),
        failures,
        out.display()
    );
    Ok(())
}

/// Median-and-quartile-band charts of the sparsity ratio against the
/// measurement count, one per (n, k, noise, method) family with at least
/// two m values.
fn emit_ratio_charts(out: &Path, table: &SummaryTable) -> Result<()> {
    use std::collections::BTreeMap;
    let mut families: BTreeMap<(usize, usize, u64, String), Vec<(f64, f64, f64, f64)>> =
        BTreeMap::new();
    for g in &table.groups {
        families
            .entry((g.n, g.k, g.noise_variance.to_bits(), g.method.clone()))
            .or_default()
            .push((
                g.m as f64,
                g.s_hat_ratio.q1,
                g.s_hat_ratio.median,
                g.s_hat_ratio.q3,
            ));
    }
    for ((n, k, noise_bits, method), mut points) in families {
        if points.len() < 2 {
            continue;
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let noise = f64::from_bits(noise_bits);
        let title = format!("{method}: s-ratio vs m (n={n}, k={k}, sigma2={noise})");
        let svg = svg_median_band_chart(&title, "measurements m", "s(rec) / s(truth)", &points);
        write_atomic(
            &out.join(format!("ratio_vs_m_{method}_n{n}_k{k}.svg")),
            svg.as_bytes(),
        )?;
    }
    Ok(())
}

/// Re-run the leading rounds of each solver entry to capture residual
/// traces (deterministic, so the rerun reproduces the grid's trials).
fn emit_traces(
    out: &Path,
    grid: &[(GeneratorSpec, MethodConfig)],
    trace_trials: usize,
    base_seed: u64,
) -> Result<()> {
    for (spec, method) in grid {
        let MethodConfig::Sss(config) = method else {
            continue;
        };
        for round in 0..trace_trials {
            let mut spec = spec.clone();
            spec.seed = derive_seed(base_seed, &spec, round);
            let problem = generate_problem(&spec)?;
            let outcome = solve(&problem, config)?;
            let stem = format!("trace_n{}_k{}_m{}_round{round}", spec.n, spec.k, spec.m);
            write_atomic(
                &out.join(format!("{stem}.csv")),
                render_trace_csv(&outcome.trace).as_bytes(),
            )?;
            let points: Vec<(f64, f64)> = outcome
                .trace
                .records
                .iter()
                .map(|r| (r.iteration as f64, r.residual))
                .collect();
            let svg = svg_line_chart(
                &format!(
                    "residual vs iteration (n={}, k={}, m={})",
                    spec.n, spec.k, spec.m
                ),
                "iteration",
                "||Ax - b||",
                &points,
                true,
            );
            write_atomic(&out.join(format!("{stem}.svg")), svg.as_bytes())?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// compare-cosamp
// ---------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareDoc {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "default_rounds")]
    rounds: usize,
    spec: GeneratorSpec,
    k_sweep: Vec<usize>,
    #[serde(default)]
    solver: Option<SolverConfig>,
    #[serde(default)]
    cosamp: Option<CosampConfig>,
    #[serde(default)]
    out: Option<PathBuf>,
}

fn cmd_compare_cosamp(args: CompareArgs) -> Result<()> {
    configure_jobs(args.jobs);
    let doc: CompareDoc = load_json(&args.config)?;
    if doc.k_sweep.is_empty() {
        return Err(Error::Config("k_sweep must not be empty".into()));
    }
    let solver_config = args.solver.apply(doc.solver.clone().unwrap_or_default());
    solver_config.validate()?;
    let cosamp_base = doc.cosamp.clone().unwrap_or_default();
    let rounds = args.rounds.unwrap_or(doc.rounds);
    if rounds == 0 {
        return Err(Error::Config("rounds must be >= 1".into()));
    }
    let mut spec = doc.spec.clone();
    if let Some(sigma2) = args.solver.sigma2 {
        spec.noise_variance = sigma2;
    }
    spec.validate()?;
    let seed = args.seed.or(doc.seed).or_else(env_seed).unwrap_or(0);
    let out = args.out.or(doc.out).unwrap_or_else(|| PathBuf::from("."));

    // One grid entry per method over the SAME spec: derived per-round seeds
    // depend only on (base seed, spec, round), so every method sees the
    // same problem instances.
    let mut grid = vec![(spec.clone(), MethodConfig::Sss(solver_config))];
    for &k in &doc.k_sweep {
        let cfg = CosampConfig {
            k,
            ..cosamp_base.clone()
        };
        grid.push((spec.clone(), MethodConfig::Cosamp(cfg)));
    }

    let records = run_grid(&grid, rounds, seed)?;
    fs::create_dir_all(&out)?;
    write_atomic(&out.join("records.ndjson"), render_ndjson(&records).as_bytes())?;

    // Per-entry five-number summaries of the three panels.
    let mut labels: Vec<String> = vec!["sss".to_string()];
    labels.extend(doc.k_sweep.iter().map(|k| format!("cosamp k={k}")));
    let mut csv = String::from(
        "label,ratio_median,ratio_q1,ratio_q3,ratio_min,ratio_max,\
         runtime_median,runtime_q1,runtime_q3,runtime_min,runtime_max,\
         residual_median,residual_q1,residual_q3,residual_min,residual_max\n",
    );
    let mut panels: Vec<(String, [f64; 5], [f64; 5], [f64; 5])> = Vec::new();
    for (entry_idx, label) in labels.iter().enumerate() {
        let rows: Vec<&crate::harness::ExperimentRecord> = records
            [entry_idx * rounds..(entry_idx + 1) * rounds]
            .iter()
            .filter(|r| r.error.is_none())
            .collect();
        let five = |f: &dyn Fn(&crate::harness::ExperimentRecord) -> f64| -> [f64; 5] {
            let values: Vec<f64> = rows.iter().map(|r| f(r)).collect();
            match crate::harness::FieldSummary::from_values(&values) {
                Some(s) => [s.min, s.q1, s.median, s.q3, s.max],
                None => [f64::NAN; 5],
            }
        };
        let ratio = five(&|r| r.s_hat_ratio);
        let runtime = five(&|r| r.runtime_seconds);
        let residual = five(&|r| r.final_residual);
        use std::fmt::Write as _;
        let _ = write!(csv, "{label}");
        for block in [&ratio, &runtime, &residual] {
            let _ = write!(
                csv,
                ",{},{},{},{},{}",
                block[2], block[1], block[3], block[0], block[4]
            );
        }
        csv.push('\n');
        panels.push((label.clone(), ratio, runtime, residual));
    }
    write_atomic(&out.join("comparison.csv"), csv.as_bytes())?;

    let ratio_entries: Vec<(String, [f64; 5])> =
        panels.iter().map(|p| (p.0.clone(), p.1)).collect();
    let runtime_entries: Vec<(String, [f64; 5])> =
        panels.iter().map(|p| (p.0.clone(), p.2)).collect();
    let residual_entries: Vec<(String, [f64; 5])> =
        panels.iter().map(|p| (p.0.clone(), p.3)).collect();
    write_atomic(
        &out.join("ratio.svg"),
        svg_box_chart("sparsity estimate s/s0", "s(rec)/s(truth)", &ratio_entries, false)
            .as_bytes(),
    )?;
    write_atomic(
        &out.join("runtime.svg"),
        svg_box_chart("runtime", "seconds", &runtime_entries, false).as_bytes(),
    )?;
    write_atomic(
        &out.join("residual.svg"),
        svg_box_chart("reconstruction error", "||Ax - b||", &residual_entries, true)
            .as_bytes(),
    )?;

    println!("{} records -> {}", records.len(), out.display());
    Ok(())
}
