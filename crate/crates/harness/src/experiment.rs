use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vtf_core::gmm::{init_point, kmeanspp_init, sample_gmm, Dataset, GmmProblem, SeparationLevel};
use vtf_core::manifold::{MappingMode, ProductPoint, StepRule};
use vtf_core::rlbfgs::{solve, SolverConfig, Termination};

use crate::config::{Cell, ExperimentConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub k: usize,
    pub n: usize,
    pub len: usize,
    pub separation: SeparationLevel,
    pub mode: MappingMode,
    pub step_rule: StepRule,
    pub run: usize,
    pub seed: u64,
    pub iterations: usize,
    pub conv_time_s: f64,
    pub iter_time_s: f64,
    /// NaN when the solve errored; serialized as `null`.
    #[serde(deserialize_with = "nan_if_null")]
    pub last_cost: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub final_grad_norm: f64,
    /// `None` when the solve returned an error instead of terminating.
    pub termination: Option<Termination>,
    pub error: Option<String>,
    pub cubic_calls_in_recursion: u64,
    pub long_running: bool,
    pub cost_trace: Vec<f64>,
}

fn nan_if_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl RunRecord {
    pub fn cell(&self) -> Cell {
        Cell {
            k: self.k,
            n: self.n,
            len: self.len,
            separation: self.separation,
        }
    }

    /// Failed runs are excluded from averages.
    pub fn failed(&self) -> bool {
        !matches!(self.termination, Some(Termination::Converged | Termination::MaxIters))
    }

    pub fn algorithm(&self) -> &'static str {
        self.mode.label()
    }
}

/// Data and initial point shared by every solve of one (cell, run).
pub struct RunInput {
    pub seed: u64,
    pub data: Dataset,
    pub start: ProductPoint,
}

pub fn prepare_run(config: &ExperimentConfig, cell: &Cell, run: usize) -> Result<RunInput> {
    let seed = config.run_seed(cell, run);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (data, _) = sample_gmm(cell.k, cell.n, cell.len, cell.separation, &mut rng)
        .with_context(|| format!("sampling {} run {run}", cell.slug()))?;
    let init = kmeanspp_init(&data, cell.k, config.init, &mut rng)
        .with_context(|| format!("initializing {} run {run}", cell.slug()))?;
    let start = init_point(&init)?;
    Ok(RunInput { seed, data, start })
}

fn solve_one(
    config: &ExperimentConfig,
    cell: &Cell,
    run: usize,
    input: &RunInput,
    mode: MappingMode,
    step_rule: StepRule,
) -> RunRecord {
    let solver = SolverConfig {
        mode,
        step_rule,
        ..config.solver.clone()
    };
    let problem = GmmProblem::new(&input.data);
    let started = Instant::now();
    let outcome = solve(&problem, input.start.clone(), &solver);
    let elapsed = started.elapsed().as_secs_f64();

    let mut record = RunRecord {
        k: cell.k,
        n: cell.n,
        len: cell.len,
        separation: cell.separation,
        mode,
        step_rule,
        run,
        seed: input.seed,
        iterations: 0,
        conv_time_s: elapsed,
        iter_time_s: 0.0,
        last_cost: f64::NAN,
        final_grad_norm: f64::NAN,
        termination: None,
        error: None,
        cubic_calls_in_recursion: 0,
        long_running: cell.is_long_running(),
        cost_trace: Vec::new(),
    };
    match outcome {
        Ok((_, stats)) => {
            record.iterations = stats.iterations;
            record.iter_time_s = if stats.iterations > 0 {
                elapsed / stats.iterations as f64
            } else {
                0.0
            };
            record.last_cost = stats.final_cost;
            record.final_grad_norm = stats.final_grad_norm;
            record.termination = Some(stats.termination);
            record.cubic_calls_in_recursion = stats.cubic_calls_in_recursion;
            record.cost_trace = stats.cost_trace;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Runs every (cell, run) on the current rayon pool. Records come back in
/// (cell, run, step rule, mode) order whatever the completion order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let tasks: Vec<(Cell, usize)> = config
        .cells()
        .into_iter()
        .flat_map(|cell| (0..config.runs).map(move |run| (cell, run)))
        .collect();
    for cell in config.cells().iter().filter(|c| c.is_long_running()) {
        log::warn!("cell {} is long-running", cell.slug());
    }

    let batches: Vec<Result<Vec<RunRecord>>> = tasks
        .par_iter()
        .map(|(cell, run)| {
            let input = prepare_run(config, cell, *run)?;
            let mut out = Vec::new();
            for &rule in &config.step_rules {
                for &mode in &config.modes {
                    let rec = solve_one(config, cell, *run, &input, mode, rule);
                    log::debug!(
                        "{} run {run} {:?} {}: {} iters, cost {:.6}",
                        cell.slug(),
                        rule,
                        mode.label(),
                        rec.iterations,
                        rec.last_cost
                    );
                    out.push(rec);
                }
            }
            Ok(out)
        })
        .collect();

    let mut records = Vec::with_capacity(tasks.len() * config.modes.len() * config.step_rules.len());
    for batch in batches {
        records.extend(batch?);
    }
    Ok(records)
}

/// Regenerates each (cell, run) dataset and writes it as headerless CSV,
/// one point per row, under `dir/datasets`.
pub fn write_datasets(dir: &Path, config: &ExperimentConfig) -> Result<()> {
    let sub = dir.join("datasets");
    std::fs::create_dir_all(&sub)?;
    for cell in config.cells() {
        for run in 0..config.runs {
            let seed = config.run_seed(&cell, run);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (data, _) = sample_gmm(cell.k, cell.n, cell.len, cell.separation, &mut rng)?;
            let path = sub.join(format!("{}_run{run:02}.csv", cell.slug()));
            let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            data.write_csv(std::io::BufWriter::new(file))?;
        }
    }
    Ok(())
}

/// [`run_experiment`] on a dedicated pool of `jobs` threads.
pub fn run_experiment_with_jobs(config: &ExperimentConfig, jobs: usize) -> Result<Vec<RunRecord>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    pool.install(|| run_experiment(config))
}
