//! Replica-parallel execution of an experiment.

use std::time::{Duration, Instant};

use online_hmm::harness::{average_kl_series, run_single_timed, AveragedCurve, ExperimentConfig, LearningCurve, UpdateTimer};
use online_hmm::learners::LearnerConfig;
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Accumulates the time spent inside learner updates.
#[derive(Debug, Default)]
pub struct Stopwatch {
    started: Option<Instant>,
    pub total: Duration,
}

impl UpdateTimer for Stopwatch {
    fn start(&mut self) {
        self.started = Some(Instant::now());
    }

    fn stop(&mut self) {
        if let Some(t) = self.started.take() {
            self.total += t.elapsed();
        }
    }
}

#[derive(Debug, Clone)]
pub struct LearnerRun {
    pub config: LearnerConfig,
    pub averaged: AveragedCurve,
    /// Full curve of replica 0, carrying the parameter snapshots.
    pub trace: LearningCurve,
    /// Elapsed time for all replicas of this learner.
    pub wall_clock: Duration,
    /// Time inside `observe`, summed over replicas.
    pub update_time: Duration,
    pub failed_updates: usize,
    /// Largest projection residual over all replicas and updates.
    pub max_projection_residual: Option<f64>,
}

struct ReplicaResult {
    kl: Vec<f64>,
    trace: Option<LearningCurve>,
    update_time: Duration,
    failed_updates: usize,
    max_residual: Option<f64>,
}

fn run_replica(config: &ExperimentConfig, learner: usize, replica: u64) -> online_hmm::Result<ReplicaResult> {
    let mut watch = Stopwatch::default();
    let curve = run_single_timed(config, learner, replica, &mut watch)?;
    Ok(ReplicaResult {
        kl: curve.kl_values(),
        failed_updates: curve.annotations.len(),
        max_residual: curve.max_projection_residual,
        update_time: watch.total,
        trace: (replica == 0).then_some(curve),
    })
}

/// Runs every learner of `config` over all replicas on `threads` workers.
///
/// Replica `r` of every learner sees the same teachers and sequences, and the
/// result does not depend on `threads`.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<Vec<LearnerRun>> {
    config.validate().map_err(CliError::Config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::ThreadPool(e.to_string()))?;

    // Only replica 0 keeps snapshots.
    let mut lean = config.clone();
    lean.snapshot_stride = 0;

    (0..config.learners.len())
        .map(|k| {
            let start = Instant::now();
            let results: Vec<ReplicaResult> = pool
                .install(|| {
                    (0..config.replicas as u64)
                        .into_par_iter()
                        .map(|r| run_replica(if r == 0 { config } else { &lean }, k, r))
                        .collect::<online_hmm::Result<Vec<_>>>()
                })
                .map_err(CliError::Runtime)?;
            let wall_clock = start.elapsed();

            let trace = results[0].trace.clone().expect("replica 0 keeps its trace");
            let ps: Vec<usize> = trace.points.iter().map(|pt| pt.p).collect();
            let series: Vec<Vec<f64>> = results.iter().map(|r| r.kl.clone()).collect();
            let averaged = average_kl_series(&ps, &series).map_err(CliError::Runtime)?;
            Ok(LearnerRun {
                config: config.learners[k].clone(),
                averaged,
                trace,
                wall_clock,
                update_time: results.iter().map(|r| r.update_time).sum(),
                failed_updates: results.iter().map(|r| r.failed_updates).sum(),
                max_projection_residual: results
                    .iter()
                    .filter_map(|r| r.max_residual)
                    .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r)))),
            })
        })
        .collect()
}

/// Worker count when `--threads` is not given.
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
