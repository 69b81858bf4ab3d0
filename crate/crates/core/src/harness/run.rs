use std::time::Instant;

use rayon::prelude::*;

use crate::rng::{stream, Purpose};
use crate::session::TaskMetrics;
use crate::template::TemplateLibrary;

use super::{HarnessError, LearnerKind, RunConfig};

/// Metrics of one learner on one task of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRow {
    pub seed: u64,
    pub task_index: usize,
    pub learner: LearnerKind,
    pub metrics: TaskMetrics,
}

/// One learner's pass over one seed's task sequence.
#[derive(Debug, Clone)]
pub struct LearnerRun {
    pub seed: u64,
    pub learner: LearnerKind,
    pub rows: Vec<TaskRow>,
    /// Final template library, for learners that keep one.
    pub library: Option<TemplateLibrary>,
    /// Number of model clusters formed, for the finite-model learner.
    pub clusters: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Ordered by seed (in config order), then learner (in config order).
    pub runs: Vec<LearnerRun>,
}

impl ExperimentResult {
    /// All task rows in `(seed, learner, task)` order.
    pub fn rows(&self) -> impl Iterator<Item = &TaskRow> {
        self.runs.iter().flat_map(|r| r.rows.iter())
    }

    pub fn runs_of(&self, learner: LearnerKind) -> impl Iterator<Item = &LearnerRun> {
        self.runs.iter().filter(move |r| r.learner == learner)
    }
}

/// Runs one learner over one seed's task sequence.
///
/// Task `i` of seed `s` is always the same maze, and the learner interacts
/// with it through the stream `(s, i, Interaction)`, so every learner faces
/// identical tasks and identical environment noise up to its own choices.
pub fn run_learner(config: &RunConfig, seed: u64, kind: LearnerKind) -> Result<LearnerRun, HarnessError> {
    let mut learner = config.learner(kind);
    let horizon = config.horizon();
    let mut rows = Vec::with_capacity(config.num_tasks);
    for task_index in 0..config.num_tasks {
        let maze = config.tasks.sample(seed, task_index)?;
        let task = maze.task(config.hyper.discount)?;
        let mut rng = stream(seed, task_index as u64, Purpose::Interaction);
        let started = Instant::now();
        let mut metrics = learner.as_dyn().run_task(&task, horizon, &mut rng)?;
        if config.wall_clock {
            metrics.wall_ms = started.elapsed().as_millis() as u64;
        }
        rows.push(TaskRow {
            seed,
            task_index,
            learner: kind,
            metrics,
        });
    }
    let clusters = match &learner {
        super::AnyLearner::Fmtemple(fm) => fm.clusters().map(<[_]>::len),
        _ => None,
    };
    Ok(LearnerRun {
        seed,
        learner: kind,
        rows,
        library: learner.library().cloned(),
        clusters,
    })
}

/// Runs every configured learner on every seed, seeds and learners in
/// parallel. The result order does not depend on scheduling.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let jobs: Vec<(u64, LearnerKind)> = config
        .seeds
        .iter()
        .flat_map(|&seed| config.learners.iter().map(move |&kind| (seed, kind)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(seed, kind)| run_learner(config, seed, kind))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentResult { runs })
}
