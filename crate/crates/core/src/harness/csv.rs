//! CSV output. Every file starts with a versioned `#` comment line; reals
//! are written with six decimals so identical runs give identical bytes.

use std::collections::BTreeMap;
use std::io::Write;

use super::stats::{mean, standard_error};
use super::{ExperimentResult, HarnessError, LearnerKind, TaskRow};

pub const TASKS_HEADER: &str = "# temple-metrics v1";
pub const SUMMARY_HEADER: &str = "# temple-summary v1";
pub const SWEEP_HEADER: &str = "# temple-sweep v1";

pub const TASK_COLUMNS: [&str; 9] = [
    "seed",
    "task_index",
    "learner",
    "cum_reward",
    "disc_return",
    "unknown_visits",
    "num_templates",
    "steps_to_ms_known",
    "wall_ms",
];

pub const SUMMARY_COLUMNS: [&str; 11] = [
    "learner",
    "task_index",
    "n_seeds",
    "cum_reward_mean",
    "cum_reward_se",
    "disc_return_mean",
    "unknown_visits_mean",
    "num_templates_mean",
    "steps_to_ms_known_mean",
    "advantage_mean",
    "advantage_se",
];

pub fn real(x: f64) -> String {
    format!("{x:.6}")
}

fn task_fields(row: &TaskRow) -> Vec<String> {
    let m = &row.metrics;
    vec![
        row.seed.to_string(),
        row.task_index.to_string(),
        row.learner.to_string(),
        real(m.cum_reward),
        real(m.disc_return),
        m.unknown_visits.to_string(),
        m.num_templates.to_string(),
        m.steps_to_ms_known.to_string(),
        m.wall_ms.to_string(),
    ]
}

fn writer<W: Write>(mut out: W, comment: &str) -> Result<csv::Writer<W>, HarnessError> {
    writeln!(out, "{comment}")?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(out))
}

/// One row per `(seed, learner, task)`.
pub fn write_tasks<W: Write>(result: &ExperimentResult, out: W) -> Result<(), HarnessError> {
    let mut w = writer(out, TASKS_HEADER)?;
    w.write_record(TASK_COLUMNS)?;
    for row in result.rows() {
        w.write_record(task_fields(row))?;
    }
    w.flush()?;
    Ok(())
}

/// Seed-averaged values of one learner on one task.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub learner: LearnerKind,
    pub task_index: usize,
    pub n_seeds: usize,
    pub cum_reward_mean: f64,
    pub cum_reward_se: f64,
    pub disc_return_mean: f64,
    pub unknown_visits_mean: f64,
    pub num_templates_mean: f64,
    pub steps_to_ms_known_mean: f64,
    /// Mean and standard error of the same-seed difference in cumulative
    /// reward against single-task RMax, when that learner was run.
    pub advantage: Option<(f64, f64)>,
}

pub fn summarize(result: &ExperimentResult) -> Vec<SummaryRow> {
    let mut learners: Vec<LearnerKind> = Vec::new();
    for run in &result.runs {
        if !learners.contains(&run.learner) {
            learners.push(run.learner);
        }
    }
    let baseline: BTreeMap<(u64, usize), f64> = result
        .rows()
        .filter(|r| r.learner == LearnerKind::RmaxSingle)
        .map(|r| ((r.seed, r.task_index), r.metrics.cum_reward))
        .collect();

    let mut out = Vec::new();
    for learner in learners {
        let mut by_task: BTreeMap<usize, Vec<&TaskRow>> = BTreeMap::new();
        for row in result.rows().filter(|r| r.learner == learner) {
            by_task.entry(row.task_index).or_default().push(row);
        }
        for (task_index, rows) in by_task {
            let col = |f: &dyn Fn(&TaskRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
            let rewards = col(&|r| r.metrics.cum_reward);
            let advantage = if learner == LearnerKind::RmaxSingle || baseline.is_empty() {
                None
            } else {
                let diffs: Vec<f64> = rows
                    .iter()
                    .filter_map(|r| {
                        baseline
                            .get(&(r.seed, r.task_index))
                            .map(|b| r.metrics.cum_reward - b)
                    })
                    .collect();
                (!diffs.is_empty()).then(|| (mean(&diffs), standard_error(&diffs)))
            };
            out.push(SummaryRow {
                learner,
                task_index,
                n_seeds: rows.len(),
                cum_reward_mean: mean(&rewards),
                cum_reward_se: standard_error(&rewards),
                disc_return_mean: mean(&col(&|r| r.metrics.disc_return)),
                unknown_visits_mean: mean(&col(&|r| r.metrics.unknown_visits as f64)),
                num_templates_mean: mean(&col(&|r| r.metrics.num_templates as f64)),
                steps_to_ms_known_mean: mean(&col(&|r| r.metrics.steps_to_ms_known as f64)),
                advantage,
            });
        }
    }
    out
}

pub fn write_summary<W: Write>(result: &ExperimentResult, out: W) -> Result<(), HarnessError> {
    let mut w = writer(out, SUMMARY_HEADER)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for s in summarize(result) {
        let (adv, adv_se) = match s.advantage {
            Some((m, se)) => (real(m), real(se)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            s.learner.to_string(),
            s.task_index.to_string(),
            s.n_seeds.to_string(),
            real(s.cum_reward_mean),
            real(s.cum_reward_se),
            real(s.disc_return_mean),
            real(s.unknown_visits_mean),
            real(s.num_templates_mean),
            real(s.steps_to_ms_known_mean),
            adv,
            adv_se,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-task rows of a sweep, prefixed with the swept parameter and value.
pub fn write_sweep<W: Write>(
    parameter: &str,
    results: &[(f64, ExperimentResult)],
    out: W,
) -> Result<(), HarnessError> {
    let mut w = writer(out, SWEEP_HEADER)?;
    let mut header = vec!["param", "value"];
    header.extend(TASK_COLUMNS);
    w.write_record(header)?;
    for (value, result) in results {
        for row in result.rows() {
            let mut fields = vec![parameter.to_string(), real(*value)];
            fields.extend(task_fields(row));
            w.write_record(fields)?;
        }
    }
    w.flush()?;
    Ok(())
}
