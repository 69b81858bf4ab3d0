//! Single-task learners run on a task sequence: each task starts from scratch.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::learners::{LearnError, QConfig, QLearner, RMaxConfig, RMaxLearner};
use crate::mdp::Transition;
use crate::session::{run_episodes, Agent, EpisodicTask, Horizon, MultiTaskLearner, TaskMetrics};

impl Agent for RMaxLearner {
    fn act<R: Rng + ?Sized>(&mut self, state: usize, _rng: &mut R) -> usize {
        RMaxLearner::act(self, state)
    }

    fn observe(&mut self, t: &Transition) -> Result<(), LearnError> {
        self.record(t.state, t.action, t.reward, t.next_state);
        self.try_mark_known(t.state, t.action)?;
        Ok(())
    }

    fn is_known(&self, state: usize, action: usize) -> bool {
        RMaxLearner::is_known(self, state, action)
    }

    fn own_total(&self, state: usize, action: usize) -> u64 {
        self.ledger().own_total(state, action)
    }

    fn num_known(&self) -> usize {
        RMaxLearner::num_known(self)
    }
}

/// Plain RMax, relearning every task.
#[derive(Debug, Clone)]
pub struct SingleTaskRMax {
    pub config: RMaxConfig,
    /// Only used for the `steps_to_ms_known` metric.
    pub small_threshold: u64,
}

impl MultiTaskLearner for SingleTaskRMax {
    fn name(&self) -> &'static str {
        "rmax-single"
    }

    fn run_task(
        &mut self,
        task: &EpisodicTask,
        horizon: Horizon,
        rng: &mut ChaCha8Rng,
    ) -> Result<TaskMetrics, LearnError> {
        let mut agent = RMaxLearner::new(task.num_states(), task.num_actions(), self.config);
        run_episodes(&mut agent, task, horizon, self.small_threshold, rng)
    }
}

/// Q-learning with a visit counter so it reports the same metrics as the
/// model-based learners: a pair counts as known after `known_threshold` visits.
#[derive(Debug, Clone)]
pub struct QAgent {
    learner: QLearner,
    num_actions: usize,
    visits: Vec<u64>,
    known_threshold: u64,
    num_known: usize,
}

impl QAgent {
    pub fn new(num_states: usize, num_actions: usize, config: QConfig, known_threshold: u64) -> Self {
        Self {
            learner: QLearner::new(num_states, num_actions, config),
            num_actions,
            visits: vec![0; num_states * num_actions],
            known_threshold,
            num_known: 0,
        }
    }

    pub fn learner(&self) -> &QLearner {
        &self.learner
    }
}

impl Agent for QAgent {
    fn act<R: Rng + ?Sized>(&mut self, state: usize, rng: &mut R) -> usize {
        self.learner.select(state, rng)
    }

    fn observe(&mut self, t: &Transition) -> Result<(), LearnError> {
        // The goal is absorbing in the model, so bootstrapping through it is
        // consistent with the planners' view of the task.
        self.learner.update(t.state, t.action, t.reward, t.next_state);
        let v = &mut self.visits[t.state * self.num_actions + t.action];
        *v += 1;
        if *v == self.known_threshold {
            self.num_known += 1;
        }
        Ok(())
    }

    fn is_known(&self, state: usize, action: usize) -> bool {
        self.visits[state * self.num_actions + action] >= self.known_threshold
    }

    fn own_total(&self, state: usize, action: usize) -> u64 {
        self.visits[state * self.num_actions + action]
    }

    fn num_known(&self) -> usize {
        self.num_known
    }
}

#[derive(Debug, Clone)]
pub struct SingleTaskQ {
    pub config: QConfig,
    pub known_threshold: u64,
    pub small_threshold: u64,
}

impl MultiTaskLearner for SingleTaskQ {
    fn name(&self) -> &'static str {
        "qlearning-single"
    }

    fn run_task(
        &mut self,
        task: &EpisodicTask,
        horizon: Horizon,
        rng: &mut ChaCha8Rng,
    ) -> Result<TaskMetrics, LearnError> {
        let mut agent = QAgent::new(task.num_states(), task.num_actions(), self.config, self.known_threshold);
        run_episodes(&mut agent, task, horizon, self.small_threshold, rng)
    }
}
