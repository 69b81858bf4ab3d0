//! The episodic interaction loop shared by every learner, and the per-task
//! metrics it records.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::learners::LearnError;
use crate::mdp::{sample_index, step, TabularMdp, Transition};

/// Affine map between raw rewards in `[lo, hi]` and model rewards in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardScale {
    lo: f64,
    hi: f64,
}

impl RewardScale {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(hi > lo, "reward range must be non-empty");
        Self { lo, hi }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 1.0)
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        (raw - self.lo) / (self.hi - self.lo)
    }

    pub fn denormalize(&self, r: f64) -> f64 {
        self.lo + r * (self.hi - self.lo)
    }
}

/// An MDP run in episodes. An episode ends right after the agent acts in the
/// goal state, or at the step cap.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicTask {
    mdp: TabularMdp,
    goal: Option<usize>,
    scale: RewardScale,
}

impl EpisodicTask {
    pub fn new(mdp: TabularMdp, goal: Option<usize>, scale: RewardScale) -> Self {
        Self { mdp, goal, scale }
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn goal(&self) -> Option<usize> {
        self.goal
    }

    pub fn scale(&self) -> RewardScale {
        self.scale
    }

    pub fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.mdp.num_actions()
    }
}

/// Interaction budget for one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizon {
    pub episodes: usize,
    pub steps_per_episode: usize,
}

impl Horizon {
    pub fn new(episodes: usize, steps_per_episode: usize) -> Self {
        Self {
            episodes,
            steps_per_episode,
        }
    }

    pub fn total_steps(&self) -> u64 {
        (self.episodes * self.steps_per_episode) as u64
    }
}

/// What happened while learning one task. Rewards are raw, not normalised.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaskMetrics {
    /// Sum of raw rewards over every step of the task.
    pub cum_reward: f64,
    /// Mean over episodes of the discounted raw return.
    pub disc_return: f64,
    /// Steps taken from a state-action pair that was not yet known.
    pub unknown_visits: u64,
    /// Template library size after the task.
    pub num_templates: usize,
    /// First step after which every pair had `m_s` own visits or was known;
    /// the full step budget if that never happened.
    pub steps_to_ms_known: u64,
    /// First step after which every pair was known.
    pub steps_to_all_known: Option<u64>,
    /// Steps actually taken.
    pub steps: u64,
    pub wall_ms: u64,
}

/// A learner's view of one task while interacting with it.
pub trait Agent {
    fn act<R: Rng + ?Sized>(&mut self, state: usize, rng: &mut R) -> usize;
    fn observe(&mut self, transition: &Transition) -> Result<(), LearnError>;
    fn is_known(&self, state: usize, action: usize) -> bool;
    fn own_total(&self, state: usize, action: usize) -> u64;
    fn num_known(&self) -> usize;
}

/// A learner that faces tasks one after another.
pub trait MultiTaskLearner {
    fn name(&self) -> &'static str;
    fn run_task(
        &mut self,
        task: &EpisodicTask,
        horizon: Horizon,
        rng: &mut ChaCha8Rng,
    ) -> Result<TaskMetrics, LearnError>;
    /// Templates held across tasks; zero for learners without a library.
    fn num_templates(&self) -> usize {
        0
    }
}

/// Runs `agent` on `task` for the whole horizon.
///
/// `small_threshold` only feeds the `steps_to_ms_known` metric.
pub fn run_episodes<A: Agent, R: Rng + ?Sized>(
    agent: &mut A,
    task: &EpisodicTask,
    horizon: Horizon,
    small_threshold: u64,
    rng: &mut R,
) -> Result<TaskMetrics, LearnError> {
    let mdp = task.mdp();
    let (n_s, n_a) = (mdp.num_states(), mdp.num_actions());
    let gamma = mdp.discount();
    let pairs = n_s * n_a;
    let mut metrics = TaskMetrics {
        steps_to_ms_known: horizon.total_steps(),
        ..Default::default()
    };
    let mut ms_done = false;
    let mut last_known = agent.num_known();
    let mut disc_sum = 0.0;
    let mut t = 0u64;

    for _ in 0..horizon.episodes {
        let mut state = sample_index(mdp.start_dist(), rng);
        let mut discount = 1.0;
        let mut episode_return = 0.0;
        for _ in 0..horizon.steps_per_episode {
            let action = agent.act(state, rng);
            if !agent.is_known(state, action) {
                metrics.unknown_visits += 1;
            }
            let (next_state, reward) = step(mdp, state, action, rng);
            let transition = Transition {
                state,
                action,
                reward,
                next_state,
            };
            agent.observe(&transition)?;
            t += 1;

            let raw = task.scale().denormalize(reward);
            metrics.cum_reward += raw;
            episode_return += discount * raw;
            discount *= gamma;

            let known = agent.num_known();
            if !ms_done && (known != last_known || agent.own_total(state, action) == small_threshold) {
                ms_done = (0..pairs).all(|p| {
                    let (s, a) = (p / n_a, p % n_a);
                    agent.is_known(s, a) || agent.own_total(s, a) >= small_threshold
                });
                if ms_done {
                    metrics.steps_to_ms_known = t;
                }
            }
            if metrics.steps_to_all_known.is_none() && known == pairs {
                metrics.steps_to_all_known = Some(t);
            }
            last_known = known;

            if Some(state) == task.goal() {
                break;
            }
            state = next_state;
        }
        disc_sum += episode_return;
    }
    metrics.steps = t;
    if horizon.episodes > 0 {
        metrics.disc_return = disc_sum / horizon.episodes as f64;
    }
    Ok(metrics)
}
