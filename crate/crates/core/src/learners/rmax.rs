use crate::mdp::{
    value_iteration_from, MdpError, Policy, TabularMdp, DEFAULT_DISCOUNT, DEFAULT_VI_MAX_ITERS,
    DEFAULT_VI_TOLERANCE,
};

use super::VisitLedger;

/// Reward given to unknown state-action pairs in the induced model.
pub const R_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RMaxConfig {
    /// Effective visits `m` after which a pair's estimate is trusted.
    pub known_threshold: u64,
    pub discount: f64,
    pub vi_tolerance: f64,
    pub vi_max_iters: usize,
}

impl Default for RMaxConfig {
    fn default() -> Self {
        Self {
            known_threshold: 500,
            discount: DEFAULT_DISCOUNT,
            vi_tolerance: DEFAULT_VI_TOLERANCE,
            vi_max_iters: DEFAULT_VI_MAX_ITERS,
        }
    }
}

/// The optimistic model RMax plans in.
///
/// Known pairs use the empirical estimate from own plus augmented visits.
/// Every unknown pair self-loops with reward [`R_MAX`], so the planner values
/// reaching it at `V_max`.
pub fn induced_mdp(ledger: &VisitLedger, known: &[bool], discount: f64) -> Result<TabularMdp, MdpError> {
    let (n_s, n_a) = (ledger.num_states(), ledger.num_actions());
    assert_eq!(known.len(), n_s * n_a, "known flags must cover every pair");
    let mut transition = vec![0.0; n_s * n_a * n_s];
    let mut reward = vec![0.0; n_s * n_a];
    for s in 0..n_s {
        for a in 0..n_a {
            let p = s * n_a + a;
            let row = &mut transition[p * n_s..(p + 1) * n_s];
            match ledger.estimate(s, a).filter(|_| known[p]) {
                Some((probs, r)) => {
                    row.copy_from_slice(&probs);
                    reward[p] = r;
                }
                None => {
                    row[s] = 1.0;
                    reward[p] = R_MAX;
                }
            }
        }
    }
    TabularMdp::new(n_s, n_a, transition, reward, vec![1.0 / n_s as f64; n_s], discount)
}

/// Single-task RMax.
///
/// The policy is replanned only when a pair newly becomes known, warm-started
/// from the previous values.
#[derive(Debug, Clone)]
pub struct RMaxLearner {
    config: RMaxConfig,
    ledger: VisitLedger,
    known: Vec<bool>,
    num_known: usize,
    policy: Policy,
    values: Vec<f64>,
}

impl RMaxLearner {
    pub fn new(num_states: usize, num_actions: usize, config: RMaxConfig) -> Self {
        let v_max = 1.0 / (1.0 - config.discount);
        Self {
            config,
            ledger: VisitLedger::new(num_states, num_actions),
            known: vec![false; num_states * num_actions],
            num_known: 0,
            // Everything ties at V_max, and ties go to the lowest action.
            policy: Policy::uniform_first(num_states),
            values: vec![v_max; num_states],
        }
    }

    pub fn config(&self) -> &RMaxConfig {
        &self.config
    }

    pub fn ledger(&self) -> &VisitLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut VisitLedger {
        &mut self.ledger
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    /// Optimistic values of the current policy's induced model.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn act(&self, state: usize) -> usize {
        self.policy.action(state)
    }

    pub fn record(&mut self, state: usize, action: usize, reward: f64, next_state: usize) {
        self.ledger.record(state, action, reward, next_state);
    }

    pub fn is_known(&self, state: usize, action: usize) -> bool {
        self.known[state * self.ledger.num_actions() + action]
    }

    pub fn num_known(&self) -> usize {
        self.num_known
    }

    pub fn all_known(&self) -> bool {
        self.num_known == self.known.len()
    }

    /// Adds the pair to the known set without replanning if it has reached
    /// `m` effective visits. Returns whether it was newly added.
    pub fn mark_if_ready(&mut self, state: usize, action: usize) -> bool {
        let p = state * self.ledger.num_actions() + action;
        if self.known[p] || self.ledger.effective_total(state, action) < self.config.known_threshold {
            return false;
        }
        self.known[p] = true;
        self.num_known += 1;
        true
    }

    /// [`Self::mark_if_ready`] followed by replanning when the pair was added.
    pub fn try_mark_known(&mut self, state: usize, action: usize) -> Result<bool, MdpError> {
        let added = self.mark_if_ready(state, action);
        if added {
            self.update_policy()?;
        }
        Ok(added)
    }

    pub fn update_policy(&mut self) -> Result<(), MdpError> {
        let mdp = induced_mdp(&self.ledger, &self.known, self.config.discount)?;
        let solution = value_iteration_from(
            &mdp,
            std::mem::take(&mut self.values),
            self.config.vi_tolerance,
            self.config.vi_max_iters,
        )?;
        self.values = solution.values;
        self.policy = solution.policy;
        Ok(())
    }
}
