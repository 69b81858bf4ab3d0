/// Per state-action visit bookkeeping.
///
/// Own counts are what the agent observed in the current task. Augmented
/// counts are borrowed from a template and are never fed back into the
/// library; `contributed` tracks which own counts the library already holds,
/// so each observation is pooled exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitLedger {
    num_states: usize,
    num_actions: usize,
    own_counts: Vec<u64>,
    own_reward: Vec<f64>,
    own_total: Vec<u64>,
    aug_counts: Vec<u64>,
    aug_reward: Vec<f64>,
    aug_total: Vec<u64>,
    contributed_counts: Vec<u64>,
    contributed_reward: Vec<f64>,
}

impl VisitLedger {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        let pairs = num_states * num_actions;
        let cells = pairs * num_states;
        Self {
            num_states,
            num_actions,
            own_counts: vec![0; cells],
            own_reward: vec![0.0; pairs],
            own_total: vec![0; pairs],
            aug_counts: vec![0; cells],
            aug_reward: vec![0.0; pairs],
            aug_total: vec![0; pairs],
            contributed_counts: vec![0; cells],
            contributed_reward: vec![0.0; pairs],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn pair(&self, state: usize, action: usize) -> usize {
        debug_assert!(state < self.num_states && action < self.num_actions);
        state * self.num_actions + action
    }

    fn cells(&self, state: usize, action: usize) -> std::ops::Range<usize> {
        let base = self.pair(state, action) * self.num_states;
        base..base + self.num_states
    }

    pub fn record(&mut self, state: usize, action: usize, reward: f64, next_state: usize) {
        let p = self.pair(state, action);
        self.own_counts[p * self.num_states + next_state] += 1;
        self.own_reward[p] += reward;
        self.own_total[p] += 1;
    }

    pub fn own_counts(&self, state: usize, action: usize) -> &[u64] {
        &self.own_counts[self.cells(state, action)]
    }

    pub fn own_reward(&self, state: usize, action: usize) -> f64 {
        self.own_reward[self.pair(state, action)]
    }

    pub fn own_total(&self, state: usize, action: usize) -> u64 {
        self.own_total[self.pair(state, action)]
    }

    pub fn aug_counts(&self, state: usize, action: usize) -> &[u64] {
        &self.aug_counts[self.cells(state, action)]
    }

    pub fn aug_reward(&self, state: usize, action: usize) -> f64 {
        self.aug_reward[self.pair(state, action)]
    }

    /// Own plus augmented visits.
    pub fn effective_total(&self, state: usize, action: usize) -> u64 {
        let p = self.pair(state, action);
        self.own_total[p] + self.aug_total[p]
    }

    /// Replaces the pair's augmented counts.
    pub fn set_aug(&mut self, state: usize, action: usize, counts: &[u64], reward: f64) {
        assert_eq!(counts.len(), self.num_states, "augmented counts must cover every state");
        let range = self.cells(state, action);
        self.aug_counts[range].copy_from_slice(counts);
        let p = self.pair(state, action);
        self.aug_reward[p] = reward;
        self.aug_total[p] = counts.iter().sum();
    }

    /// Own counts and reward not yet handed to the library.
    pub fn uncontributed(&self, state: usize, action: usize) -> (Vec<u64>, f64) {
        let range = self.cells(state, action);
        let counts = self.own_counts[range.clone()]
            .iter()
            .zip(&self.contributed_counts[range])
            .map(|(own, done)| own - done)
            .collect();
        let p = self.pair(state, action);
        (counts, self.own_reward[p] - self.contributed_reward[p])
    }

    /// Marks every own count of the pair as held by the library.
    pub fn mark_contributed(&mut self, state: usize, action: usize) {
        let range = self.cells(state, action);
        let (own, done) = (&self.own_counts[range.clone()], &mut self.contributed_counts[range]);
        done.copy_from_slice(own);
        let p = self.pair(state, action);
        self.contributed_reward[p] = self.own_reward[p];
    }

    /// Own visits already pooled into the library.
    pub fn contributed_total(&self, state: usize, action: usize) -> u64 {
        self.contributed_counts[self.cells(state, action)].iter().sum()
    }

    /// Maximum-likelihood dynamics from own plus augmented visits, or `None`
    /// for a pair never seen.
    pub fn estimate(&self, state: usize, action: usize) -> Option<(Vec<f64>, f64)> {
        let total = self.effective_total(state, action);
        if total == 0 {
            return None;
        }
        let n = total as f64;
        let range = self.cells(state, action);
        let probs = self.own_counts[range.clone()]
            .iter()
            .zip(&self.aug_counts[range])
            .map(|(o, a)| (o + a) as f64 / n)
            .collect();
        let reward = (self.own_reward(state, action) + self.aug_reward(state, action)) / n;
        Some((probs, reward.clamp(0.0, 1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn own_and_aug_are_separate() {
        let mut l = VisitLedger::new(2, 1);
        for _ in 0..400 {
            l.record(0, 0, 0.5, 0);
        }
        for _ in 0..100 {
            l.record(0, 0, 0.5, 1);
        }
        l.set_aug(0, 0, &[400, 100], 250.0);
        assert_eq!(l.own_total(0, 0), 500);
        assert_eq!(l.effective_total(0, 0), 1000);
        let (p, r) = l.estimate(0, 0).unwrap();
        assert_eq!(p, vec![0.8, 0.2]);
        assert_eq!(r, 0.5);
        assert_eq!(l.estimate(1, 0), None);
    }

    #[test]
    fn contribution_tracking() {
        let mut l = VisitLedger::new(3, 1);
        l.record(0, 0, 1.0, 2);
        l.record(0, 0, 1.0, 2);
        l.mark_contributed(0, 0);
        assert_eq!(l.contributed_total(0, 0), 2);
        l.record(0, 0, 1.0, 1);
        assert_eq!(l.uncontributed(0, 0), (vec![0, 1, 0], 1.0));
        l.set_aug(0, 0, &[5, 0, 0], 0.0);
        // Augmented visits are never pending contribution.
        assert_eq!(l.uncontributed(0, 0), (vec![0, 1, 0], 1.0));
    }
}
