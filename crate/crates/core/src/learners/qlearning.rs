use rand::Rng;

/// Tabular Q-learning hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QConfig {
    pub learning_rate: f64,
    pub exploration: f64,
    pub discount: f64,
    /// Starting value of every entry; `None` means `V_max`.
    pub initial_value: Option<f64>,
}

impl Default for QConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            exploration: 0.1,
            discount: crate::mdp::DEFAULT_DISCOUNT,
            initial_value: None,
        }
    }
}

/// Epsilon-greedy Q-learning with optimistic initialisation.
#[derive(Debug, Clone)]
pub struct QLearner {
    config: QConfig,
    num_actions: usize,
    q: Vec<f64>,
    v_max: f64,
}

impl QLearner {
    pub fn new(num_states: usize, num_actions: usize, config: QConfig) -> Self {
        let v_max = 1.0 / (1.0 - config.discount);
        let init = config.initial_value.unwrap_or(v_max);
        Self {
            config,
            num_actions,
            q: vec![init; num_states * num_actions],
            v_max,
        }
    }

    pub fn q(&self, state: usize, action: usize) -> f64 {
        self.q[state * self.num_actions + action]
    }

    fn row(&self, state: usize) -> &[f64] {
        &self.q[state * self.num_actions..(state + 1) * self.num_actions]
    }

    /// Greedy action, ties to the lowest index.
    pub fn greedy(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for a in 1..row.len() {
            if row[a] > row[best] {
                best = a;
            }
        }
        best
    }

    /// Epsilon-greedy choice. Always draws one uniform, plus one more for the
    /// random action when exploring.
    pub fn select<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        if rng.random::<f64>() < self.config.exploration {
            rng.random_range(0..self.num_actions)
        } else {
            self.greedy(state)
        }
    }

    /// One temporal-difference update toward `r + gamma * max_a' q(s', a')`.
    pub fn update(&mut self, state: usize, action: usize, reward: f64, next_state: usize) {
        let target = reward + self.config.discount * self.row(next_state)[self.greedy(next_state)];
        let alpha = self.config.learning_rate;
        let entry = &mut self.q[state * self.num_actions + action];
        *entry = ((1.0 - alpha) * *entry + alpha * target).clamp(0.0, self.v_max);
    }
}
