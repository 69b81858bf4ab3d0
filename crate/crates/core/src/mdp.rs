//! Tabular Markov decision processes with exact solvers and a sampler.
//!
//! A [`TabularMdp`] stores the full model densely: an `S x A x S` transition
//! tensor, an `S x A` reward table with entries in `[0, 1]`, a start
//! distribution and a discount factor. The solvers here are used both by the
//! learners (planning in an induced model) and by tests as ground truth.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Row sums and start distributions must match 1 within this tolerance.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Default discount factor for experiments.
pub const DEFAULT_DISCOUNT: f64 = 0.95;
/// Default sup-norm tolerance for [`value_iteration`].
pub const DEFAULT_VI_TOLERANCE: f64 = 1e-6;
/// Default iteration cap for [`value_iteration`].
pub const DEFAULT_VI_MAX_ITERS: usize = 100_000;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MdpError {
    #[error("MDP must have at least one state and one action")]
    Empty,
    #[error("{what} has length {actual}, expected {expected}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("transition row ({state}, {action}) is not a distribution (sum {sum})")]
    BadRow { state: usize, action: usize, sum: f64 },
    #[error("reward r({state}, {action}) = {value} is outside [0, 1]")]
    BadReward { state: usize, action: usize, value: f64 },
    #[error("start distribution is not a distribution (sum {sum})")]
    BadStart { sum: f64 },
    #[error("discount {0} is outside (0, 1)")]
    BadDiscount(f64),
    #[error("policy selects action {action} in state {state} but the MDP has {num_actions} actions")]
    BadPolicy {
        state: usize,
        action: usize,
        num_actions: usize,
    },
    #[error("value iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("policy evaluation system is singular")]
    Singular,
}

/// A finite MDP with a fully known model.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    start_dist: Vec<f64>,
    discount: f64,
}

impl TabularMdp {
    /// Builds an MDP from a flat `S*A*S` transition tensor (row-major in
    /// `(state, action, next_state)`) and a flat `S*A` reward table.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        start_dist: Vec<f64>,
        discount: f64,
    ) -> Result<Self, MdpError> {
        if num_states == 0 || num_actions == 0 {
            return Err(MdpError::Empty);
        }
        let check_len = |what, expected, actual| {
            if expected == actual {
                Ok(())
            } else {
                Err(MdpError::Shape {
                    what,
                    expected,
                    actual,
                })
            }
        };
        check_len(
            "transition",
            num_states * num_actions * num_states,
            transition.len(),
        )?;
        check_len("reward", num_states * num_actions, reward.len())?;
        check_len("start_dist", num_states, start_dist.len())?;
        if !(discount > 0.0 && discount < 1.0) {
            return Err(MdpError::BadDiscount(discount));
        }
        for s in 0..num_states {
            for a in 0..num_actions {
                let base = (s * num_actions + a) * num_states;
                let row = &transition[base..base + num_states];
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > PROB_TOLERANCE || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(MdpError::BadRow {
                        state: s,
                        action: a,
                        sum,
                    });
                }
                let r = reward[s * num_actions + a];
                if !(0.0..=1.0).contains(&r) {
                    return Err(MdpError::BadReward {
                        state: s,
                        action: a,
                        value: r,
                    });
                }
            }
        }
        let start_sum: f64 = start_dist.iter().sum();
        if (start_sum - 1.0).abs() > PROB_TOLERANCE || start_dist.iter().any(|p| *p < 0.0) {
            return Err(MdpError::BadStart { sum: start_sum });
        }
        Ok(Self {
            num_states,
            num_actions,
            transition,
            reward,
            start_dist,
            discount,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn start_dist(&self) -> &[f64] {
        &self.start_dist
    }

    /// Largest attainable value, `1 / (1 - gamma)` for rewards in `[0, 1]`.
    pub fn v_max(&self) -> f64 {
        1.0 / (1.0 - self.discount)
    }

    /// `p(. | state, action)`.
    pub fn row(&self, state: usize, action: usize) -> &[f64] {
        let base = (state * self.num_actions + action) * self.num_states;
        &self.transition[base..base + self.num_states]
    }

    pub fn prob(&self, state: usize, action: usize, next: usize) -> f64 {
        self.row(state, action)[next]
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.reward[state * self.num_actions + action]
    }

    /// Copy of this MDP with a different discount factor.
    pub fn with_discount(&self, discount: f64) -> Result<Self, MdpError> {
        if !(discount > 0.0 && discount < 1.0) {
            return Err(MdpError::BadDiscount(discount));
        }
        Ok(Self {
            discount,
            ..self.clone()
        })
    }

    /// Sparse view of each row: `(next_state, probability)` for nonzero entries.
    fn sparse_rows(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.num_states * self.num_actions)
            .map(|sa| {
                let base = sa * self.num_states;
                self.transition[base..base + self.num_states]
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(j, p)| (j, *p))
                    .collect()
            })
            .collect()
    }

    fn check_policy(&self, policy: &Policy) -> Result<(), MdpError> {
        if policy.len() != self.num_states {
            return Err(MdpError::Shape {
                what: "policy",
                expected: self.num_states,
                actual: policy.len(),
            });
        }
        for (state, &action) in policy.actions().iter().enumerate() {
            if action >= self.num_actions {
                return Err(MdpError::BadPolicy {
                    state,
                    action,
                    num_actions: self.num_actions,
                });
            }
        }
        Ok(())
    }
}

/// The transition dynamics of a single state-action pair: the next-state
/// distribution together with the immediate reward.
#[derive(Debug, Clone, PartialEq)]
pub struct SaDynamics {
    pub probs: Vec<f64>,
    pub reward: f64,
}

impl SaDynamics {
    /// The length `S + 1` vector with the reward appended.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = self.probs.clone();
        v.push(self.reward);
        v
    }
}

pub fn sa_dynamics(mdp: &TabularMdp, state: usize, action: usize) -> SaDynamics {
    SaDynamics {
        probs: mdp.row(state, action).to_vec(),
        reward: mdp.reward(state, action),
    }
}

/// A deterministic stationary policy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    action_of: Vec<usize>,
}

impl Policy {
    pub fn new(action_of: Vec<usize>) -> Self {
        Self { action_of }
    }

    /// The policy that picks action 0 everywhere.
    pub fn uniform_first(num_states: usize) -> Self {
        Self {
            action_of: vec![0; num_states],
        }
    }

    pub fn action(&self, state: usize) -> usize {
        self.action_of[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.action_of
    }

    pub fn len(&self) -> usize {
        self.action_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.action_of.is_empty()
    }

    /// Enumerates all `A^S` deterministic policies. Only sensible for tiny MDPs.
    pub fn enumerate(num_states: usize, num_actions: usize) -> impl Iterator<Item = Policy> {
        let total = (num_actions as u64).pow(num_states as u32);
        (0..total).map(move |mut code| {
            let mut actions = Vec::with_capacity(num_states);
            for _ in 0..num_states {
                actions.push((code % num_actions as u64) as usize);
                code /= num_actions as u64;
            }
            Policy::new(actions)
        })
    }
}

/// Output of [`value_iteration`].
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: Vec<f64>,
    pub policy: Policy,
    pub iterations: usize,
    /// Sup-norm Bellman residual of `values`.
    pub residual: f64,
}

/// Optimal values and a greedy policy by value iteration started from zero.
///
/// Stops once successive iterates differ by at most `tolerance` in sup norm;
/// the returned values then have Bellman residual at most `gamma * tolerance`.
/// Greedy ties go to the lowest action index.
pub fn value_iteration(
    mdp: &TabularMdp,
    tolerance: f64,
    max_iters: usize,
) -> Result<Solution, MdpError> {
    value_iteration_from(mdp, vec![0.0; mdp.num_states], tolerance, max_iters)
}

/// [`value_iteration`] warm-started from `initial` values.
pub fn value_iteration_from(
    mdp: &TabularMdp,
    initial: Vec<f64>,
    tolerance: f64,
    max_iters: usize,
) -> Result<Solution, MdpError> {
    assert!(tolerance > 0.0, "tolerance must be positive");
    if initial.len() != mdp.num_states {
        return Err(MdpError::Shape {
            what: "initial values",
            expected: mdp.num_states,
            actual: initial.len(),
        });
    }
    let rows = mdp.sparse_rows();
    let (s_count, a_count, gamma) = (mdp.num_states, mdp.num_actions, mdp.discount);
    let mut values = initial;
    let mut next = vec![0.0; s_count];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        residual = 0.0;
        for s in 0..s_count {
            let mut best = f64::NEG_INFINITY;
            for a in 0..a_count {
                let q = q_value(&rows[s * a_count + a], mdp.reward(s, a), gamma, &values);
                if q > best {
                    best = q;
                }
            }
            residual = f64::max(residual, (best - values[s]).abs());
            next[s] = best;
        }
        std::mem::swap(&mut values, &mut next);
        if residual <= tolerance {
            break;
        }
    }
    if residual > tolerance {
        return Err(MdpError::NotConverged {
            iterations,
            residual,
        });
    }
    let mut actions = vec![0; s_count];
    let mut bellman_residual: f64 = 0.0;
    for s in 0..s_count {
        let mut best = f64::NEG_INFINITY;
        for a in 0..a_count {
            let q = q_value(&rows[s * a_count + a], mdp.reward(s, a), gamma, &values);
            if q > best {
                best = q;
                actions[s] = a;
            }
        }
        bellman_residual = bellman_residual.max((best - values[s]).abs());
    }
    Ok(Solution {
        values,
        policy: Policy::new(actions),
        iterations,
        residual: bellman_residual,
    })
}

fn q_value(row: &[(usize, f64)], reward: f64, gamma: f64, values: &[f64]) -> f64 {
    reward + gamma * row.iter().map(|&(j, p)| p * values[j]).sum::<f64>()
}

/// Exact `V^pi` from the linear system `(I - gamma P_pi) V = r_pi`.
pub fn policy_evaluation(mdp: &TabularMdp, policy: &Policy) -> Result<Vec<f64>, MdpError> {
    mdp.check_policy(policy)?;
    let n = mdp.num_states;
    let gamma = mdp.discount;
    let mut lhs = DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for s in 0..n {
        let a = policy.action(s);
        rhs[s] = mdp.reward(s, a);
        for (j, p) in mdp.row(s, a).iter().enumerate() {
            lhs[(s, j)] -= gamma * p;
        }
    }
    let solution = lhs.lu().solve(&rhs).ok_or(MdpError::Singular)?;
    Ok(solution.iter().copied().collect())
}

/// Samples `s' ~ p(. | state, action)`. Consumes exactly one uniform draw.
pub fn step<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    state: usize,
    action: usize,
    rng: &mut R,
) -> (usize, f64) {
    let next = sample_index(mdp.row(state, action), rng);
    (next, mdp.reward(state, action))
}

/// Draws an index from a probability vector with one uniform draw.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    // Rounding left `acc` a hair under 1.
    last_positive
}

/// One recorded transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeTrace {
    pub transitions: Vec<Transition>,
    pub undiscounted_return: f64,
    pub discounted_return: f64,
}

impl EpisodeTrace {
    pub fn push(&mut self, t: Transition, gamma: f64) {
        let k = self.transitions.len() as i32;
        self.undiscounted_return += t.reward;
        self.discounted_return += gamma.powi(k) * t.reward;
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

/// Runs `policy` from a start state drawn from the start distribution.
///
/// The episode stops after `max_steps` transitions, or right after acting in
/// a state for which `is_terminal` holds.
pub fn rollout<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &Policy,
    max_steps: usize,
    is_terminal: impl Fn(usize) -> bool,
    rng: &mut R,
) -> EpisodeTrace {
    let mut trace = EpisodeTrace::default();
    let mut state = sample_index(mdp.start_dist(), rng);
    for _ in 0..max_steps {
        let action = policy.action(state);
        let (next_state, reward) = step(mdp, state, action, rng);
        trace.push(
            Transition {
                state,
                action,
                reward,
                next_state,
            },
            mdp.discount(),
        );
        if is_terminal(state) {
            break;
        }
        state = next_state;
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_state(reward: f64, gamma: f64) -> TabularMdp {
        TabularMdp::new(1, 1, vec![1.0], vec![reward], vec![1.0], gamma).unwrap()
    }

    /// Two-state chain: state 0 moves to 1, state 1 self-loops with reward 1.
    fn chain(gamma: f64) -> TabularMdp {
        TabularMdp::new(
            2,
            1,
            vec![0.0, 1.0, 0.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            gamma,
        )
        .unwrap()
    }

    #[test]
    fn rejects_invalid_models() {
        assert_eq!(
            TabularMdp::new(1, 1, vec![0.5], vec![0.0], vec![1.0], 0.9),
            Err(MdpError::BadRow {
                state: 0,
                action: 0,
                sum: 0.5
            })
        );
        assert!(matches!(
            TabularMdp::new(1, 1, vec![1.0], vec![1.5], vec![1.0], 0.9),
            Err(MdpError::BadReward { .. })
        ));
        assert!(matches!(
            TabularMdp::new(1, 1, vec![1.0], vec![0.5], vec![1.0], 1.0),
            Err(MdpError::BadDiscount(_))
        ));
        assert!(matches!(
            TabularMdp::new(2, 1, vec![1.0], vec![0.5], vec![1.0], 0.5),
            Err(MdpError::Shape { .. })
        ));
    }

    #[test]
    fn single_state_value_is_geometric_series() {
        let sol = value_iteration(&single_state(1.0, 0.9), 1e-10, 10_000).unwrap();
        assert_relative_eq!(sol.values[0], 10.0, epsilon = 1e-8);
    }

    #[test]
    fn zero_rewards_give_zero_values() {
        let mdp = TabularMdp::new(
            2,
            2,
            vec![0.5, 0.5, 1.0, 0.0, 0.0, 1.0, 0.3, 0.7],
            vec![0.0; 4],
            vec![1.0, 0.0],
            0.95,
        )
        .unwrap();
        let sol = value_iteration(&mdp, 1e-8, 1000).unwrap();
        assert!(sol.values.iter().all(|v| *v == 0.0));
        assert_eq!(sol.policy.actions(), &[0, 0]);
    }

    #[test]
    fn chain_policy_evaluation_by_hand() {
        let v = policy_evaluation(&chain(0.5), &Policy::new(vec![0, 0])).unwrap();
        assert_relative_eq!(v[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(v[0], 0.5 * v[1], epsilon = 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let err = value_iteration(&single_state(1.0, 0.99), 1e-12, 5).unwrap_err();
        match err {
            MdpError::NotConverged {
                iterations,
                residual,
            } => {
                assert_eq!(iterations, 5);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_policy_is_rejected() {
        assert!(matches!(
            policy_evaluation(&chain(0.5), &Policy::new(vec![0, 3])),
            Err(MdpError::BadPolicy { state: 1, .. })
        ));
    }

    #[test]
    fn one_hot_row_always_samples_hot_index() {
        let mdp = TabularMdp::new(
            3,
            1,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            vec![0.0; 3],
            vec![1.0, 0.0, 0.0],
            0.9,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            assert_eq!(step(&mdp, 0, 0, &mut rng).0, 2);
        }
    }

    #[test]
    fn empirical_frequencies_match_row() {
        let mdp = TabularMdp::new(
            2,
            1,
            vec![0.8, 0.2, 0.8, 0.2],
            vec![0.0; 2],
            vec![1.0, 0.0],
            0.9,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let zeros = (0..n).filter(|_| step(&mdp, 0, 0, &mut rng).0 == 0).count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.8).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn fixed_seed_reproduces_samples() {
        let mdp = TabularMdp::new(
            3,
            1,
            vec![0.2, 0.3, 0.5, 0.2, 0.3, 0.5, 0.2, 0.3, 0.5],
            vec![0.0; 3],
            vec![1.0, 0.0, 0.0],
            0.9,
        )
        .unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..200).map(|_| step(&mdp, 0, 0, &mut rng).0).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn identity_mdp_dynamics_are_one_hot() {
        let n = 4;
        let mut t = vec![0.0; n * n];
        for s in 0..n {
            t[s * n + s] = 1.0;
        }
        let mdp = TabularMdp::new(n, 1, t, vec![0.25; n], vec![0.25; n], 0.9).unwrap();
        for s in 0..n {
            let d = sa_dynamics(&mdp, s, 0);
            assert_eq!(d.probs.iter().filter(|p| **p == 1.0).count(), 1);
            assert_eq!(d.probs[s], 1.0);
            assert_eq!(d.to_vector().len(), n + 1);
        }
    }

    #[test]
    fn rollout_stops_after_acting_in_terminal() {
        let mdp = chain(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = rollout(&mdp, &Policy::new(vec![0, 0]), 30, |s| s == 1, &mut rng);
        assert_eq!(trace.len(), 2);
        assert_eq!(trace.undiscounted_return, 1.0);
        assert_relative_eq!(trace.discounted_return, 0.5);
    }

    #[test]
    fn enumerates_all_policies() {
        let all: Vec<_> = Policy::enumerate(3, 2).collect();
        assert_eq!(all.len(), 8);
        let unique: std::collections::HashSet<_> = all.into_iter().collect();
        assert_eq!(unique.len(), 8);
    }
}
