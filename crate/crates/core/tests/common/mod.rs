//! Helpers shared by the integration tests: random small MDPs and oracles
//! written without touching the library's solvers.
#![allow(dead_code)]

use proptest::prelude::*;
use temple::mdp::TabularMdp;

/// Raw material for a random MDP: positive weights for every transition row
/// (normalised later), rewards and a discount.
#[derive(Debug, Clone)]
pub struct RawMdp {
    pub states: usize,
    pub actions: usize,
    pub weights: Vec<f64>,
    pub rewards: Vec<f64>,
    pub discount: f64,
}

impl RawMdp {
    pub fn transition(&self) -> Vec<f64> {
        let s = self.states;
        let mut t = self.weights.clone();
        for row in t.chunks_mut(s) {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= total);
        }
        t
    }

    pub fn build(&self) -> TabularMdp {
        let mut start = vec![0.0; self.states];
        start[0] = 1.0;
        TabularMdp::new(
            self.states,
            self.actions,
            self.transition(),
            self.rewards.clone(),
            start,
            self.discount,
        )
        .expect("generated MDPs are valid")
    }
}

/// MDPs with up to `max_states` states and `max_actions` actions. Roughly a
/// third of the transition weights are zero so sparse rows appear too.
pub fn small_mdp(max_states: usize, max_actions: usize) -> impl Strategy<Value = RawMdp> {
    (1..=max_states, 1..=max_actions).prop_flat_map(|(s, a)| {
        let weight = prop_oneof![1 => Just(0.0), 2 => 0.05f64..1.0];
        (
            Just(s),
            Just(a),
            prop::collection::vec(weight, s * a * s),
            prop::collection::vec(0.0f64..=1.0, s * a),
            0.5f64..0.95,
            prop::collection::vec(0usize..s, s * a),
        )
            .prop_map(|(states, actions, mut weights, rewards, discount, fallback)| {
                // Guarantee every row has some mass.
                for (row, &j) in weights.chunks_mut(states).zip(&fallback) {
                    if row.iter().all(|&w| w == 0.0) {
                        row[j] = 1.0;
                    }
                }
                RawMdp {
                    states,
                    actions,
                    weights,
                    rewards,
                    discount,
                }
            })
    })
}

/// Value of a deterministic policy by plain fixed-point iteration, run far
/// past convergence.
pub fn iterate_policy_value(mdp: &TabularMdp, actions: &[usize]) -> Vec<f64> {
    let n = mdp.num_states();
    let g = mdp.discount();
    let mut v = vec![0.0; n];
    let sweeps = ((1e-13f64).ln() / g.ln()).ceil() as usize + 10;
    for _ in 0..sweeps {
        v = (0..n)
            .map(|s| {
                let a = actions[s];
                mdp.reward(s, a) + g * (0..n).map(|j| mdp.prob(s, a, j) * v[j]).sum::<f64>()
            })
            .collect();
    }
    v
}

/// Every deterministic policy as an action vector.
pub fn all_policies(states: usize, actions: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..states {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..actions).map(move |a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn l2(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    (0..n).map(|i| (at(a, i) - at(b, i)).powi(2)).sum::<f64>().sqrt()
}
