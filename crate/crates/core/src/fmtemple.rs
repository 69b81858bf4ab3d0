//! Finite-model template learning.
//!
//! When tasks are drawn from a small set of underlying MDPs, the first `T1`
//! tasks are learned online and their visit counts are clustered into
//! models. Each later task starts with every model's score at `η`; whenever
//! a pair is identified, models whose signature at that pair disagrees with
//! the pair's rough template lose a point. Once a single model is left, every
//! pair borrows its visits at once. If every model is ruled out the task
//! carries on as plain online learning.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::learners::{LearnError, VisitLedger};
use crate::mdp::Transition;
use crate::otemple::{OTemple, OTempleConfig, TaskLearner};
use crate::session::{run_episodes, Agent, EpisodicTask, Horizon, MultiTaskLearner, TaskMetrics};
use crate::template::{gen_tt, tt_distance, RankingPermutation, TransitionTemplate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmTempleConfig {
    pub otemple: OTempleConfig,
    /// Number of tasks `T1` learned online before clustering.
    pub phase1_tasks: usize,
    /// Model gap `Γ` used when clustering.
    pub model_gap: f64,
    /// Starting score `η` of every model.
    pub initial_score: f64,
    /// Off: later tasks skip model identification and run online learning.
    pub model_identification: bool,
}

impl Default for FmTempleConfig {
    fn default() -> Self {
        Self {
            otemple: OTempleConfig::default(),
            phase1_tasks: 15,
            model_gap: 0.6,
            initial_score: 1.0,
            model_identification: true,
        }
    }
}

/// True when a pair's template and ranking disagree with a model's.
///
/// Templates agree when strictly closer than `gap`. Rankings agree up to
/// reordering among ranks whose model probabilities are within `gap` of
/// each other, so sampling noise between near-equal entries is ignored.
pub fn signature_mismatch(
    template: &TransitionTemplate,
    sigma: &RankingPermutation,
    model_template: &TransitionTemplate,
    model_sigma: &RankingPermutation,
    gap: f64,
) -> bool {
    tt_distance(template, model_template) >= gap
        || !sigma.almost_same(model_sigma, model_template.probs(), gap)
}

/// A group of tasks believed to share one MDP, with their pooled counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCluster {
    num_states: usize,
    num_actions: usize,
    counts: Vec<u64>,
    rewards: Vec<f64>,
    signatures: Vec<Option<(TransitionTemplate, RankingPermutation)>>,
    members: Vec<usize>,
}

impl ModelCluster {
    fn new(num_states: usize, num_actions: usize) -> Self {
        let pairs = num_states * num_actions;
        Self {
            num_states,
            num_actions,
            counts: vec![0; pairs * num_states],
            rewards: vec![0.0; pairs],
            signatures: vec![None; pairs],
            members: Vec::new(),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.num_states, self.num_actions)
    }

    pub fn counts(&self, state: usize, action: usize) -> &[u64] {
        let base = (state * self.num_actions + action) * self.num_states;
        &self.counts[base..base + self.num_states]
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[state * self.num_actions + action]
    }

    pub fn total(&self, state: usize, action: usize) -> u64 {
        self.counts(state, action).iter().sum()
    }

    pub fn signature(&self, state: usize, action: usize) -> Option<&(TransitionTemplate, RankingPermutation)> {
        self.signatures[state * self.num_actions + action].as_ref()
    }

    fn absorb(&mut self, index: usize, ledger: &VisitLedger) -> Result<(), LearnError> {
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let p = s * self.num_actions + a;
                let base = p * self.num_states;
                for (c, o) in self.counts[base..base + self.num_states]
                    .iter_mut()
                    .zip(ledger.own_counts(s, a))
                {
                    *c += o;
                }
                self.rewards[p] += ledger.own_reward(s, a);
                if self.total(s, a) > 0 {
                    let (g, _, sigma) = gen_tt(self.counts(s, a), self.rewards[p])?;
                    self.signatures[p] = Some((g, sigma));
                }
            }
        }
        self.members.push(index);
        Ok(())
    }

    /// Whether a task's visits agree with this model at every pair both have
    /// seen at least `min_visits` times.
    fn matches(
        &self,
        ledger: &VisitLedger,
        gap: f64,
        min_visits: u64,
    ) -> Result<bool, LearnError> {
        if (ledger.num_states(), ledger.num_actions()) != self.shape() {
            return Ok(false);
        }
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                if ledger.own_total(s, a) < min_visits || self.total(s, a) < min_visits {
                    continue;
                }
                let (g, _, sigma) = gen_tt(ledger.own_counts(s, a), ledger.own_reward(s, a))?;
                let (mg, msigma) = self.signature(s, a).expect("visited pairs have a signature");
                if signature_mismatch(&g, &sigma, mg, msigma, gap) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Greedy sequential clustering: each task joins the first cluster it
/// matches under `gap`, or starts a new one.
pub fn cluster_models(
    ledgers: &[VisitLedger],
    gap: f64,
    min_visits: u64,
) -> Result<Vec<ModelCluster>, LearnError> {
    let mut clusters: Vec<ModelCluster> = Vec::new();
    for (index, ledger) in ledgers.iter().enumerate() {
        let mut joined = None;
        for (c, cluster) in clusters.iter().enumerate() {
            if cluster.matches(ledger, gap, min_visits)? {
                joined = Some(c);
                break;
            }
        }
        let c = match joined {
            Some(c) => c,
            None => {
                clusters.push(ModelCluster::new(ledger.num_states(), ledger.num_actions()));
                clusters.len() - 1
            }
        };
        clusters[c].absorb(index, ledger)?;
    }
    Ok(clusters)
}

/// Takes one point from every live model whose signature at `pair`
/// disagrees with the pair's freshly identified template and ranking.
/// Models that saw the pair fewer than `min_visits` times are not judged.
pub fn penalize(
    scores: &mut [f64],
    clusters: &[ModelCluster],
    pair: (usize, usize),
    identified: (&TransitionTemplate, &RankingPermutation),
    gap: f64,
    min_visits: u64,
) {
    let (state, action) = pair;
    for (score, cluster) in scores.iter_mut().zip(clusters) {
        if *score <= 0.0 || cluster.total(state, action) < min_visits {
            continue;
        }
        let (mg, msigma) = cluster.signature(state, action).expect("visited pairs have a signature");
        if signature_mismatch(identified.0, identified.1, mg, msigma, gap) {
            *score -= 1.0;
        }
    }
}

/// How model identification went on one later task.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase2Report {
    pub scores: Vec<f64>,
    /// Cluster chosen, and the step at which every pair borrowed from it.
    pub identified: Option<(usize, u64)>,
    /// Every model was ruled out.
    pub fell_back: bool,
}

struct FmAgent<'a> {
    inner: TaskLearner<'a>,
    clusters: &'a [ModelCluster],
    config: &'a FmTempleConfig,
    scores: Vec<f64>,
    identified: Option<(usize, u64)>,
    fell_back: bool,
    steps: u64,
}

impl FmAgent<'_> {
    fn score(&mut self, state: usize, action: usize) -> Result<(), LearnError> {
        let id = self
            .inner
            .identification(state, action)
            .expect("scored pairs are identified")
            .clone();
        penalize(
            &mut self.scores,
            self.clusters,
            (state, action),
            (&id.estimate, &id.sigma),
            self.config.otemple.user_gap,
            self.config.otemple.small_threshold,
        );
        let mut alive = self.scores.iter().enumerate().filter(|(_, u)| **u > 0.0);
        match (alive.next(), alive.next()) {
            (Some((c, _)), None) => self.bulk_augment(c),
            (None, _) => {
                self.fell_back = true;
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Lends every pair not yet identified the visits of `cluster`, through
    /// the library template nearest to the model's own when one is close.
    fn bulk_augment(&mut self, c: usize) -> Result<(), LearnError> {
        let cluster = &self.clusters[c];
        let (n_s, n_a) = cluster.shape();
        let gap = self.config.otemple.user_gap;
        for s in 0..n_s {
            for a in 0..n_a {
                if self.inner.identification(s, a).is_some() {
                    continue;
                }
                let Some((mg, msigma)) = cluster.signature(s, a) else { continue };
                let borrowed = self
                    .inner
                    .library()
                    .find_closest(mg, gap)
                    .and_then(|index| self.inner.library().augment(index, msigma).ok());
                let (counts, reward) = borrowed.unwrap_or_else(|| (cluster.counts(s, a).to_vec(), cluster.reward(s, a)));
                self.inner.rmax_mut().ledger_mut().set_aug(s, a, &counts, reward);
            }
        }
        let rmax = self.inner.rmax_mut();
        let mut added = false;
        for s in 0..n_s {
            for a in 0..n_a {
                added |= rmax.mark_if_ready(s, a);
            }
        }
        if added {
            rmax.update_policy()?;
        }
        self.identified = Some((c, self.steps));
        Ok(())
    }
}

impl Agent for FmAgent<'_> {
    fn act<R: Rng + ?Sized>(&mut self, state: usize, rng: &mut R) -> usize {
        self.inner.act(state, rng)
    }

    fn observe(&mut self, t: &Transition) -> Result<(), LearnError> {
        self.steps += 1;
        let identified = self.inner.step(t)?;
        if identified && self.identified.is_none() && !self.fell_back {
            self.score(t.state, t.action)?;
        }
        Ok(())
    }

    fn is_known(&self, state: usize, action: usize) -> bool {
        self.inner.is_known(state, action)
    }

    fn own_total(&self, state: usize, action: usize) -> u64 {
        self.inner.own_total(state, action)
    }

    fn num_known(&self) -> usize {
        self.inner.num_known()
    }
}

/// The finite-model learner.
#[derive(Debug, Clone, Default)]
pub struct FmTemple {
    config: FmTempleConfig,
    online: OTemple,
    collected: Vec<VisitLedger>,
    clusters: Option<Vec<ModelCluster>>,
    last_report: Option<Phase2Report>,
}

impl FmTemple {
    pub fn new(config: FmTempleConfig) -> Self {
        Self {
            config,
            online: OTemple::new(config.otemple),
            collected: Vec::new(),
            clusters: None,
            last_report: None,
        }
    }

    pub fn config(&self) -> &FmTempleConfig {
        &self.config
    }

    pub fn online(&self) -> &OTemple {
        &self.online
    }

    /// Clusters formed after the first `T1` tasks, once they exist.
    pub fn clusters(&self) -> Option<&[ModelCluster]> {
        self.clusters.as_deref()
    }

    /// Ledgers kept from the first `T1` tasks.
    pub fn collected(&self) -> &[VisitLedger] {
        &self.collected
    }

    /// Model identification outcome of the most recent later task.
    pub fn last_report(&self) -> Option<&Phase2Report> {
        self.last_report.as_ref()
    }

    fn run_phase2<R: Rng + ?Sized>(
        &mut self,
        task: &EpisodicTask,
        horizon: Horizon,
        rng: &mut R,
    ) -> Result<TaskMetrics, LearnError> {
        let clusters = self.clusters.as_deref().expect("clusters exist in phase 2");
        let shape = (task.num_states(), task.num_actions());
        let scores = clusters
            .iter()
            .map(|c| if c.shape() == shape { self.config.initial_score } else { 0.0 })
            .collect();
        let (otemple_config, library) = self.online.parts();
        let mut agent = FmAgent {
            inner: TaskLearner::new(otemple_config, library, shape.0, shape.1),
            clusters,
            config: &self.config,
            scores,
            identified: None,
            fell_back: false,
            steps: 0,
        };
        let mut metrics = run_episodes(&mut agent, task, horizon, otemple_config.small_threshold, rng)?;
        let report = Phase2Report {
            scores: agent.scores,
            identified: agent.identified,
            fell_back: agent.fell_back,
        };
        agent.inner.finish()?;
        metrics.num_templates = self.online.library().len();
        self.last_report = Some(report);
        Ok(metrics)
    }
}

impl MultiTaskLearner for FmTemple {
    fn name(&self) -> &'static str {
        "fmtemple"
    }

    fn run_task(
        &mut self,
        task: &EpisodicTask,
        horizon: Horizon,
        rng: &mut ChaCha8Rng,
    ) -> Result<TaskMetrics, LearnError> {
        if self.collected.len() < self.config.phase1_tasks || !self.config.model_identification {
            let (metrics, ledger) = self.online.run_task_with_ledger(task, horizon, rng)?;
            if self.collected.len() < self.config.phase1_tasks {
                self.collected.push(ledger);
            }
            return Ok(metrics);
        }
        if self.clusters.is_none() {
            self.clusters = Some(cluster_models(
                &self.collected,
                self.config.model_gap,
                self.config.otemple.small_threshold,
            )?);
        }
        self.run_phase2(task, horizon, rng)
    }

    fn num_templates(&self) -> usize {
        self.online.library().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatch_cases() {
        let g = TransitionTemplate::new(vec![0.8, 0.2], 0.0).unwrap();
        let id = RankingPermutation::identity(3);
        assert!(!signature_mismatch(&g, &id, &g, &id, 0.15));
        let swapped = RankingPermutation::from_rank_to_index(vec![1, 0, 2]).unwrap();
        assert!(signature_mismatch(&g, &swapped, &g, &id, 0.15));
        let g2 = TransitionTemplate::new(vec![0.6, 0.2, 0.2], 0.0).unwrap();
        assert!(signature_mismatch(&g, &id, &g2, &id, 0.15));
        // Near-tied entries may come out in either order.
        let near = TransitionTemplate::new(vec![0.6, 0.21, 0.19], 0.0).unwrap();
        let other = RankingPermutation::from_rank_to_index(vec![0, 2, 1]).unwrap();
        assert!(!signature_mismatch(&near, &other, &g2, &id, 0.15));
    }

    fn ledger_from(rows: &[(usize, usize, &[u64], f64)], n_s: usize, n_a: usize) -> VisitLedger {
        let mut l = VisitLedger::new(n_s, n_a);
        for &(s, a, counts, r) in rows {
            let total: u64 = counts.iter().sum();
            for (next, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    l.record(s, a, r / total as f64, next);
                }
            }
        }
        l
    }

    #[test]
    fn clustering_separates_reward_difference() {
        let a = ledger_from(&[(0, 0, &[60, 0], 0.0), (1, 0, &[0, 60], 0.0)], 2, 1);
        let b = ledger_from(&[(0, 0, &[60, 0], 0.0), (1, 0, &[0, 60], 60.0)], 2, 1);
        let clusters = cluster_models(&[a.clone(), b.clone(), a.clone(), b], 0.6, 50).unwrap();
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].members(), &[0, 2]);
        assert_eq!(clusters[0].total(0, 0), 120);
        let all_same = cluster_models(&[a.clone(), a], 0.6, 50).unwrap();
        assert_eq!(all_same.len(), 1);
    }

    #[test]
    fn large_gap_merges_everything_but_rankings() {
        let a = ledger_from(&[(0, 0, &[60, 0], 0.0)], 2, 1);
        let b = ledger_from(&[(0, 0, &[60, 0], 60.0)], 2, 1);
        assert_eq!(cluster_models(&[a, b], 2.5, 50).unwrap().len(), 1);
    }

    #[test]
    fn under_visited_pairs_do_not_split() {
        let a = ledger_from(&[(0, 0, &[60, 0], 0.0), (1, 0, &[0, 10], 0.0)], 2, 1);
        let b = ledger_from(&[(0, 0, &[60, 0], 0.0), (1, 0, &[0, 10], 10.0)], 2, 1);
        assert_eq!(cluster_models(&[a, b], 0.6, 50).unwrap().len(), 1);
    }
}
