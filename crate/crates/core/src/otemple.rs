//! Online template learning over RMax.
//!
//! Within a task the agent behaves as RMax. When a state-action pair reaches
//! `m_s` own visits its rough template is compared with the library: if some
//! template lies within the gap `τ̂`, the pair borrows that template's pooled
//! visits (mapped back through the pair's ranking permutation) and adds its
//! own visits to the pool; otherwise it founds a new template. Borrowed
//! visits count toward the known threshold `m`, so pairs whose dynamics were
//! seen before become known after far fewer own visits. At the end of a task
//! every identified pair hands its remaining own visits to its template.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::learners::{LearnError, RMaxConfig, RMaxLearner, VisitLedger};
use crate::mdp::Transition;
use crate::session::{run_episodes, Agent, EpisodicTask, Horizon, MultiTaskLearner, TaskMetrics};
use crate::template::{gen_tt, RankingPermutation, TemplateError, TemplateLibrary, TransitionTemplate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OTempleConfig {
    pub rmax: RMaxConfig,
    /// Own visits `m_s` at which a pair's template is identified.
    pub small_threshold: u64,
    /// Templates closer than this (strictly) are treated as the same.
    pub user_gap: f64,
    /// With templates off the learner is exactly single-task RMax, except
    /// that the library is left empty.
    pub templates_enabled: bool,
    /// Identify pairs that became known through borrowed visits before
    /// reaching `m_s` own visits. Turning this off skips them.
    pub identify_when_known: bool,
}

impl Default for OTempleConfig {
    fn default() -> Self {
        Self {
            rmax: RMaxConfig::default(),
            small_threshold: 50,
            user_gap: 0.15,
            templates_enabled: true,
            identify_when_known: true,
        }
    }
}

/// A pair's identification: which template it joined and the ranking of its
/// own visits at that time, which stays fixed for the rest of the task.
#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub template: usize,
    pub sigma: RankingPermutation,
    /// The pair's rough template from its first `m_s` visits.
    pub estimate: TransitionTemplate,
}

/// Per-task state of the online learner, borrowing the shared library.
#[derive(Debug)]
pub struct TaskLearner<'a> {
    config: &'a OTempleConfig,
    library: &'a mut TemplateLibrary,
    rmax: RMaxLearner,
    identified: Vec<Option<Identification>>,
    num_actions: usize,
}

impl<'a> TaskLearner<'a> {
    pub fn new(
        config: &'a OTempleConfig,
        library: &'a mut TemplateLibrary,
        num_states: usize,
        num_actions: usize,
    ) -> Self {
        Self {
            config,
            library,
            rmax: RMaxLearner::new(num_states, num_actions, config.rmax),
            identified: vec![None; num_states * num_actions],
            num_actions,
        }
    }

    pub fn rmax(&self) -> &RMaxLearner {
        &self.rmax
    }

    pub fn rmax_mut(&mut self) -> &mut RMaxLearner {
        &mut self.rmax
    }

    pub fn library(&self) -> &TemplateLibrary {
        self.library
    }

    pub fn config(&self) -> &OTempleConfig {
        self.config
    }

    pub fn identification(&self, state: usize, action: usize) -> Option<&Identification> {
        self.identified[state * self.num_actions + action].as_ref()
    }

    /// Records a transition, identifying the pair if it just reached `m_s`
    /// own visits and replanning if it just became known. Returns whether an
    /// identification took place.
    pub fn step(&mut self, t: &Transition) -> Result<bool, LearnError> {
        let (s, a) = (t.state, t.action);
        self.rmax.record(s, a, t.reward, t.next_state);
        let identified = self.config.templates_enabled
            && self.rmax.ledger().own_total(s, a) == self.config.small_threshold
            && self.identified[s * self.num_actions + a].is_none()
            && (self.config.identify_when_known || !self.rmax.is_known(s, a));
        if identified {
            self.identify(s, a)?;
        }
        self.rmax.try_mark_known(s, a)?;
        Ok(identified)
    }

    /// Matches the pair's rough template against the library.
    pub fn identify(&mut self, state: usize, action: usize) -> Result<usize, LearnError> {
        let ledger = self.rmax.ledger();
        let counts = ledger.own_counts(state, action).to_vec();
        let reward = ledger.own_reward(state, action);
        let (estimate, record, sigma) = gen_tt(&counts, reward)?;
        let template = match self.library.find_closest(&estimate, self.config.user_gap) {
            None => self.library.insert(estimate.clone(), record),
            Some(index) => {
                // Borrow the pool as it was before this pair's own visits join
                // it, so they are not counted twice in the estimate.
                let borrowed = self.library.augment(index, &sigma);
                self.library.tt_update(index, &counts, reward)?;
                match borrowed {
                    Ok((aug, aug_reward)) => {
                        self.rmax.ledger_mut().set_aug(state, action, &aug, aug_reward)
                    }
                    // A template whose support exceeds this task's state count
                    // cannot be mapped onto it; the pair learns on its own.
                    Err(TemplateError::LengthMismatch { .. }) => {}
                    Err(e) => return Err(e.into()),
                }
                index
            }
        };
        self.rmax.ledger_mut().mark_contributed(state, action);
        self.identified[state * self.num_actions + action] = Some(Identification {
            template,
            sigma,
            estimate,
        });
        Ok(template)
    }

    /// Hands each identified pair's not-yet-pooled own visits to its
    /// template, ordered by the pair's frozen ranking. Returns the ledger.
    pub fn finish(mut self) -> Result<VisitLedger, LearnError> {
        let n_a = self.num_actions;
        for (p, id) in self.identified.iter().enumerate() {
            let Some(id) = id else { continue };
            let (s, a) = (p / n_a, p % n_a);
            let (delta, reward) = self.rmax.ledger().uncontributed(s, a);
            self.library.contribute(id.template, &delta, reward, &id.sigma)?;
            self.rmax.ledger_mut().mark_contributed(s, a);
        }
        let ledger = self.rmax.ledger().clone();
        Ok(ledger)
    }
}

impl Agent for TaskLearner<'_> {
    fn act<R: Rng + ?Sized>(&mut self, state: usize, _rng: &mut R) -> usize {
        self.rmax.act(state)
    }

    fn observe(&mut self, t: &Transition) -> Result<(), LearnError> {
        self.step(t).map(|_| ())
    }

    fn is_known(&self, state: usize, action: usize) -> bool {
        self.rmax.is_known(state, action)
    }

    fn own_total(&self, state: usize, action: usize) -> u64 {
        self.rmax.ledger().own_total(state, action)
    }

    fn num_known(&self) -> usize {
        self.rmax.num_known()
    }
}

/// The online multi-task learner: a template library kept across tasks.
#[derive(Debug, Clone, Default)]
pub struct OTemple {
    config: OTempleConfig,
    library: TemplateLibrary,
}

impl OTemple {
    pub fn new(config: OTempleConfig) -> Self {
        Self {
            config,
            library: TemplateLibrary::new(),
        }
    }

    pub fn with_library(config: OTempleConfig, library: TemplateLibrary) -> Self {
        Self { config, library }
    }

    pub fn config(&self) -> &OTempleConfig {
        &self.config
    }

    pub fn library(&self) -> &TemplateLibrary {
        &self.library
    }

    pub(crate) fn parts(&mut self) -> (&OTempleConfig, &mut TemplateLibrary) {
        (&self.config, &mut self.library)
    }

    /// Learns one task and also returns its final visit ledger.
    pub fn run_task_with_ledger<R: Rng + ?Sized>(
        &mut self,
        task: &EpisodicTask,
        horizon: Horizon,
        rng: &mut R,
    ) -> Result<(TaskMetrics, VisitLedger), LearnError> {
        let mut learner = TaskLearner::new(&self.config, &mut self.library, task.num_states(), task.num_actions());
        let mut metrics = run_episodes(&mut learner, task, horizon, self.config.small_threshold, rng)?;
        let ledger = learner.finish()?;
        metrics.num_templates = self.library.len();
        Ok((metrics, ledger))
    }
}

impl MultiTaskLearner for OTemple {
    fn name(&self) -> &'static str {
        "otemple"
    }

    fn run_task(
        &mut self,
        task: &EpisodicTask,
        horizon: Horizon,
        rng: &mut ChaCha8Rng,
    ) -> Result<TaskMetrics, LearnError> {
        self.run_task_with_ledger(task, horizon, rng).map(|(m, _)| m)
    }

    fn num_templates(&self) -> usize {
        self.library.len()
    }
}
