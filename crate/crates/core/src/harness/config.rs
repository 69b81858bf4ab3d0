use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::baselines::{SingleTaskQ, SingleTaskRMax};
use crate::env::TaskDistribution;
use crate::fmtemple::{FmTemple, FmTempleConfig};
use crate::learners::{QConfig, RMaxConfig};
use crate::mdp::{DEFAULT_VI_MAX_ITERS, DEFAULT_VI_TOLERANCE};
use crate::otemple::{OTemple, OTempleConfig};
use crate::session::{Horizon, MultiTaskLearner};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Otemple,
    Fmtemple,
    RmaxSingle,
    QlearningSingle,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::Otemple,
        LearnerKind::Fmtemple,
        LearnerKind::RmaxSingle,
        LearnerKind::QlearningSingle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Otemple => "otemple",
            LearnerKind::Fmtemple => "fmtemple",
            LearnerKind::RmaxSingle => "rmax-single",
            LearnerKind::QlearningSingle => "qlearning-single",
        }
    }
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown learner {s:?}"))
    }
}

fn d_user_gap() -> f64 {
    0.15
}
fn d_known() -> u64 {
    500
}
fn d_small() -> u64 {
    50
}
fn d_discount() -> f64 {
    crate::mdp::DEFAULT_DISCOUNT
}
fn d_phase1() -> usize {
    15
}
fn d_model_gap() -> f64 {
    0.6
}
fn d_eta() -> f64 {
    1.0
}
fn d_true() -> bool {
    true
}
fn d_alpha() -> f64 {
    0.1
}
fn d_epsilon() -> f64 {
    0.1
}

/// Learner hyperparameters. Every field has a default, so a config file
/// only lists what it changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    /// Template gap `τ̂`.
    #[serde(default = "d_user_gap")]
    pub user_gap: f64,
    /// Known threshold `m`.
    #[serde(default = "d_known")]
    pub known_threshold: u64,
    /// Identification threshold `m_s`.
    #[serde(default = "d_small")]
    pub small_threshold: u64,
    #[serde(default = "d_discount")]
    pub discount: f64,
    /// Tasks `T1` collected before clustering.
    #[serde(default = "d_phase1")]
    pub phase1_tasks: usize,
    /// Model gap `Γ`.
    #[serde(default = "d_model_gap")]
    pub model_gap: f64,
    /// Initial model score `η`.
    #[serde(default = "d_eta")]
    pub eta: f64,
    #[serde(default = "d_true")]
    pub templates_enabled: bool,
    #[serde(default = "d_true")]
    pub identify_when_known: bool,
    #[serde(default = "d_true")]
    pub model_identification: bool,
    #[serde(default = "d_alpha")]
    pub q_learning_rate: f64,
    #[serde(default = "d_epsilon")]
    pub q_exploration: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl Hyperparameters {
    pub fn rmax(&self) -> RMaxConfig {
        RMaxConfig {
            known_threshold: self.known_threshold,
            discount: self.discount,
            vi_tolerance: DEFAULT_VI_TOLERANCE,
            vi_max_iters: DEFAULT_VI_MAX_ITERS,
        }
    }

    pub fn otemple(&self) -> OTempleConfig {
        OTempleConfig {
            rmax: self.rmax(),
            small_threshold: self.small_threshold,
            user_gap: self.user_gap,
            templates_enabled: self.templates_enabled,
            identify_when_known: self.identify_when_known,
        }
    }

    pub fn fmtemple(&self) -> FmTempleConfig {
        FmTempleConfig {
            otemple: self.otemple(),
            phase1_tasks: self.phase1_tasks,
            model_gap: self.model_gap,
            initial_score: self.eta,
            model_identification: self.model_identification,
        }
    }

    pub fn qlearning(&self) -> QConfig {
        QConfig {
            learning_rate: self.q_learning_rate,
            exploration: self.q_exploration,
            discount: self.discount,
            initial_value: None,
        }
    }
}

/// Symbols from the analysis that the algorithms never read; kept only so
/// runs can be labelled with them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    /// Smallest distance between distinct true templates.
    pub true_gap: Option<f64>,
    /// Smallest gap between adjacent distinct entries of a true template.
    pub ranking_gap: Option<f64>,
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub tasks: TaskDistribution,
    pub learners: Vec<LearnerKind>,
    #[serde(default)]
    pub hyper: Hyperparameters,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub num_tasks: usize,
    pub seeds: Vec<u64>,
    /// Directory for CSV output; overridden by `TEMPLE_OUTPUT_DIR`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Record wall-clock time per task. Off by default so repeated runs
    /// produce byte-identical CSV.
    #[serde(default)]
    pub wall_clock: bool,
    #[serde(default)]
    pub annotations: Annotations,
}

/// Scale of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 300 episodes of 30 steps, 30 tasks, 5 seeds.
    Desk,
    /// 3000 episodes of 30 steps, 50 tasks, 20 seeds.
    Full,
}

impl RunConfig {
    pub fn preset(preset: Preset, tasks: TaskDistribution) -> Self {
        let (episodes, num_tasks, seeds) = match preset {
            Preset::Desk => (300, 30, 5),
            Preset::Full => (3000, 50, 20),
        };
        Self {
            tasks,
            learners: vec![LearnerKind::Otemple, LearnerKind::RmaxSingle],
            hyper: Hyperparameters::default(),
            episodes,
            steps_per_episode: 30,
            num_tasks,
            seeds: (0..seeds).collect(),
            output: None,
            wall_clock: false,
            annotations: Annotations::default(),
        }
    }

    pub fn desk(tasks: TaskDistribution) -> Self {
        Self::preset(Preset::Desk, tasks)
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config {
            field: "<file>".into(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn horizon(&self) -> Horizon {
        Horizon::new(self.episodes, self.steps_per_episode)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |field: &str, message: &str| {
            Err(HarnessError::Config {
                field: field.into(),
                message: message.into(),
            })
        };
        let h = &self.hyper;
        if self.learners.is_empty() {
            return bad("learners", "at least one learner is required");
        }
        if self.seeds.is_empty() {
            return bad("seeds", "at least one seed is required");
        }
        if self.num_tasks == 0 {
            return bad("num_tasks", "must be positive");
        }
        if self.episodes == 0 || self.steps_per_episode == 0 {
            return bad("episodes", "episodes and steps_per_episode must be positive");
        }
        if h.known_threshold == 0 || h.small_threshold == 0 {
            return bad("hyper.small_threshold", "thresholds must be positive");
        }
        if h.small_threshold > h.known_threshold {
            return bad("hyper.small_threshold", "must not exceed known_threshold");
        }
        if !(h.discount > 0.0 && h.discount < 1.0) {
            return bad("hyper.discount", "must lie in (0, 1)");
        }
        if !(h.user_gap >= 0.0) {
            return bad("hyper.user_gap", "must be non-negative");
        }
        if !(h.model_gap > 0.0) {
            return bad("hyper.model_gap", "must be positive");
        }
        if h.phase1_tasks == 0 {
            return bad("hyper.phase1_tasks", "must be positive");
        }
        if !(h.eta > 0.0) {
            return bad("hyper.eta", "must be positive");
        }
        if !(0.0..=1.0).contains(&h.q_learning_rate) || !(0.0..=1.0).contains(&h.q_exploration) {
            return bad("hyper.q_learning_rate", "learning and exploration rates must lie in [0, 1]");
        }
        Ok(())
    }

    /// A fresh learner of the given kind.
    pub fn learner(&self, kind: LearnerKind) -> AnyLearner {
        let h = &self.hyper;
        match kind {
            LearnerKind::Otemple => AnyLearner::Otemple(OTemple::new(h.otemple())),
            LearnerKind::Fmtemple => AnyLearner::Fmtemple(Box::new(FmTemple::new(h.fmtemple()))),
            LearnerKind::RmaxSingle => AnyLearner::Rmax(SingleTaskRMax {
                config: h.rmax(),
                small_threshold: h.small_threshold,
            }),
            LearnerKind::QlearningSingle => AnyLearner::Q(SingleTaskQ {
                config: h.qlearning(),
                known_threshold: h.known_threshold,
                small_threshold: h.small_threshold,
            }),
        }
    }
}

/// One of the supported learners.
#[derive(Debug, Clone)]
pub enum AnyLearner {
    Otemple(OTemple),
    Fmtemple(Box<FmTemple>),
    Rmax(SingleTaskRMax),
    Q(SingleTaskQ),
}

impl AnyLearner {
    pub fn as_dyn(&mut self) -> &mut dyn MultiTaskLearner {
        match self {
            AnyLearner::Otemple(l) => l,
            AnyLearner::Fmtemple(l) => l.as_mut(),
            AnyLearner::Rmax(l) => l,
            AnyLearner::Q(l) => l,
        }
    }

    pub fn library(&self) -> Option<&crate::template::TemplateLibrary> {
        match self {
            AnyLearner::Otemple(l) => Some(l.library()),
            AnyLearner::Fmtemple(l) => Some(l.online().library()),
            _ => None,
        }
    }
}
