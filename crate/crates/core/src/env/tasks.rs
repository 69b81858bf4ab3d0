use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::{stream, Purpose};

use super::{ActionSet, EnvError, Landform, LandformMaze};

fn default_size() -> usize {
    4
}
fn default_goal_reward() -> f64 {
    1.0
}
fn default_step_cost() -> f64 {
    0.2
}
fn default_centers() -> Vec<f64> {
    vec![0.2, 0.4, 0.6]
}
fn default_std() -> f64 {
    0.05
}
fn default_sizes() -> Vec<usize> {
    vec![3, 4, 5, 6]
}
fn default_tasks_per_size() -> usize {
    20
}
fn default_true() -> bool {
    true
}

/// Reward and action settings shared by every maze family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeSettings {
    #[serde(default = "default_goal_reward")]
    pub goal_reward: f64,
    #[serde(default = "default_step_cost")]
    pub step_cost: f64,
    #[serde(default)]
    pub actions: ActionSet,
}

impl Default for MazeSettings {
    fn default() -> Self {
        Self {
            goal_reward: default_goal_reward(),
            step_cost: default_step_cost(),
            actions: ActionSet::Four,
        }
    }
}

/// A family of mazes from which a task sequence is drawn.
///
/// Sampling is a pure function of `(distribution, seed, task index)`. Unless
/// noted, the agent starts top-left and the goal is bottom-right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskDistribution {
    /// Every cell independently sand, marble or ice with equal odds.
    Landform {
        #[serde(default = "default_size")]
        width: usize,
        #[serde(default = "default_size")]
        height: usize,
        #[serde(default)]
        settings: MazeSettings,
    },
    /// One landform layout per seed; each task puts the goal on one of two
    /// fixed cells with equal odds, so the tasks come from two models.
    TwoGoal {
        #[serde(default = "default_size")]
        width: usize,
        #[serde(default = "default_size")]
        height: usize,
        /// Goal cells as `(row, col)`; defaults to bottom-right and the cell
        /// diagonally inside it, which lies on most routes to the corner.
        #[serde(default)]
        goals: Option<[(usize, usize); 2]>,
        #[serde(default)]
        settings: MazeSettings,
    },
    /// Each cell's slip drawn from an equal-weight normal mixture, clamped
    /// to `[0, 0.95]`.
    GaussianMixture {
        #[serde(default = "default_size")]
        width: usize,
        #[serde(default = "default_size")]
        height: usize,
        #[serde(default = "default_centers")]
        centers: Vec<f64>,
        #[serde(default = "default_std")]
        std: f64,
        #[serde(default)]
        settings: MazeSettings,
    },
    /// Square landform mazes of growing size: `tasks_per_size` tasks of each
    /// size in turn. Indices past the schedule stay at the last size.
    VaryingSize {
        #[serde(default = "default_sizes")]
        sizes: Vec<usize>,
        #[serde(default = "default_tasks_per_size")]
        tasks_per_size: usize,
        #[serde(default)]
        settings: MazeSettings,
    },
    /// The same slip on every cell, for every task.
    Uniform {
        #[serde(default = "default_size")]
        width: usize,
        #[serde(default = "default_size")]
        height: usize,
        slip: f64,
        #[serde(default = "default_true")]
        goal: bool,
        #[serde(default)]
        settings: MazeSettings,
    },
}

impl TaskDistribution {
    pub fn landform(width: usize, height: usize) -> Self {
        Self::Landform {
            width,
            height,
            settings: MazeSettings::default(),
        }
    }

    pub fn two_goal(width: usize, height: usize) -> Self {
        Self::TwoGoal {
            width,
            height,
            goals: None,
            settings: MazeSettings::default(),
        }
    }

    pub fn gaussian_mixture(width: usize, height: usize, std: f64) -> Self {
        Self::GaussianMixture {
            width,
            height,
            centers: default_centers(),
            std,
            settings: MazeSettings::default(),
        }
    }

    pub fn varying_size(sizes: Vec<usize>, tasks_per_size: usize) -> Self {
        Self::VaryingSize {
            sizes,
            tasks_per_size,
            settings: MazeSettings::default(),
        }
    }

    pub fn settings(&self) -> &MazeSettings {
        match self {
            Self::Landform { settings, .. }
            | Self::TwoGoal { settings, .. }
            | Self::GaussianMixture { settings, .. }
            | Self::VaryingSize { settings, .. }
            | Self::Uniform { settings, .. } => settings,
        }
    }

    /// The `index`-th task of the sequence for `seed`.
    pub fn sample(&self, seed: u64, index: usize) -> Result<LandformMaze, EnvError> {
        let mut rng = stream(seed, index as u64, Purpose::TaskSample);
        let s = *self.settings();
        let build = |w: usize, h: usize, slip: Vec<f64>, goal: Option<usize>| {
            LandformMaze::new(w, h, slip, 0, goal, s.goal_reward, s.step_cost, s.actions)
        };
        match self {
            Self::Landform { width, height, .. } => {
                let slip = random_landforms(width * height, &mut rng);
                build(*width, *height, slip, Some(width * height - 1))
            }
            Self::TwoGoal {
                width,
                height,
                goals,
                ..
            } => {
                let mut layout = stream(seed, 0, Purpose::Layout);
                let slip = random_landforms(width * height, &mut layout);
                let cells = self.two_goal_cells(*width, *height, goals)?;
                let goal = cells[usize::from(rng.random::<bool>())];
                build(*width, *height, slip, Some(goal))
            }
            Self::GaussianMixture {
                width,
                height,
                centers,
                std,
                ..
            } => {
                if centers.is_empty() || !(*std >= 0.0) {
                    return Err(EnvError::BadMixture);
                }
                let slip = (0..width * height)
                    .map(|_| {
                        let center = *centers.choose(&mut rng).expect("centers are non-empty");
                        let draw = if *std == 0.0 {
                            center
                        } else {
                            Normal::new(center, *std)
                                .map_err(|_| EnvError::BadMixture)?
                                .sample(&mut rng)
                        };
                        Ok(draw.clamp(0.0, 0.95))
                    })
                    .collect::<Result<Vec<_>, EnvError>>()?;
                build(*width, *height, slip, Some(width * height - 1))
            }
            Self::VaryingSize {
                sizes,
                tasks_per_size,
                ..
            } => {
                if sizes.is_empty() || *tasks_per_size == 0 {
                    return Err(EnvError::EmptySchedule);
                }
                let n = sizes[(index / tasks_per_size).min(sizes.len() - 1)];
                let slip = random_landforms(n * n, &mut rng);
                build(n, n, slip, Some(n * n - 1))
            }
            Self::Uniform {
                width,
                height,
                slip,
                goal,
                ..
            } => build(
                *width,
                *height,
                vec![*slip; width * height],
                goal.then(|| width * height - 1),
            ),
        }
    }

    fn two_goal_cells(
        &self,
        width: usize,
        height: usize,
        goals: &Option<[(usize, usize); 2]>,
    ) -> Result<[usize; 2], EnvError> {
        let pairs = goals.unwrap_or([
            (height - 1, width - 1),
            (height.saturating_sub(2), width.saturating_sub(2)),
        ]);
        let mut out = [0; 2];
        for (slot, (r, c)) in out.iter_mut().zip(pairs) {
            if r >= height || c >= width {
                return Err(EnvError::CellOutside {
                    cell: r * width + c,
                    cells: width * height,
                });
            }
            *slot = r * width + c;
        }
        Ok(out)
    }
}

fn random_landforms<R: Rng + ?Sized>(cells: usize, rng: &mut R) -> Vec<f64> {
    (0..cells)
        .map(|_| Landform::ALL.choose(rng).expect("non-empty").slip())
        .collect()
}
