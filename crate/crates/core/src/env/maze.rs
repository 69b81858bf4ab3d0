use serde::{Deserialize, Serialize};

use crate::mdp::TabularMdp;
use crate::session::{EpisodicTask, RewardScale};
use crate::template::{tt_distance, TransitionTemplate};

use super::EnvError;

/// Surface type of a maze cell, fixing its slipping probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Landform {
    Sand,
    Marble,
    Ice,
}

impl Landform {
    pub const ALL: [Landform; 3] = [Landform::Sand, Landform::Marble, Landform::Ice];

    pub fn slip(self) -> f64 {
        match self {
            Landform::Sand => 0.0,
            Landform::Marble => 0.2,
            Landform::Ice => 0.4,
        }
    }

    pub fn code(self) -> char {
        match self {
            Landform::Sand => 'S',
            Landform::Marble => 'M',
            Landform::Ice => 'I',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.code() == c)
    }
}

/// Compass moves available to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ActionSet {
    /// Up, Down, Left, Right.
    #[default]
    #[serde(rename = "4")]
    Four,
    /// The four cardinal moves followed by UpLeft, UpRight, DownLeft, DownRight.
    #[serde(rename = "8")]
    Eight,
}

impl ActionSet {
    pub fn len(self) -> usize {
        match self {
            ActionSet::Four => 4,
            ActionSet::Eight => 8,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

/// `(d_row, d_col)` of each action, in action-index order.
const MOVES: [(isize, isize); 8] = [
    (-1, 0),
    (1, 0),
    (0, -1),
    (0, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

/// The two actions an action may slip into.
const SLIPS: [[usize; 2]; 8] = [
    [2, 3], // up -> left, right
    [2, 3], // down -> left, right
    [0, 1], // left -> up, down
    [0, 1], // right -> up, down
    [5, 6], // up-left -> up-right, down-left
    [4, 7], // up-right -> up-left, down-right
    [4, 7], // down-left -> up-left, down-right
    [5, 6], // down-right -> up-right, down-left
];

/// A gridworld whose cells slip the agent sideways with a per-cell
/// probability.
///
/// Cells are indexed `row * width + col` with row 0 at the top. An action
/// moves as intended with probability `1 - slip` and into each of its two
/// perpendicular directions with `slip / 2`; moves off the grid leave the
/// agent in place. The goal cell is absorbing and pays `goal_reward` for any
/// action taken there; everywhere else each action costs `step_cost`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandformMaze {
    width: usize,
    height: usize,
    slip: Vec<f64>,
    start: usize,
    goal: Option<usize>,
    goal_reward: f64,
    step_cost: f64,
    actions: ActionSet,
}

impl LandformMaze {
    pub fn new(
        width: usize,
        height: usize,
        slip: Vec<f64>,
        start: usize,
        goal: Option<usize>,
        goal_reward: f64,
        step_cost: f64,
        actions: ActionSet,
    ) -> Result<Self, EnvError> {
        if width == 0 || height == 0 {
            return Err(EnvError::EmptyGrid);
        }
        let cells = width * height;
        if slip.len() != cells {
            return Err(EnvError::GridShape {
                expected: cells,
                actual: slip.len(),
            });
        }
        if let Some((cell, &p)) = slip.iter().enumerate().find(|(_, p)| !(0.0..1.0).contains(*p)) {
            return Err(EnvError::BadSlip { cell, slip: p });
        }
        for cell in std::iter::once(start).chain(goal) {
            if cell >= cells {
                return Err(EnvError::CellOutside { cell, cells });
            }
        }
        if !(goal_reward > -step_cost) {
            return Err(EnvError::BadRewards {
                goal_reward,
                step_cost,
            });
        }
        Ok(Self {
            width,
            height,
            slip,
            start,
            goal,
            goal_reward,
            step_cost,
            actions,
        })
    }

    /// A maze with one slip value everywhere, start top-left and the goal (if
    /// any) bottom-right, goal reward 1 and step cost 0.2.
    pub fn uniform(width: usize, height: usize, slip: f64, with_goal: bool) -> Result<Self, EnvError> {
        let goal = (width * height).checked_sub(1).filter(|_| with_goal);
        Self::new(width, height, vec![slip; width * height], 0, goal, 1.0, 0.2, ActionSet::Four)
    }

    pub fn from_landforms(
        width: usize,
        height: usize,
        landforms: &[Landform],
        goal: Option<usize>,
    ) -> Result<Self, EnvError> {
        let slip = landforms.iter().map(|l| l.slip()).collect();
        Self::new(width, height, slip, 0, goal, 1.0, 0.2, ActionSet::Four)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn slips(&self) -> &[f64] {
        &self.slip
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn goal(&self) -> Option<usize> {
        self.goal
    }

    pub fn goal_reward(&self) -> f64 {
        self.goal_reward
    }

    pub fn step_cost(&self) -> f64 {
        self.step_cost
    }

    pub fn actions(&self) -> ActionSet {
        self.actions
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn with_goal(&self, goal: Option<usize>) -> Result<Self, EnvError> {
        Self::new(
            self.width,
            self.height,
            self.slip.clone(),
            self.start,
            goal,
            self.goal_reward,
            self.step_cost,
            self.actions,
        )
    }

    pub fn with_actions(&self, actions: ActionSet) -> Self {
        Self {
            actions,
            ..self.clone()
        }
    }

    pub fn with_rewards(&self, goal_reward: f64, step_cost: f64) -> Result<Self, EnvError> {
        Self::new(
            self.width,
            self.height,
            self.slip.clone(),
            self.start,
            self.goal,
            goal_reward,
            step_cost,
            self.actions,
        )
    }

    /// Maps raw rewards in `[-step_cost, goal_reward]` onto `[0, 1]`.
    pub fn reward_scale(&self) -> RewardScale {
        RewardScale::new(-self.step_cost, self.goal_reward)
    }

    fn destination(&self, cell: usize, action: usize) -> usize {
        let (row, col) = ((cell / self.width) as isize, (cell % self.width) as isize);
        let (dr, dc) = MOVES[action];
        let (r, c) = (row + dr, col + dc);
        if r < 0 || c < 0 || r >= self.height as isize || c >= self.width as isize {
            cell
        } else {
            r as usize * self.width + c as usize
        }
    }

    /// Next-cell distribution and raw reward of one cell and action.
    pub fn dynamics(&self, cell: usize, action: usize) -> (Vec<f64>, f64) {
        let mut probs = vec![0.0; self.num_cells()];
        if Some(cell) == self.goal {
            probs[cell] = 1.0;
            return (probs, self.goal_reward);
        }
        let slip = self.slip[cell];
        probs[self.destination(cell, action)] += 1.0 - slip;
        for side in SLIPS[action] {
            probs[self.destination(cell, side)] += slip / 2.0;
        }
        (probs, -self.step_cost)
    }

    /// The tabular model with rewards normalised by [`Self::reward_scale`].
    pub fn build_mdp(&self, discount: f64) -> Result<TabularMdp, EnvError> {
        let (n, a_count) = (self.num_cells(), self.actions.len());
        let scale = self.reward_scale();
        let mut transition = Vec::with_capacity(n * a_count * n);
        let mut reward = Vec::with_capacity(n * a_count);
        for s in 0..n {
            for a in 0..a_count {
                let (probs, r) = self.dynamics(s, a);
                transition.extend(probs);
                reward.push(scale.normalize(r));
            }
        }
        let mut start = vec![0.0; n];
        start[self.start] = 1.0;
        Ok(TabularMdp::new(n, a_count, transition, reward, start, discount)?)
    }

    /// The maze as an episodic task: episodes start at `start` and end right
    /// after the agent acts in the goal.
    pub fn task(&self, discount: f64) -> Result<EpisodicTask, EnvError> {
        Ok(EpisodicTask::new(self.build_mdp(discount)?, self.goal, self.reward_scale()))
    }

    /// Every distinct transition template of the normalised model.
    pub fn ground_truth_templates(&self) -> Vec<TransitionTemplate> {
        let scale = self.reward_scale();
        let mut out: Vec<TransitionTemplate> = Vec::new();
        for s in 0..self.num_cells() {
            for a in 0..self.actions.len() {
                let (probs, r) = self.dynamics(s, a);
                let g = TransitionTemplate::from_dynamics(&probs, scale.normalize(r))
                    .expect("maze rows are distributions");
                if !out.iter().any(|h| tt_distance(h, &g) < 1e-9) {
                    out.push(g);
                }
            }
        }
        out
    }

    /// The ground-truth template of one cell and action.
    pub fn template_of(&self, cell: usize, action: usize) -> TransitionTemplate {
        let (probs, r) = self.dynamics(cell, action);
        TransitionTemplate::from_dynamics(&probs, self.reward_scale().normalize(r))
            .expect("maze rows are distributions")
    }
}
