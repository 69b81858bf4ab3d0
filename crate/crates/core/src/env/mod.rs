//! Landform mazes and the task distributions built from them.

pub mod io;
mod maze;
mod tasks;

pub use maze::{ActionSet, Landform, LandformMaze};
pub use tasks::{MazeSettings, TaskDistribution};

use crate::mdp::MdpError;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EnvError {
    #[error("maze must have at least one row and one column")]
    EmptyGrid,
    #[error("grid has {actual} cells, expected {expected}")]
    GridShape { expected: usize, actual: usize },
    #[error("cell {cell} has slip probability {slip}, outside [0, 1)")]
    BadSlip { cell: usize, slip: f64 },
    #[error("cell {cell} is outside a grid of {cells} cells")]
    CellOutside { cell: usize, cells: usize },
    #[error("goal reward {goal_reward} must exceed the negated step cost {step_cost}")]
    BadRewards { goal_reward: f64, step_cost: f64 },
    #[error("mixture needs at least one center and a non-negative spread")]
    BadMixture,
    #[error("size schedule needs at least one size and one task per size")]
    EmptySchedule,
    #[error("maze text line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Mdp(#[from] MdpError),
}
