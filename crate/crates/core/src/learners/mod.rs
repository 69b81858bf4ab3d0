//! Single-task base learners: RMax over an optimistic induced model, and
//! Q-learning as a model-free baseline.

mod ledger;
mod qlearning;
mod rmax;

pub use ledger::VisitLedger;
pub use qlearning::{QConfig, QLearner};
pub use rmax::{induced_mdp, RMaxConfig, RMaxLearner, R_MAX};

use crate::mdp::MdpError;
use crate::template::TemplateError;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LearnError {
    #[error("planning failed: {0}")]
    Mdp(#[from] MdpError),
    #[error("template library: {0}")]
    Template(#[from] TemplateError),
}
