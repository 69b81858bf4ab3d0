//! Seeded random streams.
//!
//! Every run seed fans out into independent ChaCha8 streams, one per
//! `(task index, purpose)`. The stream id is `(task_index << 8) | purpose`,
//! so sampling a task never shifts the interaction noise of any other task,
//! and adding a learner to a run never changes the task sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    /// Drawing the task itself (landforms, goal, slip values).
    TaskSample = 0,
    /// Environment transitions and exploration noise while learning a task.
    Interaction = 1,
    /// Fixed layout shared by every task of a distribution.
    Layout = 2,
    /// Direct state-action sampling in the savings demo.
    Savings = 3,
}

pub fn stream(seed: u64, task_index: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((task_index << 8) | purpose as u64);
    rng
}
