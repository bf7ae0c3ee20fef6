//! Generative processes the agent acts in.

pub mod sampler;
pub mod tmaze;

use crate::error::Result;
use crate::model::ObservationSpace;

pub use sampler::ModelEnv;
pub use tmaze::{build_tmaze_model, RewardSide, TMaze, TMazeEnv, TMazeOptions};

/// An episodic environment emitting joint observation indices.
///
/// Observations use the same row-major flattening as
/// [`GenerativeModel`](crate::model::GenerativeModel).
pub trait Environment {
    fn observation_space(&self) -> &ObservationSpace;

    /// Number of observations per episode.
    fn horizon(&self) -> usize;

    /// Starts a new episode and returns `o_1`.
    fn reset(&mut self, seed: u64) -> Result<usize>;

    /// Applies `action` and returns the next observation.
    fn step(&mut self, action: usize) -> Result<usize>;

    /// Observations emitted so far in this episode.
    fn time(&self) -> usize;

    fn done(&self) -> bool {
        self.time() >= self.horizon()
    }

    /// Current hidden state as a joint index, when the process has one that
    /// lines up with the agent's state space.
    fn true_state(&self) -> Option<usize> {
        None
    }
}
