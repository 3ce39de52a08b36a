//! Proximal policy optimization for the fleet coordinator.

mod checkpoint;
mod gae;
mod network;
mod update;

use thiserror::Error;

pub use checkpoint::{Checkpoint, CheckpointError};
pub use gae::{compute_gae, normalize, GaeOutput, Trajectory};
pub use network::{
    argmax_actions, joint_log_prob, layer_layout, log_softmax, policy_forward, sample_actions,
    softmax, Layer, PolicyOutput, PolicyParams,
};
pub use update::{
    approx_kl, minibatch_loss, ppo_update, Adam, MinibatchLoss, PpoConfig, UpdateDiagnostics,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpoError {
    #[error("state has {got} features, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("policy produced non-finite logits")]
    NonFiniteLogits,
    #[error("trajectory does not end in a terminal step")]
    IncompleteTrajectory,
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("non-finite gradient; parameters restored")]
    NonFiniteGradient,
}

#[cfg(test)]
mod tests;
