//! Reinforcement-learning side of the energy-management workbench: a
//! from-scratch dense-network stack and a continuous-discrete actor-critic
//! agent that commands engine torque and clutch state simultaneously.

pub mod agent;
pub mod checkpoint;
pub mod nn;
pub mod replay;

pub use agent::{EpisodeRecord, GreedyPolicy, Hyperparams, PdqnTd3Agent, UpdateReport};
pub use nn::{AdamState, Grads, Head, Mlp};
pub use replay::{Experience, ReplayBuffer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },
    #[error("invalid hyperparameters: {0}")]
    Config(String),
    #[error("environment error: {0}")]
    Env(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, RlError>;
