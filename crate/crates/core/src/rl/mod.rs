//! Reward, critics, replay and the TD3-style training loop for the spiking actor.

mod critic;
mod episode;
mod optim;
mod replay;
mod reward;
mod td3;
mod train;

pub use critic::{CriticCache, CriticNet, CriticParams, CRITIC_INPUT};
pub use episode::{evaluate, run_episode, DecisionLog, EpisodeConfig, EpisodeRecord, EvalSummary, Mode};
pub use optim::{Adam, AdamConfig};
pub use replay::{ReplayBuffer, Transition};
pub use reward::{compute_reward, RewardParams};
pub use td3::{LossReport, Td3Agent, Td3Config};
pub use train::{derive_seed, init_agent, train, train_with_observer, Curriculum, CurvePoint, EpochReport, TrainConfig, TrainOutcome};
