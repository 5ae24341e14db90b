//! Epoch-structured training loop with per-epoch evaluation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::critic::CriticNet;
use super::episode::{evaluate, run_episode, EpisodeConfig, EvalSummary, Mode};
use super::replay::ReplayBuffer;
use super::reward::RewardParams;
use super::td3::{Td3Agent, Td3Config};
use crate::env::InsertionEnv;
use crate::snn::{ActorConfig, SpikingActor};
use crate::{Error, Result};

/// SplitMix64 finalizer over a (base, stream, index) triple; used to give every
/// episode, evaluation and network its own reproducible seed.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_INIT: u64 = 1;
const STREAM_TRAIN_ENV: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_REPLAY: u64 = 4;
const STREAM_TD3: u64 = 5;
const STREAM_EVAL: u64 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub episodes_per_epoch: usize,
    /// Decision cap per training episode.
    pub max_interactions: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Leading episodes that act uniformly at random.
    pub warmup_episodes: usize,
    /// Exploration σ as a fraction of each action bound.
    pub exploration_noise: f64,
    /// Gradient updates per collected transition.
    pub updates_per_step: f64,
    /// Exploit episodes run after every epoch to pick the returned actor.
    pub eval_episodes: usize,
    /// Optional start-offset schedule for the training episodes.
    pub curriculum: Option<Curriculum>,
    pub critic_hidden: [usize; 2],
    pub critic_scale: f64,
    pub td3: Td3Config,
    pub actor: ActorConfig,
    pub reward: RewardParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epochs: 12,
            episodes_per_epoch: 40,
            max_interactions: 150,
            batch_size: 64,
            buffer_capacity: 1_000_000,
            warmup_episodes: 0,
            exploration_noise: 0.1,
            updates_per_step: 1.0,
            eval_episodes: 10,
            curriculum: Some(Curriculum::default()),
            critic_hidden: [256, 256],
            critic_scale: 10.0,
            td3: Td3Config { soft_update: 0.02, ..Default::default() },
            actor: ActorConfig { decoder_init_scale: 0.0, ..Default::default() },
            reward: RewardParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.td3.validate()?;
        if self.episodes_per_epoch == 0 || self.max_interactions == 0 || self.batch_size == 0 {
            return Err(Error::Config("episode counts, interaction cap and batch size must be positive".into()));
        }
        if self.buffer_capacity <= self.batch_size {
            return Err(Error::Config("replay capacity must exceed the batch size".into()));
        }
        if let Some(c) = &self.curriculum {
            c.validate()?;
        }
        if !(self.exploration_noise >= 0.0) || !(self.updates_per_step >= 0.0) || !(self.critic_scale > 0.0) {
            return Err(Error::Config("noise, update ratio and critic scale must be non-negative".into()));
        }
        Ok(())
    }

    pub fn episode_config(&self) -> EpisodeConfig {
        EpisodeConfig { max_interactions: self.max_interactions, reward: self.reward }
    }

    /// Seeds of the per-epoch model-selection episodes.
    pub fn selection_seeds(&self) -> Vec<u64> {
        (0..self.eval_episodes as u64).map(|i| derive_seed(self.seed, STREAM_EVAL, i)).collect()
    }
}

/// Start-state schedule for the training episodes. Episodes first start with
/// the tip already `initial_depth` inside the hole, rising linearly to the
/// surface over `depth_epochs`; the lateral start σ then grows geometrically
/// from `initial_sigma` to the scene value over `sigma_epochs`. Selection and
/// evaluation episodes always use the scene start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Curriculum {
    /// m below the table surface.
    pub initial_depth: f64,
    pub depth_epochs: f64,
    /// m
    pub initial_sigma: f64,
    pub sigma_epochs: f64,
}

impl Default for Curriculum {
    fn default() -> Self {
        Self { initial_depth: 0.03, depth_epochs: 1.0, initial_sigma: 0.0005, sigma_epochs: 8.0 }
    }
}

impl Curriculum {
    pub fn validate(&self) -> Result<()> {
        let ok = self.initial_depth >= 0.0
            && self.initial_depth.is_finite()
            && self.depth_epochs >= 0.0
            && self.sigma_epochs >= 0.0
            && self.initial_sigma > 0.0
            && self.initial_sigma.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid curriculum {self:?}")))
        }
    }

    /// `(start_height, start_sigma)` at fractional epoch `progress`.
    pub fn start(&self, progress: f64, target_sigma: f64) -> (f64, f64) {
        if progress < self.depth_epochs {
            let height = -self.initial_depth * (1.0 - progress / self.depth_epochs);
            return (height, self.initial_sigma.min(target_sigma));
        }
        let p = progress - self.depth_epochs;
        if p >= self.sigma_epochs || self.initial_sigma >= target_sigma {
            return (0.0, target_sigma);
        }
        (0.0, self.initial_sigma * (target_sigma / self.initial_sigma).powf(p / self.sigma_epochs))
    }
}

/// One row of the learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub seed: u64,
    /// Mean return of the epoch's selection episodes.
    pub mean_return: f64,
    pub success_rate: f64,
    /// Mean return of the epoch's exploring training episodes.
    pub train_return: f64,
    /// Environment interactions collected so far.
    pub interactions: usize,
}

/// Per-epoch progress handed to an observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochReport {
    pub point: CurvePoint,
    pub updates: u64,
    pub last_critic_loss: f64,
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Actor with the best selection score (the initial actor when no epoch ran).
    pub actor: SpikingActor,
    /// Agent state after the final epoch.
    pub agent: Td3Agent,
    pub curve: Vec<CurvePoint>,
    pub best_epoch: Option<usize>,
    pub interactions: usize,
}

/// Initial actor and twin critics for `cfg`, seeded from `cfg.seed`.
pub fn init_agent(cfg: &TrainConfig, action_bounds: &[f64]) -> Result<Td3Agent> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT, 0));
    let actor = SpikingActor::new(&cfg.actor, action_bounds, &mut rng)?;
    let critics = [
        CriticNet::new(cfg.critic_hidden, cfg.critic_scale, action_bounds, &mut rng)?,
        CriticNet::new(cfg.critic_hidden, cfg.critic_scale, action_bounds, &mut rng)?,
    ];
    Td3Agent::new(actor, critics, &cfg.td3, derive_seed(cfg.seed, STREAM_TD3, 0))
}

pub fn train<F>(make_env: &F, cfg: &TrainConfig) -> Result<TrainOutcome>
where
    F: Fn() -> Result<InsertionEnv> + Sync,
{
    train_with_observer(make_env, cfg, &mut |_| {})
}

/// Collects `episodes_per_epoch` exploring episodes per epoch, running
/// `updates_per_step` TD3 updates per new transition after each episode, then
/// scores the actor on the selection seeds and keeps the best one.
pub fn train_with_observer<F>(
    make_env: &F,
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&EpochReport),
) -> Result<TrainOutcome>
where
    F: Fn() -> Result<InsertionEnv> + Sync,
{
    cfg.validate()?;
    let mut env = make_env()?;
    let bounds = env.scene().postprocess.bounds;
    let target_sigma = env.scene().start_sigma;
    let mut agent = init_agent(cfg, &bounds)?;
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, derive_seed(cfg.seed, STREAM_REPLAY, 0))?;
    let episode_cfg = cfg.episode_config();
    let selection = cfg.selection_seeds();

    let mut best: Option<(f64, f64, usize, SpikingActor)> = None;
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut interactions = 0usize;
    let mut owed_updates = 0.0;
    let mut last_critic_loss = f64::NAN;
    let mut episode_index = 0u64;

    for epoch in 0..cfg.epochs {
        let mut train_return = 0.0;
        for i in 0..cfg.episodes_per_epoch {
            if let Some(c) = &cfg.curriculum {
                let progress = epoch as f64 + i as f64 / cfg.episodes_per_epoch as f64;
                let (height, sigma) = c.start(progress, target_sigma);
                env.set_start(height, sigma)?;
            }
            let env_seed = derive_seed(cfg.seed, STREAM_TRAIN_ENV, episode_index);
            let noise_seed = derive_seed(cfg.seed, STREAM_NOISE, episode_index);
            let mode = if (episode_index as usize) < cfg.warmup_episodes {
                Mode::Uniform { seed: noise_seed }
            } else {
                Mode::Explore { sigma: cfg.exploration_noise, seed: noise_seed }
            };
            episode_index += 1;
            let record = run_episode(&mut env, &agent.actor, env_seed, &episode_cfg, mode)?;
            train_return += record.total_return;
            interactions += record.interactions();
            for t in record.transitions() {
                buffer.push(t);
            }
            if buffer.len() < cfg.batch_size {
                continue;
            }
            owed_updates += record.interactions() as f64 * cfg.updates_per_step;
            while owed_updates >= 1.0 {
                owed_updates -= 1.0;
                let batch = buffer.sample(cfg.batch_size)?;
                let report = agent.td_update(&batch, &cfg.td3).map_err(|e| match e {
                    Error::Divergence(msg) => Error::Divergence(format!("epoch {epoch}: {msg}")),
                    other => other,
                })?;
                last_critic_loss = report.critic_loss[0];
            }
        }

        let records = evaluate(&agent.actor, make_env, &selection, &episode_cfg)?;
        let summary = EvalSummary::from_records(&records);
        let point = CurvePoint {
            epoch,
            seed: cfg.seed,
            mean_return: summary.mean_return,
            success_rate: summary.success_rate,
            train_return: train_return / cfg.episodes_per_epoch as f64,
            interactions,
        };
        curve.push(point);
        let better = match &best {
            None => true,
            Some((rate, ret, _, _)) => {
                summary.success_rate > *rate || (summary.success_rate == *rate && summary.mean_return > *ret)
            }
        };
        if better {
            best = Some((summary.success_rate, summary.mean_return, epoch, agent.actor.clone()));
        }
        observer(&EpochReport {
            point,
            updates: agent.updates,
            last_critic_loss,
            best_epoch: best.as_ref().map(|b| b.2),
        });
    }

    let (actor, best_epoch) = match best {
        Some((_, _, epoch, actor)) => (actor, Some(epoch)),
        None => (agent.actor.clone(), None),
    };
    Ok(TrainOutcome { actor, agent, curve, best_epoch, interactions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SceneConfig;
    use crate::snn::ActorShape;

    fn tiny() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            episodes_per_epoch: 2,
            max_interactions: 5,
            batch_size: 4,
            buffer_capacity: 100,
            warmup_episodes: 1,
            eval_episodes: 2,
            critic_hidden: [8, 8],
            actor: ActorConfig { shape: ActorShape { hidden: [16, 8], ..Default::default() }, ..Default::default() },
            ..Default::default()
        }
    }

    fn make_env() -> Result<InsertionEnv> {
        InsertionEnv::new(SceneConfig::planar())
    }

    #[test]
    fn zero_epochs_returns_initial_actor_and_empty_curve() {
        let cfg = TrainConfig { epochs: 0, ..tiny() };
        let out = train(&make_env, &cfg).unwrap();
        let init = init_agent(&cfg, &SceneConfig::default().postprocess.bounds).unwrap();
        assert!(out.curve.is_empty());
        assert_eq!(out.actor, init.actor);
        assert_eq!(out.best_epoch, None);
    }

    #[test]
    fn curve_has_one_row_per_epoch() {
        let out = train(&make_env, &tiny()).unwrap();
        assert_eq!(out.curve.len(), 2);
        assert_eq!(out.interactions, 20);
        assert!(out.agent.updates > 0);
        assert!(out.curve.iter().all(|p| p.seed == 0 && (0.0..=1.0).contains(&p.success_rate)));
    }

    #[test]
    fn noiseless_training_is_reproducible() {
        let cfg = TrainConfig { exploration_noise: 0.0, warmup_episodes: 0, ..tiny() };
        let a = train(&make_env, &cfg).unwrap();
        let b = train(&make_env, &cfg).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.actor, b.actor);
    }

    #[test]
    fn curriculum_rises_then_widens() {
        let c = Curriculum { initial_depth: 0.02, depth_epochs: 2.0, initial_sigma: 0.001, sigma_epochs: 4.0 };
        assert_eq!(c.start(0.0, 0.016), (-0.02, 0.001));
        assert!((c.start(1.0, 0.016).0 + 0.01).abs() < 1e-15);
        assert_eq!(c.start(2.0, 0.016), (0.0, 0.001));
        let (h, s) = c.start(4.0, 0.016);
        assert_eq!(h, 0.0);
        assert!((s - 0.004).abs() < 1e-12);
        assert_eq!(c.start(6.0, 0.016), (0.0, 0.016));
        assert_eq!(c.start(60.0, 0.016), (0.0, 0.016));
    }

    #[test]
    fn derived_seeds_differ_across_streams() {
        assert_ne!(derive_seed(0, 1, 0), derive_seed(0, 2, 0));
        assert_ne!(derive_seed(0, 1, 0), derive_seed(0, 1, 1));
        assert_eq!(derive_seed(7, 3, 9), derive_seed(7, 3, 9));
    }
}
