//! Twin-critic, delayed-actor update with target policy smoothing.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::critic::CriticNet;
use super::optim::{Adam, AdamConfig};
use super::replay::Transition;
use crate::snn::{forward_batch_actions, ActorTape, SpikingActor};
use crate::tensor::{soft_update, ParamSet};
use crate::types::{ActionVector, StateVector, ACTION_DIM};
use crate::{Error, Result};

/// Smallest receptive-field width kept after an encoder update.
const MIN_ENCODER_WIDTH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Td3Config {
    pub discount: f64,
    /// Soft target update rate ρ.
    pub soft_update: f64,
    pub policy_delay: u64,
    /// Target smoothing noise σ as a fraction of each action bound.
    pub target_noise: f64,
    /// Smoothing noise clip as a fraction of each action bound.
    pub target_noise_clip: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Global L2 clip applied to the actor gradient; 0 disables it.
    pub actor_grad_clip: f64,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            discount: 0.99,
            soft_update: 0.005,
            policy_delay: 2,
            target_noise: 0.2,
            target_noise_clip: 0.5,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            actor_grad_clip: 0.0,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::Config("discount must lie in (0, 1)".into()));
        }
        if !(self.soft_update > 0.0 && self.soft_update <= 1.0) {
            return Err(Error::Config("soft update rate must lie in (0, 1]".into()));
        }
        if self.policy_delay == 0 || !(self.actor_lr > 0.0) || !(self.critic_lr > 0.0) {
            return Err(Error::Config("policy delay and learning rates must be positive".into()));
        }
        if !(self.target_noise >= 0.0) || !(self.target_noise_clip >= 0.0) || !(self.actor_grad_clip >= 0.0) {
            return Err(Error::Config("noise and clip settings must be non-negative".into()));
        }
        Ok(())
    }
}

/// Losses from one update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub critic_loss: [f64; 2],
    /// Present on updates that also stepped the actor.
    pub actor_loss: Option<f64>,
    pub mean_q: f64,
    pub mean_target: f64,
}

/// Live and target networks plus optimizer state.
#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub actor: SpikingActor,
    pub actor_target: SpikingActor,
    pub critics: [CriticNet; 2],
    pub critic_targets: [CriticNet; 2],
    pub actor_opt: Adam,
    pub critic_opts: [Adam; 2],
    pub updates: u64,
    rng: ChaCha8Rng,
}

impl Td3Agent {
    pub fn new(actor: SpikingActor, critics: [CriticNet; 2], cfg: &Td3Config, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let actor_opt = Adam::new(AdamConfig::with_lr(cfg.actor_lr), &actor.params);
        let critic_opts = [
            Adam::new(AdamConfig::with_lr(cfg.critic_lr), &critics[0].params),
            Adam::new(AdamConfig::with_lr(cfg.critic_lr), &critics[1].params),
        ];
        Ok(Self {
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor,
            critics,
            actor_opt,
            critic_opts,
            updates: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Reassembles an agent from stored parts (checkpoint restore).
    pub fn from_parts(
        actor: SpikingActor,
        actor_target: SpikingActor,
        critics: [CriticNet; 2],
        critic_targets: [CriticNet; 2],
        actor_opt: Adam,
        critic_opts: [Adam; 2],
        updates: u64,
        rng: ChaCha8Rng,
    ) -> Self {
        Self { actor, actor_target, critics, critic_targets, actor_opt, critic_opts, updates, rng }
    }

    /// Smoothing-noise generator, exposed so checkpoints can capture its position.
    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// `y = r + γ(1 − done)·min(Q'₁, Q'₂)(s', clip(π'(s') + ε))`.
    pub fn td_targets(&mut self, batch: &[Transition], cfg: &Td3Config) -> Result<Array1<f64>> {
        let next: Vec<StateVector> = batch.iter().map(|t| t.next_state).collect();
        let raw = forward_batch_actions(&self.actor_target, &next)?;
        let bounds = self.actor_target.action_bounds.clone();
        let noise = Normal::new(0.0, 1.0).expect("unit normal");
        let next_actions: Vec<ActionVector> = (0..batch.len())
            .map(|b| {
                ActionVector(std::array::from_fn(|d| {
                    let bound = bounds[d];
                    let eps = if cfg.target_noise > 0.0 {
                        let clip = cfg.target_noise_clip * bound;
                        (noise.sample(&mut self.rng) * cfg.target_noise * bound).clamp(-clip, clip)
                    } else {
                        0.0
                    };
                    (raw[[b, d]] + eps).clamp(-bound, bound)
                }))
            })
            .collect();
        let (q1, _) = self.critic_targets[0].forward(&next, &next_actions)?;
        let (q2, _) = self.critic_targets[1].forward(&next, &next_actions)?;
        Ok(Array1::from_shape_fn(batch.len(), |b| {
            let t = &batch[b];
            t.reward + cfg.discount * (1.0 - t.done) * q1[b].min(q2[b])
        }))
    }

    /// One critic step on both twins; every `policy_delay` calls also an
    /// actor step followed by soft target updates.
    pub fn td_update(&mut self, batch: &[Transition], cfg: &Td3Config) -> Result<LossReport> {
        if batch.is_empty() {
            return Err(Error::State("td_update needs a non-empty batch".into()));
        }
        let n = batch.len() as f64;
        let targets = self.td_targets(batch, cfg)?;
        let states: Vec<StateVector> = batch.iter().map(|t| t.state).collect();
        let actions: Vec<ActionVector> = batch.iter().map(|t| t.action).collect();

        let mut critic_loss = [0.0; 2];
        let mut mean_q = 0.0;
        for i in 0..2 {
            let (q, cache) = self.critics[i].forward(&states, &actions)?;
            let err = &q - &targets;
            critic_loss[i] = err.mapv(|e| e * e).sum() / n;
            if i == 0 {
                mean_q = q.sum() / n;
            }
            let (grads, _) = self.critics[i].backward(&cache, &err.mapv(|e| 2.0 * e / n))?;
            self.critic_opts[i].apply(&mut self.critics[i].params, &grads)?;
        }
        if !critic_loss.iter().all(|l| l.is_finite()) {
            return Err(Error::Divergence(format!("critic loss {critic_loss:?} at update {}", self.updates)));
        }
        self.updates += 1;

        let mut actor_loss = None;
        if self.updates.is_multiple_of(cfg.policy_delay) {
            let mut tape = ActorTape::new();
            let pi = tape.forward(&self.actor, &states)?;
            let pi_actions = rows_to_actions(&pi);
            let (q, cache) = self.critics[0].forward(&states, &pi_actions)?;
            let loss = -q.sum() / n;
            let (_, dq_da) = self.critics[0].backward(&cache, &Array1::from_elem(batch.len(), -1.0 / n))?;
            let mut grads = tape.backward(&self.actor, &dq_da)?;
            if cfg.actor_grad_clip > 0.0 {
                clip_global_norm(&mut grads, cfg.actor_grad_clip);
            }
            self.actor_opt.apply(&mut self.actor.params, &grads)?;
            self.actor.params.enc_widths.mapv_inplace(|w| w.max(MIN_ENCODER_WIDTH));
            if !loss.is_finite() || !self.actor.params.all_finite() {
                return Err(Error::Divergence(format!("actor loss {loss} at update {}", self.updates)));
            }
            actor_loss = Some(loss);
            soft_update(&mut self.actor_target.params, &self.actor.params, cfg.soft_update);
            for i in 0..2 {
                soft_update(&mut self.critic_targets[i].params, &self.critics[i].params, cfg.soft_update);
            }
        }
        Ok(LossReport { critic_loss, actor_loss, mean_q, mean_target: targets.sum() / n })
    }
}

fn rows_to_actions(a: &Array2<f64>) -> Vec<ActionVector> {
    a.rows().into_iter().map(|r| ActionVector(std::array::from_fn(|d| r[d]))).collect()
}

fn clip_global_norm<P: ParamSet>(grads: &mut P, max_norm: f64) {
    let norm = grads.tensors().iter().flat_map(|t| t.data.iter()).map(|v| v * v).sum::<f64>().sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        for t in grads.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= k);
        }
    }
}

const _: () = assert!(ACTION_DIM == 6);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{ActorConfig, ActorShape, DEFAULT_STATE_BOUNDS};
    use rand::Rng;

    const BOUNDS: [f64; 6] = [0.005, 0.005, 0.005, 0.0175, 0.0175, 0.0175];

    fn agent(seed: u64) -> Td3Agent {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = ActorConfig { shape: ActorShape { hidden: [24, 16], ..Default::default() }, ..Default::default() };
        let actor = SpikingActor::new(&cfg, &BOUNDS, &mut rng).unwrap();
        let critics = [
            CriticNet::new([16, 16], 10.0, &BOUNDS, &mut rng).unwrap(),
            CriticNet::new([16, 16], 10.0, &BOUNDS, &mut rng).unwrap(),
        ];
        Td3Agent::new(actor, critics, &Td3Config::default(), seed).unwrap()
    }

    fn transition(rng: &mut ChaCha8Rng, done: f64) -> Transition {
        let mut draw = || {
            StateVector(std::array::from_fn(|i| {
                let (lo, hi) = DEFAULT_STATE_BOUNDS[i];
                rng.random_range(lo..hi)
            }))
        };
        let (state, next_state) = (draw(), draw());
        let action = ActionVector(std::array::from_fn(|d| rng.random_range(-BOUNDS[d]..BOUNDS[d])));
        Transition { state, action, reward: rng.random_range(-1.0..0.0), next_state, done }
    }

    fn quiet() -> Td3Config {
        Td3Config { target_noise: 0.0, ..Default::default() }
    }

    #[test]
    fn empty_batch_is_a_state_error() {
        let mut a = agent(1);
        assert!(matches!(a.td_update(&[], &quiet()), Err(Error::State(_))));
    }

    #[test]
    fn terminal_targets_equal_reward() {
        let mut a = agent(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let batch: Vec<_> = (0..8).map(|_| transition(&mut rng, 1.0)).collect();
        let y = a.td_targets(&batch, &Td3Config::default()).unwrap();
        for (t, y) in batch.iter().zip(y.iter()) {
            assert_eq!(*y, t.reward);
        }
    }

    #[test]
    fn identical_twins_use_the_first_target() {
        let mut a = agent(4);
        a.critic_targets[1] = a.critic_targets[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let batch: Vec<_> = (0..6).map(|_| transition(&mut rng, 0.0)).collect();
        let y = a.td_targets(&batch, &quiet()).unwrap();
        for (t, y) in batch.iter().zip(y.iter()) {
            let a_next = a.actor_target.act(&t.next_state).unwrap();
            let q = a.critic_targets[0].q(&t.next_state, &a_next).unwrap();
            assert!((y - (t.reward + 0.99 * q)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_transition_loss_matches_hand_computation() {
        let mut a = agent(6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = transition(&mut rng, 0.0);
        let a_next = a.actor_target.act(&t.next_state).unwrap();
        let q1n = a.critic_targets[0].q(&t.next_state, &a_next).unwrap();
        let q2n = a.critic_targets[1].q(&t.next_state, &a_next).unwrap();
        let y = t.reward + 0.99 * q1n.min(q2n);
        let expect = [0, 1].map(|i| (a.critics[i].q(&t.state, &t.action).unwrap() - y).powi(2));
        let report = a.td_update(&[t], &quiet()).unwrap();
        for i in 0..2 {
            assert!((report.critic_loss[i] - expect[i]).abs() < 1e-12);
        }
        assert!(report.actor_loss.is_none());
    }

    #[test]
    fn actor_steps_every_policy_delay() {
        let mut a = agent(8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let batch: Vec<_> = (0..4).map(|_| transition(&mut rng, 0.0)).collect();
        let before = a.actor.params.clone();
        let target_before = a.actor_target.params.clone();
        assert!(a.td_update(&batch, &Td3Config::default()).unwrap().actor_loss.is_none());
        assert_eq!(a.actor.params, before);
        assert!(a.td_update(&batch, &Td3Config::default()).unwrap().actor_loss.is_some());
        assert_ne!(a.actor.params, before);
        assert_ne!(a.actor_target.params, target_before);
    }

    #[test]
    fn critic_loss_falls_on_a_fixed_batch() {
        let mut a = agent(10);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let batch: Vec<_> = (0..16).map(|_| transition(&mut rng, 1.0)).collect();
        let first = a.td_update(&batch, &quiet()).unwrap().critic_loss[0];
        let mut last = first;
        for _ in 0..300 {
            last = a.td_update(&batch, &quiet()).unwrap().critic_loss[0];
        }
        assert!(last < 0.1 * first, "{first} -> {last}");
    }
}
