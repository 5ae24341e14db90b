//! Policy rollouts and evaluation suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::replay::Transition;
use super::reward::{compute_reward, RewardParams};
use crate::env::{InsertionEnv, Termination};
use crate::par;
use crate::snn::Policy;
use crate::types::{ActionVector, FTReading, Pose, StateVector};
use crate::{Error, Result};

/// How actions are chosen during a rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Deterministic policy output.
    Exploit,
    /// Policy output plus Gaussian noise with σ = `sigma`·bound, clipped to the bounds.
    Explore { sigma: f64, seed: u64 },
    /// Uniform actions within the bounds, ignoring the policy (warm-up).
    Uniform { seed: u64 },
}

/// One policy decision and what followed it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionLog {
    /// Simulated time at which the decision was taken, s.
    pub time: f64,
    pub state: StateVector,
    pub action: ActionVector,
    pub reward: f64,
    /// Pose and sensor reading at the next decision point.
    pub pose: Pose,
    pub ft: FTReading,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub friction: f64,
    /// Lateral start offset from the hole axis, m.
    pub start_offset: f64,
    pub decisions: Vec<DecisionLog>,
    pub final_state: StateVector,
    pub termination: Termination,
    /// Simulated time at which the success depth was reached.
    pub time_to_insertion: Option<f64>,
    pub total_return: f64,
}

impl EpisodeRecord {
    pub fn success(&self) -> bool {
        self.termination == Termination::Success
    }

    pub fn interactions(&self) -> usize {
        self.decisions.len()
    }

    /// Replay transitions; only the success transition is terminal.
    pub fn transitions(&self) -> Vec<Transition> {
        let n = self.decisions.len();
        (0..n)
            .map(|k| {
                let d = &self.decisions[k];
                let last = k + 1 == n;
                Transition {
                    state: d.state,
                    action: d.action,
                    reward: d.reward,
                    next_state: if last { self.final_state } else { self.decisions[k + 1].state },
                    done: if last && self.success() { 1.0 } else { 0.0 },
                }
            })
            .collect()
    }
}

/// Rollout limits and reward shaping shared by training and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    /// Decision cap per episode (the scene timeout usually ends it first).
    pub max_interactions: usize,
    pub reward: RewardParams,
}

/// Resets `env` with `seed` and runs the policy until success, timeout or the
/// interaction cap.
pub fn run_episode<P: Policy + ?Sized>(
    env: &mut InsertionEnv,
    policy: &P,
    seed: u64,
    cfg: &EpisodeConfig,
    mode: Mode,
) -> Result<EpisodeRecord> {
    let mut state = env.reset(seed);
    let start_offset = env.lateral_offset();
    let bounds = env.scene().postprocess.bounds;
    let mut noise_rng = match mode {
        Mode::Explore { seed, .. } | Mode::Uniform { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Mode::Exploit => None,
    };
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut decisions = Vec::new();
    let mut termination = Termination::Continue;
    let mut time_to_insertion = None;
    let mut total_return = 0.0;
    while decisions.len() < cfg.max_interactions {
        let action = match (mode, noise_rng.as_mut()) {
            (Mode::Exploit, _) | (_, None) => policy.act(&state)?,
            (Mode::Explore { sigma, .. }, Some(rng)) => {
                let a = policy.act(&state)?;
                ActionVector(std::array::from_fn(|d| {
                    (a.0[d] + sigma * bounds[d] * unit.sample(rng)).clamp(-bounds[d], bounds[d])
                }))
            }
            (Mode::Uniform { .. }, Some(rng)) => {
                ActionVector(std::array::from_fn(|d| rng.random_range(-bounds[d]..=bounds[d])))
            }
        };
        let time = env.time();
        let out = env.step(&action)?;
        let reward = compute_reward(&out.ft, &out.pose, &cfg.reward);
        if !reward.is_finite() {
            return Err(Error::Fault(format!("non-finite reward at t = {time}")));
        }
        total_return += reward;
        decisions.push(DecisionLog { time, state, action, reward, pose: out.pose, ft: out.ft, clamped: out.clamped });
        state = out.state;
        termination = out.termination;
        if termination == Termination::Success {
            time_to_insertion = Some(out.time);
        }
        if termination != Termination::Continue {
            break;
        }
    }
    if termination == Termination::Continue {
        termination = Termination::Timeout;
    }
    Ok(EpisodeRecord {
        seed,
        friction: env.friction(),
        start_offset,
        decisions,
        final_state: state,
        termination,
        time_to_insertion,
        total_return,
    })
}

/// Aggregate outcome of an evaluation suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_return: f64,
    /// Median over successful episodes, s.
    pub median_time_to_insertion: Option<f64>,
}

impl EvalSummary {
    pub fn from_records(records: &[EpisodeRecord]) -> Self {
        let n = records.len();
        let successes = records.iter().filter(|r| r.success()).count();
        let mut times: Vec<f64> = records.iter().filter_map(|r| r.time_to_insertion).collect();
        times.sort_by(f64::total_cmp);
        let median = match times.len() {
            0 => None,
            k if k % 2 == 1 => Some(times[k / 2]),
            k => Some(0.5 * (times[k / 2 - 1] + times[k / 2])),
        };
        Self {
            episodes: n,
            successes,
            success_rate: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
            mean_return: if n == 0 { 0.0 } else { records.iter().map(|r| r.total_return).sum::<f64>() / n as f64 },
            median_time_to_insertion: median,
        }
    }
}

/// Runs one exploit episode per seed, each on a fresh environment from
/// `make_env`; records come back in seed order.
pub fn evaluate<P, F>(policy: &P, make_env: &F, seeds: &[u64], cfg: &EpisodeConfig) -> Result<Vec<EpisodeRecord>>
where
    P: Policy + ?Sized,
    F: Fn() -> Result<InsertionEnv> + Sync,
{
    par::map_slice(seeds, |&seed| {
        let mut env = make_env()?;
        run_episode(&mut env, policy, seed, cfg, Mode::Exploit)
    })
    .into_iter()
    .collect()
}
