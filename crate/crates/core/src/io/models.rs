//! Actor, checkpoint and quantized-model files on top of [`Archive`].

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::archive::{Archive, TensorData};
use crate::env::SceneConfig;
use crate::quant::{QuantizedActor, QuantizedLayer};
use crate::rl::{Adam, AdamConfig, CriticNet, CriticParams, Td3Agent, TrainConfig};
use crate::snn::{ActorParams, ActorShape, LifParams, PopulationEncoder, SpikingActor};
use crate::tensor::ParamSet;
use crate::{Error, Result};

pub const KIND_ACTOR: &str = "actor";
pub const KIND_CHECKPOINT: &str = "checkpoint";
pub const KIND_QUANTIZED: &str = "quantized";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ActorMeta {
    shape: ActorShape,
    lif: LifParams,
    timesteps: usize,
    surrogate_width: f64,
    action_bounds: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ActorMeta {
    fn of(a: &SpikingActor) -> Self {
        Self {
            shape: a.shape,
            lif: a.lif,
            timesteps: a.timesteps,
            surrogate_width: a.surrogate_width,
            action_bounds: a.action_bounds.clone(),
            lower: a.lower.clone(),
            upper: a.upper.clone(),
        }
    }

    fn restore(self, archive: &Archive, prefix: &str) -> Result<SpikingActor> {
        let mut params = ActorParams::zeros(&self.shape);
        archive.fill_params(prefix, &mut params)?;
        let actor = SpikingActor {
            shape: self.shape,
            lif: self.lif,
            timesteps: self.timesteps,
            surrogate_width: self.surrogate_width,
            action_bounds: self.action_bounds,
            lower: self.lower,
            upper: self.upper,
            params,
        };
        actor.validate()?;
        Ok(actor)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CriticMeta {
    hidden: [usize; 2],
    scale: f64,
    input_offset: Vec<f64>,
    input_scale: Vec<f64>,
}

impl CriticMeta {
    fn of(c: &CriticNet) -> Self {
        Self { hidden: c.hidden, scale: c.scale, input_offset: c.input_offset.clone(), input_scale: c.input_scale.clone() }
    }

    fn restore(&self, archive: &Archive, prefix: &str) -> Result<CriticNet> {
        let mut params = CriticParams::zeros(self.hidden);
        archive.fill_params(prefix, &mut params)?;
        Ok(CriticNet {
            hidden: self.hidden,
            scale: self.scale,
            input_offset: self.input_offset.clone(),
            input_scale: self.input_scale.clone(),
            params,
        })
    }
}

pub fn actor_archive(actor: &SpikingActor) -> Result<Archive> {
    let mut a = Archive::new(KIND_ACTOR, serde_json::to_value(ActorMeta::of(actor))?);
    a.push_params("actor", &actor.params)?;
    Ok(a)
}

pub fn actor_from_archive(a: &Archive) -> Result<SpikingActor> {
    a.expect_kind(KIND_ACTOR)?;
    a.meta::<ActorMeta>()?.restore(a, "actor")
}

pub fn save_actor(path: &Path, actor: &SpikingActor) -> Result<()> {
    actor_archive(actor)?.save(path)
}

/// Loads an actor file, or the best actor stored in a checkpoint.
pub fn load_actor(path: &Path) -> Result<SpikingActor> {
    let a = Archive::load(path)?;
    match a.kind.as_str() {
        KIND_ACTOR => actor_from_archive(&a),
        KIND_CHECKPOINT => Ok(checkpoint_from_archive(&a)?.best_actor),
        other => Err(Error::Format(format!("{} holds a {other}, not an actor", path.display()))),
    }
}

/// Everything needed to inspect or continue a training run.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub train: TrainConfig,
    pub scene: SceneConfig,
    pub epochs_done: usize,
    pub best_epoch: Option<usize>,
    pub best_actor: SpikingActor,
    pub agent: Td3Agent,
}

#[derive(Debug, Serialize, Deserialize)]
struct AdamMeta {
    config: AdamConfig,
    step: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RngMeta {
    seed: String,
    stream: u64,
    word_pos: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointMeta {
    train: TrainConfig,
    scene: SceneConfig,
    epochs_done: usize,
    best_epoch: Option<usize>,
    updates: u64,
    actor: ActorMeta,
    critics: [CriticMeta; 2],
    adam: [AdamMeta; 3],
    rng: RngMeta,
}

fn push_adam(a: &mut Archive, prefix: &str, opt: &Adam) -> Result<()> {
    for (k, (m, v)) in opt.m.iter().zip(&opt.v).enumerate() {
        a.push(format!("{prefix}/m/{k}"), vec![m.len()], TensorData::F64(m.clone()))?;
        a.push(format!("{prefix}/v/{k}"), vec![v.len()], TensorData::F64(v.clone()))?;
    }
    Ok(())
}

fn restore_adam<P: ParamSet>(a: &Archive, prefix: &str, meta: &AdamMeta, params: &P) -> Result<Adam> {
    let mut opt = Adam::new(meta.config, params);
    opt.step = meta.step;
    for k in 0..opt.m.len() {
        let n = opt.m[k].len();
        opt.m[k].copy_from_slice(a.f64(&format!("{prefix}/m/{k}"), &[n])?);
        opt.v[k].copy_from_slice(a.f64(&format!("{prefix}/v/{k}"), &[n])?);
    }
    Ok(opt)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Result<[u8; 32]> {
    let bad = || Error::Format(format!("bad rng seed {s}"));
    if s.len() != 64 {
        return Err(bad());
    }
    let mut out = [0u8; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
    }
    Ok(out)
}

pub fn checkpoint_archive(c: &Checkpoint) -> Result<Archive> {
    let ag = &c.agent;
    let rng = ag.rng();
    let meta = CheckpointMeta {
        train: c.train.clone(),
        scene: c.scene.clone(),
        epochs_done: c.epochs_done,
        best_epoch: c.best_epoch,
        updates: ag.updates,
        actor: ActorMeta::of(&ag.actor),
        critics: [CriticMeta::of(&ag.critics[0]), CriticMeta::of(&ag.critics[1])],
        adam: [&ag.actor_opt, &ag.critic_opts[0], &ag.critic_opts[1]].map(|o| AdamMeta { config: o.config, step: o.step }),
        rng: RngMeta { seed: hex(&rng.get_seed()), stream: rng.get_stream(), word_pos: rng.get_word_pos().to_string() },
    };
    let mut a = Archive::new(KIND_CHECKPOINT, serde_json::to_value(meta)?);
    a.push_params("best_actor", &c.best_actor.params)?;
    a.push_params("actor", &ag.actor.params)?;
    a.push_params("actor_target", &ag.actor_target.params)?;
    for i in 0..2 {
        a.push_params(&format!("critic{i}"), &ag.critics[i].params)?;
        a.push_params(&format!("critic{i}_target"), &ag.critic_targets[i].params)?;
    }
    push_adam(&mut a, "adam/actor", &ag.actor_opt)?;
    push_adam(&mut a, "adam/critic0", &ag.critic_opts[0])?;
    push_adam(&mut a, "adam/critic1", &ag.critic_opts[1])?;
    Ok(a)
}

pub fn checkpoint_from_archive(a: &Archive) -> Result<Checkpoint> {
    a.expect_kind(KIND_CHECKPOINT)?;
    let meta: CheckpointMeta = a.meta()?;
    let actor_meta = meta.actor;
    let best_actor = actor_meta.clone().restore(a, "best_actor")?;
    let actor = actor_meta.clone().restore(a, "actor")?;
    let actor_target = actor_meta.restore(a, "actor_target")?;
    let critics = [meta.critics[0].restore(a, "critic0")?, meta.critics[1].restore(a, "critic1")?];
    let critic_targets = [meta.critics[0].restore(a, "critic0_target")?, meta.critics[1].restore(a, "critic1_target")?];
    let actor_opt = restore_adam(a, "adam/actor", &meta.adam[0], &actor.params)?;
    let critic_opts = [
        restore_adam(a, "adam/critic0", &meta.adam[1], &critics[0].params)?,
        restore_adam(a, "adam/critic1", &meta.adam[2], &critics[1].params)?,
    ];
    let mut rng = ChaCha8Rng::from_seed(unhex(&meta.rng.seed)?);
    rng.set_stream(meta.rng.stream);
    rng.set_word_pos(meta.rng.word_pos.parse().map_err(|_| Error::Format("bad rng position".into()))?);
    let agent = Td3Agent::from_parts(actor, actor_target, critics, critic_targets, actor_opt, critic_opts, meta.updates, rng);
    Ok(Checkpoint {
        train: meta.train,
        scene: meta.scene,
        epochs_done: meta.epochs_done,
        best_epoch: meta.best_epoch,
        best_actor,
        agent,
    })
}

pub fn save_checkpoint(path: &Path, c: &Checkpoint) -> Result<()> {
    checkpoint_archive(c)?.save(path)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    checkpoint_from_archive(&Archive::load(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct QuantMeta {
    bits: u32,
    frac_bits: u32,
    shape: ActorShape,
    timesteps: usize,
    current_decay: i64,
    voltage_decay: i64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    action_bounds: Vec<f64>,
    scales: [f64; 3],
    thresholds: [i64; 3],
}

pub fn quantized_archive(q: &QuantizedActor) -> Result<Archive> {
    let meta = QuantMeta {
        bits: q.bits,
        frac_bits: q.frac_bits,
        shape: q.shape,
        timesteps: q.timesteps,
        current_decay: q.current_decay,
        voltage_decay: q.voltage_decay,
        lower: q.encoder.lower.clone(),
        upper: q.encoder.upper.clone(),
        action_bounds: q.action_bounds.clone(),
        scales: std::array::from_fn(|l| q.layers[l].scale),
        thresholds: std::array::from_fn(|l| q.layers[l].threshold),
    };
    let mut a = Archive::new(KIND_QUANTIZED, serde_json::to_value(meta)?);
    let enc_shape = q.encoder.centers.shape().to_vec();
    a.push("enc_centers", enc_shape.clone(), TensorData::F64(q.encoder.centers.iter().copied().collect()))?;
    a.push("enc_widths", enc_shape, TensorData::F64(q.encoder.widths.iter().copied().collect()))?;
    a.push("decoder", q.decoder.shape().to_vec(), TensorData::F64(q.decoder.iter().copied().collect()))?;
    for (l, layer) in q.layers.iter().enumerate() {
        a.push(format!("w{}", l + 1), vec![layer.rows, layer.cols], TensorData::I32(layer.weights.clone()))?;
        a.push(format!("b{}", l + 1), vec![layer.cols], TensorData::I64(layer.bias.clone()))?;
    }
    Ok(a)
}

pub fn quantized_from_archive(a: &Archive) -> Result<QuantizedActor> {
    a.expect_kind(KIND_QUANTIZED)?;
    let m: QuantMeta = a.meta()?;
    let enc_dim = (m.shape.state_dim, m.shape.pop_in);
    let grid = |name: &str, dim: (usize, usize)| -> Result<ndarray::Array2<f64>> {
        let v = a.f64(name, &[dim.0, dim.1])?.to_vec();
        ndarray::Array2::from_shape_vec(dim, v).map_err(|e| Error::Shape(e.to_string()))
    };
    let encoder = PopulationEncoder {
        centers: grid("enc_centers", enc_dim)?,
        widths: grid("enc_widths", enc_dim)?,
        lower: m.lower,
        upper: m.upper,
    };
    let decoder = grid("decoder", (m.shape.action_dim, m.shape.pop_out))?;
    let dims = m.shape.layer_dims();
    let mut layers = Vec::with_capacity(3);
    for (l, (rows, cols)) in dims.into_iter().enumerate() {
        layers.push(QuantizedLayer {
            rows,
            cols,
            scale: m.scales[l],
            weights: a.i32(&format!("w{}", l + 1), &[rows, cols])?.to_vec(),
            bias: a.i64(&format!("b{}", l + 1), &[cols])?.to_vec(),
            threshold: m.thresholds[l],
        });
    }
    let q = QuantizedActor {
        bits: m.bits,
        frac_bits: m.frac_bits,
        shape: m.shape,
        timesteps: m.timesteps,
        current_decay: m.current_decay,
        voltage_decay: m.voltage_decay,
        encoder,
        decoder,
        action_bounds: m.action_bounds,
        layers: layers.try_into().expect("three layers"),
    };
    q.validate()?;
    Ok(q)
}

pub fn save_quantized(path: &Path, q: &QuantizedActor) -> Result<()> {
    quantized_archive(q)?.save(path)
}

pub fn load_quantized(path: &Path) -> Result<QuantizedActor> {
    quantized_from_archive(&Archive::load(path)?)
}
