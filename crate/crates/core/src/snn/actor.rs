use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{encode_state, PopulationEncoder, DEFAULT_STATE_BOUNDS};
use super::lif::{LayerState, LifParams};
use super::raster::SpikeRaster;
use crate::tensor::{ParamSet, TensorRef};
use crate::types::{ActionVector, StateVector, ACTION_DIM, STATE_DIM};
use crate::{Error, Result};

/// Layer sizes of the population-coded actor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorShape {
    pub state_dim: usize,
    pub pop_in: usize,
    pub hidden: [usize; 2],
    pub action_dim: usize,
    pub pop_out: usize,
}

impl Default for ActorShape {
    /// 13·10 → 256 → 256 → 6·10.
    fn default() -> Self {
        Self { state_dim: STATE_DIM, pop_in: 10, hidden: [256, 256], action_dim: ACTION_DIM, pop_out: 10 }
    }
}

impl ActorShape {
    pub fn input_width(&self) -> usize {
        self.state_dim * self.pop_in
    }

    pub fn output_width(&self) -> usize {
        self.action_dim * self.pop_out
    }

    /// Widths of the three spiking layers.
    pub fn spiking_widths(&self) -> [usize; 3] {
        [self.hidden[0], self.hidden[1], self.output_width()]
    }

    /// (fan-in, fan-out) of the three synaptic weight matrices.
    pub fn layer_dims(&self) -> [(usize, usize); 3] {
        [
            (self.input_width(), self.hidden[0]),
            (self.hidden[0], self.hidden[1]),
            (self.hidden[1], self.output_width()),
        ]
    }
}

/// Trainable tensors of the actor. Synaptic weights are stored fan-in × fan-out
/// so a presynaptic spike reads one contiguous row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorParams {
    pub enc_centers: Array2<f64>,
    pub enc_widths: Array2<f64>,
    pub weights: [Array2<f64>; 3],
    pub biases: [Array1<f64>; 3],
    /// action_dim × pop_out
    pub decoder: Array2<f64>,
}

impl ActorParams {
    pub fn zeros(shape: &ActorShape) -> Self {
        let dims = shape.layer_dims();
        Self {
            enc_centers: Array2::zeros((shape.state_dim, shape.pop_in)),
            enc_widths: Array2::zeros((shape.state_dim, shape.pop_in)),
            weights: dims.map(Array2::zeros),
            biases: dims.map(|(_, o)| Array1::zeros(o)),
            decoder: Array2::zeros((shape.action_dim, shape.pop_out)),
        }
    }

    pub fn zeros_like(other: &ActorParams) -> Self {
        Self {
            enc_centers: Array2::zeros(other.enc_centers.dim()),
            enc_widths: Array2::zeros(other.enc_widths.dim()),
            weights: other.weights.clone().map(|w| Array2::zeros(w.dim())),
            biases: other.biases.clone().map(|b| Array1::zeros(b.len())),
            decoder: Array2::zeros(other.decoder.dim()),
        }
    }

    pub fn same_shape(&self, other: &ActorParams) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.shape == y.shape)
    }
}

impl ParamSet for ActorParams {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = vec![
            TensorRef { name: "enc_centers".into(), shape: self.enc_centers.shape().to_vec(), data: self.enc_centers.as_slice().expect("standard layout") },
            TensorRef { name: "enc_widths".into(), shape: self.enc_widths.shape().to_vec(), data: self.enc_widths.as_slice().expect("standard layout") },
        ];
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            out.push(TensorRef { name: format!("w{}", l + 1), shape: w.shape().to_vec(), data: w.as_slice().expect("standard layout") });
            out.push(TensorRef { name: format!("b{}", l + 1), shape: b.shape().to_vec(), data: b.as_slice().expect("standard layout") });
        }
        out.push(TensorRef { name: "decoder".into(), shape: self.decoder.shape().to_vec(), data: self.decoder.as_slice().expect("standard layout") });
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.enc_centers.as_slice_mut().expect("standard layout"),
            self.enc_widths.as_slice_mut().expect("standard layout"),
        ];
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w.as_slice_mut().expect("standard layout"));
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        out.push(self.decoder.as_slice_mut().expect("standard layout"));
        out
    }
}

/// Population-coded spiking actor: Gaussian encoder, three LIF layers and a
/// per-action rate decoder `a_d = bound_d · tanh(w_d · r_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikingActor {
    pub shape: ActorShape,
    pub lif: LifParams,
    pub timesteps: usize,
    /// Width of the rectangular surrogate window around the threshold.
    pub surrogate_width: f64,
    pub action_bounds: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub params: ActorParams,
}

/// Construction options for a fresh actor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActorConfig {
    pub shape: ActorShape,
    pub lif: LifParams,
    pub timesteps: usize,
    pub surrogate_width: f64,
    pub state_bounds: Vec<(f64, f64)>,
    /// Multiplier on the decoder's ±1/√pop initial range; 0 starts from the
    /// zero action.
    pub decoder_init_scale: f64,
}

impl Default for ActorConfig {
    fn default() -> Self {
        Self {
            shape: ActorShape::default(),
            lif: LifParams::default(),
            timesteps: 9,
            surrogate_width: 0.5,
            state_bounds: DEFAULT_STATE_BOUNDS.to_vec(),
            decoder_init_scale: 1.0,
        }
    }
}

impl SpikingActor {
    /// Uniform ±1/√fan_in initialisation for synapses, biases and decoder.
    pub fn new<R: Rng + ?Sized>(cfg: &ActorConfig, action_bounds: &[f64], rng: &mut R) -> Result<Self> {
        let shape = cfg.shape;
        if cfg.state_bounds.len() != shape.state_dim {
            return Err(crate::error::shape_err("state bounds", shape.state_dim, cfg.state_bounds.len()));
        }
        if action_bounds.len() != shape.action_dim {
            return Err(crate::error::shape_err("action bounds", shape.action_dim, action_bounds.len()));
        }
        let enc = PopulationEncoder::new(&cfg.state_bounds, shape.pop_in)?;
        let mut uniform = |rows: usize, cols: usize, fan_in: usize| {
            let k = 1.0 / (fan_in as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-k..k))
        };
        let dims = shape.layer_dims();
        let weights = dims.map(|(i, o)| uniform(i, o, i));
        let biases = dims.map(|(i, o)| uniform(1, o, i).into_shape_with_order(o).expect("row"));
        let decoder = uniform(shape.action_dim, shape.pop_out, shape.pop_out) * cfg.decoder_init_scale;
        let actor = Self {
            shape,
            lif: cfg.lif,
            timesteps: cfg.timesteps,
            surrogate_width: cfg.surrogate_width,
            action_bounds: action_bounds.to_vec(),
            lower: enc.lower.clone(),
            upper: enc.upper.clone(),
            params: ActorParams { enc_centers: enc.centers, enc_widths: enc.widths, weights, biases, decoder },
        };
        actor.validate()?;
        Ok(actor)
    }

    /// Same architecture with every synaptic, bias and decoder weight zero.
    pub fn zeroed(&self) -> Self {
        let mut a = self.clone();
        for w in a.params.weights.iter_mut() {
            w.fill(0.0);
        }
        for b in a.params.biases.iter_mut() {
            b.fill(0.0);
        }
        a.params.decoder.fill(0.0);
        a
    }

    pub fn validate(&self) -> Result<()> {
        self.lif.validate()?;
        if self.timesteps == 0 {
            return Err(Error::Config("timesteps must be >= 1".into()));
        }
        if !(self.surrogate_width > 0.0) {
            return Err(Error::Config("surrogate width must be > 0".into()));
        }
        if self.action_bounds.len() != self.shape.action_dim || self.action_bounds.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::Config("action bounds must be positive, one per action dim".into()));
        }
        let p = &self.params;
        let s = &self.shape;
        if p.enc_centers.dim() != (s.state_dim, s.pop_in) || p.enc_widths.dim() != (s.state_dim, s.pop_in) {
            return Err(Error::Shape("encoder tensors do not match the actor shape".into()));
        }
        for (l, (i, o)) in s.layer_dims().iter().enumerate() {
            if p.weights[l].dim() != (*i, *o) || p.biases[l].len() != *o {
                return Err(Error::Shape(format!("layer {} is not {i}×{o}", l + 1)));
            }
        }
        if p.decoder.dim() != (s.action_dim, s.pop_out) {
            return Err(Error::Shape("decoder shape".into()));
        }
        self.encoder().validate()
    }

    /// Encoder view over the current trainable centres/widths.
    pub fn encoder(&self) -> PopulationEncoder {
        PopulationEncoder {
            centers: self.params.enc_centers.clone(),
            widths: self.params.enc_widths.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }

    /// Event-driven single-state inference over `timesteps` steps. Encoder
    /// activations enter layer 1 as a constant current every step; deeper layers
    /// accumulate only the rows of presynaptic neurons that spiked.
    pub fn forward(&self, state: &StateVector) -> Result<(ActionVector, SpikeRaster)> {
        let act = encode_state(state, &self.encoder())?;
        let p = &self.params;
        let mut input1 = p.biases[0].clone();
        for (j, &a) in act.iter().enumerate() {
            if a != 0.0 {
                input1.scaled_add(a, &p.weights[0].row(j));
            }
        }
        let widths = self.shape.spiking_widths();
        let mut layers = widths.map(LayerState::zeros);
        let mut raster = SpikeRaster::new(self.timesteps, &widths);
        let mut buf2 = vec![0.0; widths[1]];
        let mut buf3 = vec![0.0; widths[2]];
        let input1 = input1.to_vec();
        for t in 0..self.timesteps {
            let s1 = layers[0].step(&input1, &self.lif)?;
            raster.write_step(t, 0, s1);
            event_input(&p.weights[1], &p.biases[1], s1, &mut buf2);
            let s2 = layers[1].step(&buf2, &self.lif)?;
            raster.write_step(t, 1, s2);
            event_input(&p.weights[2], &p.biases[2], s2, &mut buf3);
            let s3 = layers[2].step(&buf3, &self.lif)?;
            raster.write_step(t, 2, s3);
        }
        let action = decode_action(&raster.counts(2), &p.decoder, &self.action_bounds, self.timesteps)?;
        Ok((action, raster))
    }

    pub fn act(&self, state: &StateVector) -> Result<ActionVector> {
        self.forward(state).map(|(a, _)| a)
    }
}

/// `out = b + Σ_{j spiking} W[j, :]`
fn event_input(w: &Array2<f64>, b: &Array1<f64>, spikes: &[bool], out: &mut [f64]) {
    out.copy_from_slice(b.as_slice().expect("standard layout"));
    for (j, _) in spikes.iter().enumerate().filter(|(_, &s)| s) {
        for (o, wj) in out.iter_mut().zip(w.row(j)) {
            *o += wj;
        }
    }
}

pub(crate) const TANH_LIMIT: f64 = 1.0 - f64::EPSILON;

/// Rate decoding: `r = counts / T` per output neuron, then per action dim
/// `a_d = bound_d · tanh(Σ_j w_dj r_dj)`.
pub fn decode_action(counts: &[u32], decoder: &Array2<f64>, bounds: &[f64], timesteps: usize) -> Result<ActionVector> {
    let (dims, pop) = decoder.dim();
    if counts.len() != dims * pop {
        return Err(crate::error::shape_err("output spike counts", dims * pop, counts.len()));
    }
    if dims != ACTION_DIM || bounds.len() != dims {
        return Err(crate::error::shape_err("action dims", ACTION_DIM, dims));
    }
    if let Some(c) = counts.iter().find(|&&c| c as usize > timesteps) {
        return Err(Error::Contract(format!("spike count {c} exceeds {timesteps} timesteps")));
    }
    let mut a = [0.0; ACTION_DIM];
    for d in 0..dims {
        let z: f64 = (0..pop).map(|j| decoder[[d, j]] * counts[d * pop + j] as f64 / timesteps as f64).sum();
        // tanh rounds to ±1 for large |z|; keep the action strictly inside.
        a[d] = bounds[d] * z.tanh().clamp(-TANH_LIMIT, TANH_LIMIT);
    }
    Ok(ActionVector(a))
}
