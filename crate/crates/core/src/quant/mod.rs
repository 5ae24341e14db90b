//! Fixed-point deployment emulation: symmetric per-layer weight quantization
//! and integer LIF inference.
//!
//! Weights of layer l are stored as signed `bits`-bit integers `W_q` with a
//! scale `s_l = max|W| / (2^(bits−1) − 1)`. Neuron current and voltage are
//! integers in units of `s_l · 2^−F`, where `F = max(16, bits − 1)` fractional
//! bits keep the decay products exact enough; decays are binary fractions
//! `num / 2^16` applied with round-to-nearest shifts.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::par;
use crate::rl::EvalSummary;
use crate::snn::{decode_action, encode_state, ActorShape, LifParams, Policy, PopulationEncoder, SpikeRaster, SpikingActor};
use crate::types::{ActionVector, StateVector, ACTION_DIM};
use crate::{Error, Result};

const DECAY_BITS: u32 = 16;

/// Largest representable magnitude on the positive side, `2^(bits−1) − 1`.
fn qmax(bits: u32) -> i64 {
    (1i64 << (bits - 1)) - 1
}

fn check_bits(bits: u32) -> Result<()> {
    if !(2..=24).contains(&bits) {
        return Err(Error::Config(format!("weight bits must lie in 2..=24, got {bits}")));
    }
    Ok(())
}

/// Symmetric max-abs quantization of one tensor with round-half-to-even.
/// Returns the integers and the scale; an all-zero tensor gets scale 1.
pub fn quantize(weights: &[f64], bits: u32) -> Result<(Vec<i32>, f64)> {
    check_bits(bits)?;
    if let Some(bad) = weights.iter().find(|w| !w.is_finite()) {
        return Err(Error::RejectedInput(format!("cannot quantize non-finite weight {bad}")));
    }
    let max = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let scale = if max == 0.0 { 1.0 } else { max / qmax(bits) as f64 };
    let (lo, hi) = (-(qmax(bits) + 1), qmax(bits));
    let q = weights.iter().map(|w| ((w / scale).round_ties_even() as i64).clamp(lo, hi) as i32).collect();
    Ok((q, scale))
}

/// One quantized synaptic layer, fan-in × fan-out row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedLayer {
    pub rows: usize,
    pub cols: usize,
    pub scale: f64,
    pub weights: Vec<i32>,
    /// Bias in neuron-state units (`s_l · 2^−F`).
    pub bias: Vec<i64>,
    /// Firing threshold in neuron-state units.
    pub threshold: i64,
}

impl QuantizedLayer {
    pub fn dequantize(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.rows, self.cols), |(i, j)| self.weights[i * self.cols + j] as f64 * self.scale)
    }

    fn row(&self, j: usize) -> &[i32] {
        &self.weights[j * self.cols..(j + 1) * self.cols]
    }
}

/// Spiking actor with integer synapses and integer neuron state. Encoder and
/// decoder stay in floating point; encoder activations are quantized to
/// `bits − 1` fractional bits before entering layer 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedActor {
    pub bits: u32,
    pub frac_bits: u32,
    pub shape: ActorShape,
    pub timesteps: usize,
    pub current_decay: i64,
    pub voltage_decay: i64,
    pub encoder: PopulationEncoder,
    pub decoder: Array2<f64>,
    pub action_bounds: Vec<f64>,
    pub layers: [QuantizedLayer; 3],
}

fn decay_num(x: f64, what: &str) -> Result<i64> {
    let n = x * (1u64 << DECAY_BITS) as f64;
    if n.fract() != 0.0 {
        return Err(Error::Config(format!("{what} {x} is not a multiple of 2^-{DECAY_BITS}")));
    }
    Ok(n as i64)
}

impl QuantizedActor {
    pub fn from_actor(actor: &SpikingActor, bits: u32) -> Result<Self> {
        check_bits(bits)?;
        actor.validate()?;
        let frac_bits = DECAY_BITS.max(bits - 1);
        let unit = (1u64 << frac_bits) as f64;
        let p = &actor.params;
        let mut layers = Vec::with_capacity(3);
        for l in 0..3 {
            let w = &p.weights[l];
            let flat: Vec<f64> = w.iter().copied().collect();
            let (weights, scale) = quantize(&flat, bits)?;
            let bias = p.biases[l].iter().map(|b| (b / scale * unit).round_ties_even() as i64).collect();
            let threshold = (actor.lif.threshold / scale * unit).round_ties_even() as i64;
            layers.push(QuantizedLayer { rows: w.nrows(), cols: w.ncols(), scale, weights, bias, threshold });
        }
        let layers: [QuantizedLayer; 3] = layers.try_into().expect("three layers");
        Ok(Self {
            bits,
            frac_bits,
            shape: actor.shape,
            timesteps: actor.timesteps,
            current_decay: decay_num(actor.lif.current_decay, "current decay")?,
            voltage_decay: decay_num(actor.lif.voltage_decay, "voltage decay")?,
            encoder: actor.encoder(),
            decoder: p.decoder.clone(),
            action_bounds: actor.action_bounds.clone(),
            layers,
        })
    }

    /// Float actor whose synaptic weights are the dequantized values.
    pub fn dequantized_actor(&self, template: &SpikingActor) -> SpikingActor {
        let mut a = template.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            a.params.weights[l] = layer.dequantize();
        }
        a
    }

    pub fn validate(&self) -> Result<()> {
        check_bits(self.bits)?;
        let (lo, hi) = (-(qmax(self.bits) + 1), qmax(self.bits));
        let dims = self.shape.layer_dims();
        for (l, layer) in self.layers.iter().enumerate() {
            if (layer.rows, layer.cols) != dims[l] || layer.weights.len() != layer.rows * layer.cols || layer.bias.len() != layer.cols {
                return Err(Error::Shape(format!("quantized layer {} does not match the actor shape", l + 1)));
            }
            if !(layer.scale > 0.0) || !layer.scale.is_finite() {
                return Err(Error::Config(format!("layer {} scale must be > 0", l + 1)));
            }
            if layer.weights.iter().any(|&w| (w as i64) < lo || (w as i64) > hi) {
                return Err(Error::Config(format!("layer {} has weights outside the {}-bit range", l + 1, self.bits)));
            }
        }
        if self.decoder.dim() != (self.shape.action_dim, self.shape.pop_out) {
            return Err(Error::Shape("decoder shape".into()));
        }
        self.encoder.validate()
    }

    /// Nominal float LIF constants this integer model represents.
    pub fn lif(&self) -> LifParams {
        let d = (1u64 << DECAY_BITS) as f64;
        LifParams {
            current_decay: self.current_decay as f64 / d,
            voltage_decay: self.voltage_decay as f64 / d,
            threshold: self.layers[0].threshold as f64 * self.layers[0].scale / (1u64 << self.frac_bits) as f64,
        }
    }
}

/// `round(x · num / 2^16)` with ties away from zero, in 128-bit intermediate.
#[inline]
fn decay(x: i64, num: i64) -> i64 {
    let p = x as i128 * num as i128;
    let half = 1i128 << (DECAY_BITS - 1);
    let r = if p >= 0 { (p + half) >> DECAY_BITS } else { -((-p + half) >> DECAY_BITS) };
    r as i64
}

/// Integer LIF layer state.
struct IntLayer {
    current: Vec<i64>,
    voltage: Vec<i64>,
    spikes: Vec<bool>,
}

impl IntLayer {
    fn new(n: usize) -> Self {
        Self { current: vec![0; n], voltage: vec![0; n], spikes: vec![false; n] }
    }

    fn step(&mut self, input: &[i64], threshold: i64, cd: i64, vd: i64) {
        for k in 0..input.len() {
            self.current[k] = decay(self.current[k], cd) + input[k];
            let carried = if self.spikes[k] { 0 } else { decay(self.voltage[k], vd) };
            self.voltage[k] = carried + self.current[k];
            self.spikes[k] = self.voltage[k] >= threshold;
        }
    }
}

/// Integer-arithmetic inference mirroring [`SpikingActor::forward`].
pub fn quantized_forward(q: &QuantizedActor, state: &StateVector) -> Result<(ActionVector, SpikeRaster)> {
    let act = encode_state(state, &q.encoder)?;
    let in_frac = q.bits - 1;
    let act_unit = (1u64 << in_frac) as f64;
    let shift = q.frac_bits - in_frac;
    let l1 = &q.layers[0];
    let mut input1 = vec![0i64; l1.cols];
    for (j, &a) in act.iter().enumerate() {
        let aq = (a * act_unit).round_ties_even() as i64;
        if aq != 0 {
            for (o, &w) in input1.iter_mut().zip(l1.row(j)) {
                *o += aq * w as i64;
            }
        }
    }
    for (o, b) in input1.iter_mut().zip(&l1.bias) {
        *o = (*o << shift) + b;
    }
    let widths = q.shape.spiking_widths();
    let mut layers = widths.map(IntLayer::new);
    let mut raster = SpikeRaster::new(q.timesteps, &widths);
    let mut buf = [vec![0i64; widths[1]], vec![0i64; widths[2]]];
    for t in 0..q.timesteps {
        layers[0].step(&input1, l1.threshold, q.current_decay, q.voltage_decay);
        raster.write_step(t, 0, &layers[0].spikes);
        for l in 1..3 {
            let layer = &q.layers[l];
            let out = &mut buf[l - 1];
            out.copy_from_slice(&layer.bias);
            let presyn = &layers[l - 1].spikes;
            for (j, _) in presyn.iter().enumerate().filter(|(_, &s)| s) {
                for (o, &w) in out.iter_mut().zip(layer.row(j)) {
                    *o += (w as i64) << q.frac_bits;
                }
            }
            layers[l].step(out, layer.threshold, q.current_decay, q.voltage_decay);
            raster.write_step(t, l, &layers[l].spikes);
        }
    }
    let action = decode_action(&raster.counts(2), &q.decoder, &q.action_bounds, q.timesteps)?;
    Ok((action, raster))
}

impl Policy for QuantizedActor {
    fn forward(&self, state: &StateVector) -> Result<(ActionVector, SpikeRaster)> {
        quantized_forward(self, state)
    }

    fn shape(&self) -> ActorShape {
        self.shape
    }

    fn timesteps(&self) -> usize {
        self.timesteps
    }
}

/// Behavioral deviation between a reference and a candidate policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub states: usize,
    pub max_abs_deviation: [f64; ACTION_DIM],
    pub mean_abs_deviation: [f64; ACTION_DIM],
    pub max_hamming: usize,
    pub mean_hamming: f64,
    pub reference_success_rate: Option<f64>,
    pub candidate_success_rate: Option<f64>,
    /// candidate − reference, in fraction of episodes.
    pub success_delta: Option<f64>,
}

impl EquivalenceReport {
    pub fn overall_max_deviation(&self) -> f64 {
        self.max_abs_deviation.iter().copied().fold(0.0, f64::max)
    }

    pub fn with_success(mut self, reference: &EvalSummary, candidate: &EvalSummary) -> Self {
        self.reference_success_rate = Some(reference.success_rate);
        self.candidate_success_rate = Some(candidate.success_rate);
        self.success_delta = Some(candidate.success_rate - reference.success_rate);
        self
    }
}

/// Per-dimension action deviation and spike-raster Hamming distance over `states`.
pub fn compare<A, B>(reference: &A, candidate: &B, states: &[StateVector]) -> Result<EquivalenceReport>
where
    A: Policy + ?Sized,
    B: Policy + ?Sized,
{
    let rows = par::map_slice(states, |s| -> Result<([f64; ACTION_DIM], usize)> {
        let (a, ra) = reference.forward(s)?;
        let (b, rb) = candidate.forward(s)?;
        let dev = std::array::from_fn(|d| (a.0[d] - b.0[d]).abs());
        let ham = ra
            .hamming(&rb)
            .ok_or_else(|| Error::Shape("policies produce rasters of different shapes".into()))?;
        Ok((dev, ham))
    });
    let mut max_abs = [0.0; ACTION_DIM];
    let mut sum_abs = [0.0; ACTION_DIM];
    let (mut max_h, mut sum_h) = (0usize, 0usize);
    for row in rows {
        let (dev, ham) = row?;
        for d in 0..ACTION_DIM {
            max_abs[d] = f64::max(max_abs[d], dev[d]);
            sum_abs[d] += dev[d];
        }
        max_h = max_h.max(ham);
        sum_h += ham;
    }
    let n = states.len().max(1) as f64;
    Ok(EquivalenceReport {
        states: states.len(),
        max_abs_deviation: max_abs,
        mean_abs_deviation: sum_abs.map(|s| s / n),
        max_hamming: max_h,
        mean_hamming: sum_h as f64 / n,
        reference_success_rate: None,
        candidate_success_rate: None,
        success_delta: None,
    })
}
