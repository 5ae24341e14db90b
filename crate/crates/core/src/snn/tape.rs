//! Batched forward pass with stored traces and the surrogate-gradient backward
//! pass (backpropagation through the LIF time steps).

use ndarray::{Array1, Array2, Axis};

use super::actor::{ActorParams, SpikingActor};
use crate::types::StateVector;
use crate::{Error, Result};

/// What the backward pass needs from one batched forward pass.
#[derive(Debug, Clone)]
struct Trace {
    /// B × dims, normalized states.
    normalized: Array2<f64>,
    /// B × (dims·pop) encoder activations.
    activations: Array2<f64>,
    /// Per spiking layer, per timestep: membrane voltage before reset (B × n).
    voltages: Vec<Vec<Array2<f64>>>,
    /// Per spiking layer, per timestep: spikes as 0/1 (B × n).
    spikes: Vec<Vec<Array2<f64>>>,
    /// B × output_width firing rates.
    rates: Array2<f64>,
    /// B × action_dim decoder pre-activations.
    pre_tanh: Array2<f64>,
}

/// Records one batched forward pass so gradients can be taken afterwards.
#[derive(Debug, Default)]
pub struct ActorTape {
    trace: Option<Trace>,
}

impl ActorTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn has_trace(&self) -> bool {
        self.trace.is_some()
    }

    /// Dense batched forward; returns B × action_dim actions and keeps the trace.
    pub fn forward(&mut self, actor: &SpikingActor, states: &[StateVector]) -> Result<Array2<f64>> {
        let (actions, trace) = forward_batch(actor, states)?;
        self.trace = Some(trace);
        Ok(actions)
    }

    /// Parameter gradients of `Σ_b Σ_d upstream[b,d] · a[b,d]` for the last
    /// recorded batch. Consumes the trace.
    pub fn backward(&mut self, actor: &SpikingActor, upstream: &Array2<f64>) -> Result<ActorParams> {
        let trace = self
            .trace
            .take()
            .ok_or_else(|| Error::State("backward called without a recorded forward pass".into()))?;
        backward(actor, &trace, upstream)
    }
}

/// Batched forward without recording.
pub fn forward_batch_actions(actor: &SpikingActor, states: &[StateVector]) -> Result<Array2<f64>> {
    forward_batch(actor, states).map(|(a, _)| a)
}

fn forward_batch(actor: &SpikingActor, states: &[StateVector]) -> Result<(Array2<f64>, Trace)> {
    let enc = actor.encoder();
    let batch = states.len();
    let dims = enc.dims();
    let mut normalized = Array2::zeros((batch, dims));
    for (b, s) in states.iter().enumerate() {
        let x = enc.normalize(s.as_slice())?;
        normalized.row_mut(b).assign(&Array1::from(x));
    }
    let pop = enc.pop();
    let activations = Array2::from_shape_fn((batch, enc.width()), |(b, k)| {
        enc.gaussian(k / pop, k % pop, normalized[[b, k / pop]])
    });

    let p = &actor.params;
    let lif = &actor.lif;
    let t_steps = actor.timesteps;
    let widths = actor.shape.spiking_widths();
    let input1 = activations.dot(&p.weights[0]) + &p.biases[0];

    let mut voltages: Vec<Vec<Array2<f64>>> = (0..3).map(|_| Vec::with_capacity(t_steps)).collect();
    let mut spikes: Vec<Vec<Array2<f64>>> = (0..3).map(|_| Vec::with_capacity(t_steps)).collect();
    let mut current: Vec<Array2<f64>> = widths.iter().map(|&w| Array2::zeros((batch, w))).collect();
    let mut voltage: Vec<Array2<f64>> = current.clone();
    let mut spike: Vec<Array2<f64>> = current.clone();

    for _ in 0..t_steps {
        for l in 0..3 {
            let input = match l {
                0 => input1.clone(),
                _ => spike[l - 1].dot(&p.weights[l]) + &p.biases[l],
            };
            let c = &mut current[l];
            let v = &mut voltage[l];
            let s = &mut spike[l];
            ndarray::Zip::from(c)
                .and(v)
                .and(s)
                .and(&input)
                .for_each(|c, v, s, &i| {
                    *c = lif.current_decay * *c + i;
                    *v = lif.voltage_decay * *v * (1.0 - *s) + *c;
                    *s = if *v >= lif.threshold { 1.0 } else { 0.0 };
                });
            voltages[l].push(voltage[l].clone());
            spikes[l].push(spike[l].clone());
        }
    }

    let mut rates = Array2::<f64>::zeros((batch, widths[2]));
    for s in &spikes[2] {
        rates += s;
    }
    rates /= t_steps as f64;

    let (adim, opop) = p.decoder.dim();
    let mut pre_tanh = Array2::zeros((batch, adim));
    for b in 0..batch {
        for d in 0..adim {
            pre_tanh[[b, d]] = (0..opop).map(|j| p.decoder[[d, j]] * rates[[b, d * opop + j]]).sum();
        }
    }
    let bounds = Array1::from(actor.action_bounds.clone());
    let limit = super::actor::TANH_LIMIT;
    let actions = pre_tanh.mapv(|z: f64| z.tanh().clamp(-limit, limit)) * &bounds;
    Ok((actions, Trace { normalized, activations, voltages, spikes, rates, pre_tanh }))
}

fn backward(actor: &SpikingActor, trace: &Trace, upstream: &Array2<f64>) -> Result<ActorParams> {
    let p = &actor.params;
    let batch = trace.rates.nrows();
    let (adim, opop) = p.decoder.dim();
    if upstream.dim() != (batch, adim) {
        return Err(Error::Shape(format!(
            "upstream gradient is {:?}, forward batch was {:?}",
            upstream.dim(),
            (batch, adim)
        )));
    }
    let mut grads = ActorParams::zeros_like(p);
    let t_steps = actor.timesteps;
    let lif = &actor.lif;

    // Decoder: a = bound·tanh(z), z_d = Σ_j w_dj r_dj.
    let mut dz = Array2::<f64>::zeros((batch, adim));
    for b in 0..batch {
        for d in 0..adim {
            let th = trace.pre_tanh[[b, d]].tanh();
            dz[[b, d]] = upstream[[b, d]] * actor.action_bounds[d] * (1.0 - th * th);
        }
    }
    let mut d_rates = Array2::<f64>::zeros(trace.rates.dim());
    for b in 0..batch {
        for d in 0..adim {
            let g = dz[[b, d]];
            if g == 0.0 {
                continue;
            }
            for j in 0..opop {
                let k = d * opop + j;
                grads.decoder[[d, j]] += g * trace.rates[[b, k]];
                d_rates[[b, k]] = g * p.decoder[[d, j]];
            }
        }
    }

    // Every output spike contributes 1/T to its neuron's rate.
    let mut ext: Vec<Array2<f64>> = vec![d_rates / t_steps as f64; t_steps];
    let half = 0.5 * actor.surrogate_width;
    let height = 1.0 / actor.surrogate_width;

    for l in (0..3).rev() {
        let d_input = layer_backward(&ext, &trace.voltages[l], &trace.spikes[l], lif, half, height);
        if l == 0 {
            let mut total = Array2::<f64>::zeros(d_input[0].dim());
            for g in &d_input {
                total += g;
            }
            grads.weights[0] = crate::tensor::standard(trace.activations.t().dot(&total));
            grads.biases[0] = total.sum_axis(Axis(0));
            let d_act = total.dot(&p.weights[0].t());
            encoder_backward(actor, trace, &d_act, &mut grads);
        } else {
            let presyn = &trace.spikes[l - 1];
            let mut gw = Array2::<f64>::zeros(p.weights[l].dim());
            let mut gb = Array1::<f64>::zeros(p.biases[l].len());
            let mut next_ext = Vec::with_capacity(t_steps);
            for t in 0..t_steps {
                gw += &presyn[t].t().dot(&d_input[t]);
                gb += &d_input[t].sum_axis(Axis(0));
                next_ext.push(d_input[t].dot(&p.weights[l].t()));
            }
            grads.weights[l] = gw;
            grads.biases[l] = gb;
            ext = next_ext;
        }
    }
    Ok(grads)
}

/// Backpropagates through one LIF layer over all timesteps. `ext[t]` is the
/// gradient arriving at the layer's spikes at step t from outside the layer;
/// returns the gradient with respect to the layer's input current at each step.
fn layer_backward(
    ext: &[Array2<f64>],
    voltages: &[Array2<f64>],
    spikes: &[Array2<f64>],
    lif: &super::lif::LifParams,
    half: f64,
    height: f64,
) -> Vec<Array2<f64>> {
    let t_steps = ext.len();
    let dim = ext[0].dim();
    let mut d_input = vec![Array2::<f64>::zeros(dim); t_steps];
    let mut gv_next = Array2::<f64>::zeros(dim);
    let mut gc_next = Array2::<f64>::zeros(dim);
    let (cd, vd, th) = (lif.current_decay, lif.voltage_decay, lif.threshold);
    for t in (0..t_steps).rev() {
        let last = t + 1 == t_steps;
        let mut gv = Array2::<f64>::zeros(dim);
        let mut gc = Array2::<f64>::zeros(dim);
        let slices = (
            gv.as_slice_mut().expect("standard layout"),
            gc.as_slice_mut().expect("standard layout"),
            ext[t].as_slice().expect("standard layout"),
            voltages[t].as_slice().expect("standard layout"),
            spikes[t].as_slice().expect("standard layout"),
            gv_next.as_slice().expect("standard layout"),
            gc_next.as_slice().expect("standard layout"),
        );
        let (gv_s, gc_s, e_s, v_s, s_s, gvn_s, gcn_s) = slices;
        for k in 0..gv_s.len() {
            let (e, v, s) = (e_s[k], v_s[k], s_s[k]);
            // v_{t+1} = vd·v_t·(1 − s_t) + c_{t+1}
            let (gs, carry) = if last { (e, 0.0) } else { (e - gvn_s[k] * vd * v, gvn_s[k] * vd * (1.0 - s)) };
            let surrogate = if (v - th).abs() < half { height } else { 0.0 };
            gv_s[k] = gs * surrogate + carry;
            gc_s[k] = gv_s[k] + if last { 0.0 } else { cd * gcn_s[k] };
        }
        d_input[t].assign(&gc);
        gv_next = gv;
        gc_next = gc;
    }
    d_input
}

fn encoder_backward(actor: &SpikingActor, trace: &Trace, d_act: &Array2<f64>, grads: &mut ActorParams) {
    let p = &actor.params;
    let (dims, pop) = p.enc_centers.dim();
    for b in 0..trace.normalized.nrows() {
        for i in 0..dims {
            let x = trace.normalized[[b, i]];
            for j in 0..pop {
                let k = i * pop + j;
                let g = d_act[[b, k]];
                if g == 0.0 {
                    continue;
                }
                let a = trace.activations[[b, k]];
                let mu = p.enc_centers[[i, j]];
                let sigma = p.enc_widths[[i, j]];
                let d = x - mu;
                grads.enc_centers[[i, j]] += g * a * d / (sigma * sigma);
                grads.enc_widths[[i, j]] += g * a * d * d / (sigma * sigma * sigma);
            }
        }
    }
}
