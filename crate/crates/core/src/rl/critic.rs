//! Fully connected Q-network: ReLU hidden layers, scaled tanh output.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::{standard, ParamSet, TensorRef};
use crate::types::{ActionVector, StateVector, ACTION_DIM, STATE_DIM};
use crate::{Error, Result};

pub const CRITIC_INPUT: usize = STATE_DIM + ACTION_DIM;

/// Centre and typical magnitude of each state component as seen by the
/// critic: lateral position resolves millimetres, the rest uses coarse ranges.
const STATE_CENTRE: [f64; STATE_DIM] = [0.0, 0.0, -0.03, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
const STATE_MAGNITUDE: [f64; STATE_DIM] = [0.005, 0.005, 0.02, 0.01, 0.05, 0.05, 0.05, 5.0, 5.0, 5.0, 0.5, 0.5, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticParams {
    /// fan-in × fan-out
    pub weights: [Array2<f64>; 3],
    pub biases: [Array1<f64>; 3],
}

impl CriticParams {
    pub fn zeros(hidden: [usize; 2]) -> Self {
        let dims = [(CRITIC_INPUT, hidden[0]), (hidden[0], hidden[1]), (hidden[1], 1)];
        Self { weights: dims.map(Array2::zeros), biases: dims.map(|(_, o)| Array1::zeros(o)) }
    }

    pub fn zeros_like(other: &CriticParams) -> Self {
        Self {
            weights: other.weights.clone().map(|w| Array2::zeros(w.dim())),
            biases: other.biases.clone().map(|b| Array1::zeros(b.len())),
        }
    }
}

impl ParamSet for CriticParams {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::with_capacity(6);
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            out.push(TensorRef { name: format!("w{}", l + 1), shape: w.shape().to_vec(), data: w.as_slice().expect("standard layout") });
            out.push(TensorRef { name: format!("b{}", l + 1), shape: b.shape().to_vec(), data: b.as_slice().expect("standard layout") });
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(6);
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w.as_slice_mut().expect("standard layout"));
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        out
    }
}

/// `Q(s, a) = scale · tanh(MLP(norm(s) ⊕ a / bound))`.
///
/// Inputs are affinely rescaled (fixed, not trained) so position, force and
/// action components enter the first layer on comparable scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticNet {
    pub hidden: [usize; 2],
    pub scale: f64,
    pub input_offset: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub params: CriticParams,
}

/// Intermediate activations of one batched critic evaluation.
#[derive(Debug, Clone)]
pub struct CriticCache {
    x: Array2<f64>,
    h1_pre: Array2<f64>,
    h1: Array2<f64>,
    h2_pre: Array2<f64>,
    h2: Array2<f64>,
    out_pre: Array1<f64>,
}

impl CriticNet {
    pub fn new<R: Rng + ?Sized>(hidden: [usize; 2], scale: f64, action_bounds: &[f64], rng: &mut R) -> Result<Self> {
        if action_bounds.len() != ACTION_DIM {
            return Err(crate::error::shape_err("action bounds", ACTION_DIM, action_bounds.len()));
        }
        if !(scale > 0.0) || hidden.contains(&0) {
            return Err(Error::Config("critic scale and widths must be positive".into()));
        }
        let mut uniform = |rows: usize, cols: usize, fan_in: usize| {
            let k = 1.0 / (fan_in as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-k..k))
        };
        let dims = [(CRITIC_INPUT, hidden[0]), (hidden[0], hidden[1]), (hidden[1], 1)];
        let weights = dims.map(|(i, o)| uniform(i, o, i));
        let biases = dims.map(|(i, o)| uniform(1, o, i).into_shape_with_order(o).expect("row"));
        let mut input_offset = Vec::with_capacity(CRITIC_INPUT);
        let mut input_scale = Vec::with_capacity(CRITIC_INPUT);
        for (c, m) in STATE_CENTRE.iter().zip(STATE_MAGNITUDE) {
            input_offset.push(*c);
            input_scale.push(1.0 / m);
        }
        for b in action_bounds {
            input_offset.push(0.0);
            input_scale.push(1.0 / b);
        }
        Ok(Self { hidden, scale, input_offset, input_scale, params: CriticParams { weights, biases } })
    }

    pub fn zeroed(&self) -> Self {
        let mut c = self.clone();
        c.params = CriticParams::zeros_like(&self.params);
        c
    }

    fn inputs(&self, states: &[StateVector], actions: &[ActionVector]) -> Result<Array2<f64>> {
        if states.len() != actions.len() {
            return Err(crate::error::shape_err("critic batch", states.len(), actions.len()));
        }
        let mut x = Array2::zeros((states.len(), CRITIC_INPUT));
        for (b, (s, a)) in states.iter().zip(actions).enumerate() {
            for (k, v) in s.0.iter().chain(a.0.iter()).enumerate() {
                x[[b, k]] = (v - self.input_offset[k]) * self.input_scale[k];
            }
        }
        Ok(x)
    }

    pub fn q(&self, state: &StateVector, action: &ActionVector) -> Result<f64> {
        Ok(self.forward(&[*state], &[*action])?.0[0])
    }

    /// Batched Q-values plus the cache needed for [`CriticNet::backward`].
    pub fn forward(&self, states: &[StateVector], actions: &[ActionVector]) -> Result<(Array1<f64>, CriticCache)> {
        let x = self.inputs(states, actions)?;
        let p = &self.params;
        let h1_pre = x.dot(&p.weights[0]) + &p.biases[0];
        let h1 = h1_pre.mapv(|v| v.max(0.0));
        let h2_pre = h1.dot(&p.weights[1]) + &p.biases[1];
        let h2 = h2_pre.mapv(|v| v.max(0.0));
        let out_pre = (h2.dot(&p.weights[2]) + &p.biases[2]).index_axis_move(Axis(1), 0);
        let q = out_pre.mapv(|v| self.scale * v.tanh());
        Ok((q, CriticCache { x, h1_pre, h1, h2_pre, h2, out_pre }))
    }

    /// Gradients of `Σ_b dq[b]·Q_b` with respect to the parameters and to the
    /// raw action inputs (B × 6).
    pub fn backward(&self, cache: &CriticCache, dq: &Array1<f64>) -> Result<(CriticParams, Array2<f64>)> {
        let batch = cache.x.nrows();
        if dq.len() != batch {
            return Err(crate::error::shape_err("critic upstream", batch, dq.len()));
        }
        let p = &self.params;
        let g_out: Array1<f64> = ndarray::Zip::from(dq)
            .and(&cache.out_pre)
            .map_collect(|&g, &z| {
                let t = z.tanh();
                g * self.scale * (1.0 - t * t)
            });
        let g_out = g_out.insert_axis(Axis(1));
        let gw3 = cache.h2.t().dot(&g_out);
        let gb3 = g_out.sum_axis(Axis(0));
        let mut g_h2 = g_out.dot(&p.weights[2].t());
        ndarray::Zip::from(&mut g_h2).and(&cache.h2_pre).for_each(|g, &z| {
            if z <= 0.0 {
                *g = 0.0
            }
        });
        let gw2 = cache.h1.t().dot(&g_h2);
        let gb2 = g_h2.sum_axis(Axis(0));
        let mut g_h1 = g_h2.dot(&p.weights[1].t());
        ndarray::Zip::from(&mut g_h1).and(&cache.h1_pre).for_each(|g, &z| {
            if z <= 0.0 {
                *g = 0.0
            }
        });
        let gw1 = cache.x.t().dot(&g_h1);
        let gb1 = g_h1.sum_axis(Axis(0));
        let g_x = g_h1.dot(&p.weights[0].t());
        let mut g_action = Array2::zeros((batch, ACTION_DIM));
        for b in 0..batch {
            for d in 0..ACTION_DIM {
                let k = STATE_DIM + d;
                g_action[[b, d]] = g_x[[b, k]] * self.input_scale[k];
            }
        }
        let weights = [gw1, gw2, gw3].map(standard);
        Ok((CriticParams { weights, biases: [gb1, gb2, gb3] }, g_action))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use crate::snn::DEFAULT_STATE_BOUNDS;
    use rand_chacha::ChaCha8Rng;

    const BOUNDS: [f64; 6] = [0.005, 0.005, 0.005, 0.0175, 0.0175, 0.0175];

    fn sample(rng: &mut ChaCha8Rng) -> (StateVector, ActionVector) {
        let mut s = [0.0; 13];
        for (i, v) in s.iter_mut().enumerate() {
            let (lo, hi) = DEFAULT_STATE_BOUNDS[i];
            *v = rng.random_range(lo..hi);
        }
        let a = std::array::from_fn(|d| rng.random_range(-BOUNDS[d]..BOUNDS[d]));
        (StateVector(s), ActionVector(a))
    }

    #[test]
    fn zero_weights_give_zero_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = CriticNet::new([256, 256], 10.0, &BOUNDS, &mut rng).unwrap().zeroed();
        let (s, a) = sample(&mut rng);
        assert_eq!(c.q(&s, &a).unwrap(), 0.0);
    }

    #[test]
    fn q_is_bounded_by_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut c = CriticNet::new([16, 16], 3.0, &BOUNDS, &mut rng).unwrap();
        c.params.weights[2].mapv_inplace(|w| w * 1e3);
        for _ in 0..200 {
            let (s, a) = sample(&mut rng);
            assert!(c.q(&s, &a).unwrap().abs() < 3.0 + 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = CriticNet::new([8, 8], 10.0, &BOUNDS, &mut rng).unwrap();
        let (s, a) = sample(&mut rng);
        assert!(c.forward(&[s, s], &[a]).is_err());
    }
}
