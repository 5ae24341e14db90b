use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Discrete-time LIF constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifParams {
    pub current_decay: f64,
    pub voltage_decay: f64,
    pub threshold: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        Self { current_decay: 0.5, voltage_decay: 0.75, threshold: 0.5 }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |d: f64| (0.0..=1.0).contains(&d);
        if unit(self.current_decay) && unit(self.voltage_decay) && self.threshold > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("LIF decays must lie in [0,1] and threshold > 0: {self:?}")))
        }
    }
}

/// Synaptic current, membrane voltage and last spike of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub current: Vec<f64>,
    pub voltage: Vec<f64>,
    pub spikes: Vec<bool>,
}

impl LayerState {
    pub fn zeros(width: usize) -> Self {
        Self { current: vec![0.0; width], voltage: vec![0.0; width], spikes: vec![false; width] }
    }

    pub fn width(&self) -> usize {
        self.current.len()
    }

    /// In-place update:
    /// `c ← d_c·c + I`, `v ← d_v·v·(1 − s) + c`, `s ← v ≥ θ`.
    pub fn step(&mut self, input: &[f64], p: &LifParams) -> Result<&[bool]> {
        if input.len() != self.width() {
            return Err(crate::error::shape_err("LIF input", self.width(), input.len()));
        }
        for i in 0..input.len() {
            let c = p.current_decay * self.current[i] + input[i];
            let carried = if self.spikes[i] { 0.0 } else { p.voltage_decay * self.voltage[i] };
            let v = carried + c;
            self.current[i] = c;
            self.voltage[i] = v;
            self.spikes[i] = v >= p.threshold;
        }
        Ok(&self.spikes)
    }
}

/// Pure form of [`LayerState::step`].
pub fn lif_step(state: &LayerState, input: &[f64], p: &LifParams) -> Result<(LayerState, Vec<bool>)> {
    let mut next = state.clone();
    let spikes = next.step(input, p)?.to_vec();
    Ok((next, spikes))
}
