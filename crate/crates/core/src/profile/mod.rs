//! Synaptic-operation counting, an energy proxy and inference latency.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::snn::{ActorShape, SpikeRaster};
use crate::{Error, Result};

/// Event-driven synaptic operations of one inference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SopCount {
    pub timesteps: usize,
    /// Dense encoder-current injections into layer 1, `T · inputs · width₁`.
    pub encoder: u64,
    /// Spike × fan-out accumulations sourced by each hidden layer.
    pub per_layer: Vec<u64>,
    /// Total (encoder + spikes) per timestep.
    pub per_timestep: Vec<u64>,
    /// LIF state updates, `T · Σ widths`.
    pub neuron_updates: u64,
    /// Count if every neuron spiked at every step.
    pub dense_bound: u64,
}

impl SopCount {
    pub fn total(&self) -> u64 {
        self.encoder + self.per_layer.iter().sum::<u64>()
    }
}

/// Counts one accumulation per (spike, postsynaptic target). Layer-1 and
/// layer-2 spikes fan out to the next layer; output-layer spikes only feed the
/// rate readout and cost nothing here.
pub fn count_sops(raster: &SpikeRaster, shape: &ActorShape) -> Result<SopCount> {
    let widths = shape.spiking_widths();
    if raster.widths() != widths {
        return Err(Error::Shape(format!("raster widths {:?} do not match actor {:?}", raster.widths(), widths)));
    }
    let t_steps = raster.timesteps() as u64;
    let input = shape.input_width() as u64;
    let fanout = [widths[1] as u64, widths[2] as u64];
    let per_step_encoder = input * widths[0] as u64;
    let mut per_layer = vec![0u64; 2];
    let mut per_timestep = vec![per_step_encoder; raster.timesteps()];
    for (t, slot) in per_timestep.iter_mut().enumerate() {
        for l in 0..2 {
            let spikes = raster.step(t, l).iter().filter(|&&s| s).count() as u64;
            per_layer[l] += spikes * fanout[l];
            *slot += spikes * fanout[l];
        }
    }
    let dense_bound = t_steps * (per_step_encoder + widths[0] as u64 * fanout[0] + widths[1] as u64 * fanout[1]);
    Ok(SopCount {
        timesteps: raster.timesteps(),
        encoder: t_steps * per_step_encoder,
        per_layer,
        per_timestep,
        neuron_updates: t_steps * widths.iter().sum::<usize>() as u64,
        dense_bound,
    })
}

/// Linear per-inference energy proxy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyModel {
    /// J per synaptic operation.
    pub per_sop: f64,
    /// J per LIF state update.
    pub per_neuron_update: f64,
    /// J per inference.
    pub static_overhead: f64,
}

impl Default for EnergyModel {
    /// Calibrated so the reference trained policy averages about 53 μJ per
    /// inference over its evaluation states.
    fn default() -> Self {
        Self { per_sop: 95.7e-12, per_neuron_update: 1e-9, static_overhead: 0.0 }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        let all = [self.per_sop, self.per_neuron_update, self.static_overhead];
        if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config("energy coefficients must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Rescales `per_sop` so that `mean_sops` operations plus the other terms
    /// cost `target` joules.
    pub fn calibrate_per_sop(&self, mean_sops: f64, mean_updates: f64, target: f64) -> Result<Self> {
        let rest = mean_updates * self.per_neuron_update + self.static_overhead;
        if !(mean_sops > 0.0) || !(target > rest) {
            return Err(Error::Config("cannot calibrate: target below the fixed terms or no SOPs".into()));
        }
        Ok(Self { per_sop: (target - rest) / mean_sops, ..*self })
    }
}

/// `E = sops·e_sop + updates·e_neuron + overhead`, joules.
pub fn estimate_energy(sops: &SopCount, m: &EnergyModel) -> f64 {
    sops.total() as f64 * m.per_sop + sops.neuron_updates as f64 * m.per_neuron_update + m.static_overhead
}

/// Wall-clock statistics of repeated inferences, seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub host: String,
}

impl LatencyStats {
    pub fn from_samples(mut samples: Vec<f64>, host: String) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::RejectedInput("no latency samples".into()));
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        let median = if n % 2 == 1 { samples[n / 2] } else { 0.5 * (samples[n / 2 - 1] + samples[n / 2]) };
        Ok(Self { samples: n, mean, std: var.sqrt(), min: samples[0], max: samples[n - 1], median, host })
    }
}

/// Short description of the executing machine.
pub fn host_description() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| s.lines().find(|l| l.starts_with("model name")).and_then(|l| l.split(':').nth(1)).map(|m| m.trim().to_string()))
        .unwrap_or_else(|| "unknown cpu".to_string());
    format!("{cpu} ({}-{}, single thread)", std::env::consts::ARCH, std::env::consts::OS)
}

/// Times `repetitions` calls of `infer`, cycling through `states`, after
/// `warmup` untimed calls. Runs on the calling thread.
pub fn profile_latency<S, F>(mut infer: F, states: &[S], repetitions: usize, warmup: usize) -> Result<LatencyStats>
where
    F: FnMut(&S) -> Result<()>,
{
    if repetitions < 30 {
        return Err(Error::RejectedInput(format!("need at least 30 repetitions, got {repetitions}")));
    }
    if states.is_empty() {
        return Err(Error::RejectedInput("no states to profile".into()));
    }
    for k in 0..warmup {
        infer(&states[k % states.len()])?;
    }
    let mut samples = Vec::with_capacity(repetitions);
    for k in 0..repetitions {
        let s = &states[k % states.len()];
        let t0 = Instant::now();
        infer(s)?;
        samples.push(t0.elapsed().as_secs_f64());
    }
    LatencyStats::from_samples(samples, host_description())
}

/// One row of the energy/latency table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub label: String,
    pub energy_uj_mean: Option<f64>,
    pub energy_uj_std: Option<f64>,
    pub latency_ms_mean: f64,
    pub latency_ms_std: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (mean, (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Plain-text table with one row per hardware label.
pub fn format_table(rows: &[ProfileRow]) -> String {
    let width = rows.iter().map(|r| r.label.chars().count()).chain([8]).max().unwrap_or(8);
    let mut out = format!("{:<width$}  {:>22}  {:>16}\n", "hardware", "dynamic energy (uJ)", "latency (ms)");
    for r in rows {
        let energy = match (r.energy_uj_mean, r.energy_uj_std) {
            (Some(m), Some(s)) => format!("{m:.1} ± {s:.1}"),
            (Some(m), None) => format!("{m:.1}"),
            _ => "n/a".to_string(),
        };
        let latency = format!("{:.3} ± {:.3}", r.latency_ms_mean, r.latency_ms_std);
        out.push_str(&format!("{:<width$}  {:>22}  {:>16}\n", r.label, energy, latency));
    }
    out
}
