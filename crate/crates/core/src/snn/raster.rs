/// Spikes of every spiking layer at every timestep of one inference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeRaster {
    timesteps: usize,
    widths: Vec<usize>,
    /// Per layer, `timesteps × width` row-major.
    layers: Vec<Vec<bool>>,
}

impl SpikeRaster {
    pub fn new(timesteps: usize, widths: &[usize]) -> Self {
        Self {
            timesteps,
            widths: widths.to_vec(),
            layers: widths.iter().map(|w| vec![false; timesteps * w]).collect(),
        }
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len()
    }

    pub fn get(&self, t: usize, layer: usize, neuron: usize) -> bool {
        self.layers[layer][t * self.widths[layer] + neuron]
    }

    pub fn set(&mut self, t: usize, layer: usize, neuron: usize, spike: bool) {
        let w = self.widths[layer];
        self.layers[layer][t * w + neuron] = spike;
    }

    /// Spikes of `layer` at step `t`.
    pub fn step(&self, t: usize, layer: usize) -> &[bool] {
        let w = self.widths[layer];
        &self.layers[layer][t * w..(t + 1) * w]
    }

    pub(crate) fn write_step(&mut self, t: usize, layer: usize, spikes: &[bool]) {
        let w = self.widths[layer];
        self.layers[layer][t * w..(t + 1) * w].copy_from_slice(spikes);
    }

    /// Spike count per neuron of `layer` over all timesteps.
    pub fn counts(&self, layer: usize) -> Vec<u32> {
        let w = self.widths[layer];
        let mut counts = vec![0u32; w];
        for t in 0..self.timesteps {
            for (c, &s) in counts.iter_mut().zip(self.step(t, layer)) {
                *c += s as u32;
            }
        }
        counts
    }

    pub fn total_spikes(&self) -> usize {
        self.layers.iter().map(|l| l.iter().filter(|&&s| s).count()).sum()
    }

    /// Number of (t, layer, neuron) positions where the two rasters differ.
    pub fn hamming(&self, other: &SpikeRaster) -> Option<usize> {
        if self.timesteps != other.timesteps || self.widths != other.widths {
            return None;
        }
        Some(
            self.layers
                .iter()
                .zip(&other.layers)
                .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x != y).count())
                .sum(),
        )
    }
}
