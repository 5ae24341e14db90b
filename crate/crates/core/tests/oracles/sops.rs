//! Brute-force synaptic-operation recount over random rasters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spikeinsert::profile::count_sops;
use spikeinsert::snn::{ActorShape, SpikeRaster};

/// Independent recount: walks every (t, layer, neuron) and adds the full size
/// of the next layer for each spike outside the output layer, plus one
/// accumulation per (input, layer-1 neuron) pair at every step.
pub fn brute_force(raster: &SpikeRaster, shape: &ActorShape) -> u64 {
    let widths = [shape.hidden[0], shape.hidden[1], shape.action_dim * shape.pop_out];
    let inputs = shape.state_dim * shape.pop_in;
    let mut total = 0u64;
    for t in 0..raster.timesteps() {
        total += (inputs * widths[0]) as u64;
        for l in 0..2 {
            for n in 0..widths[l] {
                if raster.get(t, l, n) {
                    total += widths[l + 1] as u64;
                }
            }
        }
    }
    total
}

pub fn random_raster(shape: &ActorShape, timesteps: usize, rng: &mut ChaCha8Rng) -> SpikeRaster {
    let widths = [shape.hidden[0], shape.hidden[1], shape.action_dim * shape.pop_out];
    let mut r = SpikeRaster::new(timesteps, &widths);
    let density: f64 = rng.random_range(0.0..=1.0);
    for t in 0..timesteps {
        for (l, &w) in widths.iter().enumerate() {
            for n in 0..w {
                r.set(t, l, n, rng.random_bool(density));
            }
        }
    }
    r
}

/// Number of rasters (out of `count`) whose event-driven total differs from the
/// recount or exceeds the dense bound.
pub fn check_sops(count: usize, seed: u64) -> usize {
    let shape = ActorShape::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .filter(|_| {
            let raster = random_raster(&shape, 9, &mut rng);
            let c = count_sops(&raster, &shape).expect("matching shape");
            c.total() != brute_force(&raster, &shape) || c.total() > c.dense_bound
        })
        .count()
}
