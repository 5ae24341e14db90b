//! Population-coded spiking actor built from discrete-time LIF neurons.

mod actor;
mod encoder;
mod lif;
mod raster;
mod tape;

pub use actor::{decode_action, ActorConfig, ActorParams, ActorShape, SpikingActor};
pub use encoder::{encode_state, PopulationEncoder, DEFAULT_STATE_BOUNDS};
pub use lif::{lif_step, LayerState, LifParams};
pub use raster::SpikeRaster;
pub use tape::{forward_batch_actions, ActorTape};

use crate::types::{ActionVector, StateVector};

/// Anything that maps an observation to an action through a spiking network.
pub trait Policy: Sync {
    fn forward(&self, state: &StateVector) -> crate::Result<(ActionVector, SpikeRaster)>;

    fn act(&self, state: &StateVector) -> crate::Result<ActionVector> {
        self.forward(state).map(|(a, _)| a)
    }

    fn shape(&self) -> ActorShape;

    fn timesteps(&self) -> usize;
}

impl Policy for SpikingActor {
    fn forward(&self, state: &StateVector) -> crate::Result<(ActionVector, SpikeRaster)> {
        SpikingActor::forward(self, state)
    }

    fn shape(&self) -> ActorShape {
        self.shape
    }

    fn timesteps(&self) -> usize {
        self.timesteps
    }
}
