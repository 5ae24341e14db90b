//! Neuromorphic peg-in-hole control stack.
//!
//! * [`snn`]: population-coded LIF spiking actor, forward inference and
//!   surrogate-gradient backward pass.
//! * [`rl`]: reward, twin critics, replay buffer and TD3-style training.
//! * [`quant`]: fixed-point weight quantization and integer inference.
//! * [`env`]: penalty-contact peg-in-hole simulation with FT sensing.
//! * [`traj`]: quintic replanning and Cartesian impedance control.
//! * [`profile`]: synaptic-operation counting, energy proxy, latency.
//! * [`io`]: model/checkpoint files, configs and report writers.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod env;
pub mod error;
pub mod io;
pub mod par;
pub mod pipeline;
pub mod profile;
pub mod quant;
pub mod rl;
pub mod snn;
pub mod tensor;
pub mod traj;
pub mod types;

pub use error::{Error, Result};
