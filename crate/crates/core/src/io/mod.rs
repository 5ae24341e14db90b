//! Model files, run configuration and report writers.

mod archive;
mod config;
mod models;
mod report;

pub use archive::{Archive, Tensor, TensorData, FORMAT_VERSION, MAGIC};
pub use config::{EvalConfig, ProfileConfig, QuantConfig, RunConfig, CONFIG_VERSION};
pub use models::{
    actor_archive, actor_from_archive, checkpoint_archive, checkpoint_from_archive, load_actor, load_checkpoint,
    load_quantized, quantized_archive, quantized_from_archive, save_actor, save_checkpoint, save_quantized, Checkpoint,
    KIND_ACTOR, KIND_CHECKPOINT, KIND_QUANTIZED,
};
pub use report::{aggregate_curves, write_aggregate, write_eval, write_learning_curve, write_profile, write_trace, AggregateRow};
