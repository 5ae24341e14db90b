use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::types::{FTReading, Pose};

/// Weights and targets of the dense insertion reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardParams {
    /// Force, torque and depth weights.
    pub weights: [f64; 3],
    /// Desired force, N.
    pub force_target: [f64; 3],
    /// Desired torque, N·m.
    pub torque_target: [f64; 3],
    /// Desired tip height (the hole bottom), m.
    pub depth_target: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self { weights: [0.05, 0.05, 0.9], force_target: [0.0; 3], torque_target: [0.0; 3], depth_target: -0.07 }
    }
}

/// `r = −(w₁‖f − f_d‖ + w₂‖τ − τ_d‖ + w₃|z − z_d|)`: every term is a penalty,
/// so the reward is at most zero and reaches zero only when all targets are met.
pub fn compute_reward(ft: &FTReading, pose: &Pose, p: &RewardParams) -> f64 {
    let [w1, w2, w3] = p.weights;
    let df = ft.force - Vector3::from(p.force_target);
    let dt = ft.torque - Vector3::from(p.torque_target);
    let dz = pose.position.z - p.depth_target;
    -(w1 * df.norm() + w2 * dt.norm() + w3 * dz.abs())
}
