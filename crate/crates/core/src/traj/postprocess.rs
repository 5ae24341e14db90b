use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::types::{ActionVector, Pose, ACTION_DIM};
use crate::{Error, Result};

const ONE_DEGREE: f64 = std::f64::consts::PI / 180.0;

/// Maps decoded policy actions to end-effector targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionPostprocess {
    /// Multiplies the requested orientation increment before clamping.
    pub orientation_scaling: f64,
    /// Per-axis bounds: translation (m) then rotation (rad).
    pub bounds: [f64; ACTION_DIM],
    /// Per-axis cap on the applied rotation increment (rad).
    pub rotation_limit: f64,
}

impl Default for ActionPostprocess {
    fn default() -> Self {
        Self {
            orientation_scaling: 1.0,
            bounds: [0.005, 0.005, 0.005, ONE_DEGREE, ONE_DEGREE, ONE_DEGREE],
            rotation_limit: ONE_DEGREE,
        }
    }
}

impl ActionPostprocess {
    pub fn validate(&self) -> Result<()> {
        let ok = self.orientation_scaling > 0.0
            && self.rotation_limit > 0.0
            && self.bounds.iter().all(|b| b.is_finite() && *b > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("action postprocess must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostprocessOutcome {
    pub target: Pose,
    /// Set when any raw component exceeded its bound and was clamped.
    pub clamped: bool,
}

/// Composes the current pose with the bounded increment. Translation is added in
/// the world frame; the rotation increment is scaled, clamped per axis and
/// pre-multiplied onto the current orientation.
pub fn postprocess_action(raw: &ActionVector, pp: &ActionPostprocess, current: &Pose) -> PostprocessOutcome {
    let mut clamped = false;
    let mut inc = [0.0; ACTION_DIM];
    for ((slot, &a), &b) in inc.iter_mut().zip(&raw.0).zip(&pp.bounds) {
        if !a.is_finite() || a.abs() > b {
            clamped = true;
        }
        *slot = if a.is_finite() { a.clamp(-b, b) } else { 0.0 };
    }
    let translation = Vector3::new(inc[0], inc[1], inc[2]);
    let rotation = Vector3::new(inc[3], inc[4], inc[5])
        .map(|r| (r * pp.orientation_scaling).clamp(-pp.rotation_limit, pp.rotation_limit));
    let target = Pose::new(
        current.position + translation,
        UnitQuaternion::from_scaled_axis(rotation) * current.orientation,
    );
    PostprocessOutcome { target, clamped }
}
