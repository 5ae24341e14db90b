//! Trajectory generation and low-level Cartesian control.
//!
//! Every new policy action replans a quintic segment from the instantaneous
//! setpoint state to the new target; an impedance controller renders a
//! spring-damper between the moving setpoint and the measured end-effector.

mod impedance;
mod postprocess;
mod quintic;

pub use impedance::{impedance_wrench, ImpedanceGains, Setpoint};
pub use postprocess::{postprocess_action, ActionPostprocess, PostprocessOutcome};
pub use quintic::{fit_quintic, replan, AxisState, QuinticSegment};

/// Translation x/y/z followed by rotation-vector x/y/z.
pub const POSE_AXES: usize = 6;

/// Tracks the active segment and converts it into controller setpoints.
#[derive(Debug, Clone)]
pub struct PoseTrajectory {
    segment: QuinticSegment,
    duration: f64,
}

impl PoseTrajectory {
    /// Holds `pose` until the first replan.
    pub fn hold(pose: &crate::types::Pose, duration: f64, start_time: f64) -> crate::Result<Self> {
        let coords = pose_coords(pose);
        let states: Vec<AxisState> = coords.iter().map(|&p| AxisState::at_rest(p)).collect();
        let segment = fit_quintic(&states, &coords, duration, start_time)?;
        Ok(Self { segment, duration })
    }

    pub fn segment(&self) -> &QuinticSegment {
        &self.segment
    }

    pub fn replan_to(&mut self, time: f64, target: &crate::types::Pose) -> crate::Result<()> {
        let coords = pose_coords(target);
        self.segment = replan(&self.segment, time, &coords, self.duration)?;
        Ok(())
    }

    pub fn setpoint(&self, time: f64) -> Setpoint {
        let states = self.segment.sample(time);
        let p = nalgebra::Vector3::new(states[0].position, states[1].position, states[2].position);
        let v = nalgebra::Vector3::new(states[0].velocity, states[1].velocity, states[2].velocity);
        let rot = nalgebra::Vector3::new(states[3].position, states[4].position, states[5].position);
        let omega = nalgebra::Vector3::new(states[3].velocity, states[4].velocity, states[5].velocity);
        Setpoint {
            pose: crate::types::Pose::new(p, nalgebra::UnitQuaternion::from_scaled_axis(rot)),
            linear_velocity: v,
            angular_velocity: omega,
        }
    }
}

/// Position followed by the orientation's rotation vector.
pub fn pose_coords(pose: &crate::types::Pose) -> [f64; POSE_AXES] {
    let r = pose.orientation.scaled_axis();
    [pose.position.x, pose.position.y, pose.position.z, r.x, r.y, r.z]
}
