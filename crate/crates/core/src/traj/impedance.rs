use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::types::{Kinematics, Pose, Wrench};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpedanceGains {
    /// N/m
    pub translational_stiffness: f64,
    /// N·m/rad
    pub rotational_stiffness: f64,
    pub damping_ratio: f64,
    /// kg
    pub virtual_mass: f64,
    /// kg·m²
    pub virtual_inertia: f64,
}

impl Default for ImpedanceGains {
    fn default() -> Self {
        Self {
            translational_stiffness: 1000.0,
            rotational_stiffness: 10.0,
            damping_ratio: 0.7,
            virtual_mass: 2.0,
            virtual_inertia: 0.02,
        }
    }
}

impl ImpedanceGains {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.translational_stiffness,
            self.rotational_stiffness,
            self.damping_ratio,
            self.virtual_mass,
            self.virtual_inertia,
        ];
        if all.iter().all(|g| g.is_finite() && *g > 0.0) {
            Ok(())
        } else {
            Err(Error::Config(format!("impedance gains must be positive: {self:?}")))
        }
    }

    pub fn translational_damping(&self) -> f64 {
        2.0 * self.damping_ratio * (self.translational_stiffness * self.virtual_mass).sqrt()
    }

    pub fn rotational_damping(&self) -> f64 {
        2.0 * self.damping_ratio * (self.rotational_stiffness * self.virtual_inertia).sqrt()
    }
}

/// Desired pose and twist handed to the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub pose: Pose,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
}

/// `F = K(p_set − p) + D(v_set − v)`; the rotational part uses the rotation
/// vector of `q_set · q⁻¹` as the orientation error.
pub fn impedance_wrench(setpoint: &Setpoint, measured: &Kinematics, gains: &ImpedanceGains) -> Wrench {
    let dp = setpoint.pose.position - measured.pose.position;
    let dv = setpoint.linear_velocity - measured.linear_velocity;
    let force = dp * gains.translational_stiffness + dv * gains.translational_damping();

    let q_err = setpoint.pose.orientation * measured.pose.orientation.inverse();
    let dw = setpoint.angular_velocity - measured.angular_velocity;
    let torque = q_err.scaled_axis() * gains.rotational_stiffness + dw * gains.rotational_damping();
    Wrench { force, torque }
}
