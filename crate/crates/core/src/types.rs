//! Observation/action vectors and the physical quantities they are built from.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub const STATE_DIM: usize = 13;
pub const ACTION_DIM: usize = 6;

/// Observation: position(3), orientation quaternion (w, x, y, z), force(3), torque(3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub [f64; STATE_DIM]);

/// Pose increment: translation(3) in metres, then rotation vector(3) in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActionVector(pub [f64; ACTION_DIM]);

impl StateVector {
    pub fn from_parts(pose: &Pose, ft: &FTReading) -> Self {
        let q = pose.orientation.quaternion();
        let mut s = [0.0; STATE_DIM];
        s[0..3].copy_from_slice(pose.position.as_slice());
        s[3] = q.w;
        s[4] = q.i;
        s[5] = q.j;
        s[6] = q.k;
        s[7..10].copy_from_slice(ft.force.as_slice());
        s[10..13].copy_from_slice(ft.torque.as_slice());
        StateVector(s)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn force(&self) -> Vector3<f64> {
        Vector3::new(self.0[7], self.0[8], self.0[9])
    }

    pub fn torque(&self) -> Vector3<f64> {
        Vector3::new(self.0[10], self.0[11], self.0[12])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl ActionVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn translation(&self) -> Vector3<f64> {
        Vector3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn rotation(&self) -> Vector3<f64> {
        Vector3::new(self.0[3], self.0[4], self.0[5])
    }
}

/// End-effector pose: peg-tip centre and orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self { position, orientation }
    }

    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vector3::new(x, y, z), UnitQuaternion::identity())
    }
}

/// Wrist force-torque reading, end-effector frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTReading {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl FTReading {
    pub fn zero() -> Self {
        Self { force: Vector3::zeros(), torque: Vector3::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| v.is_finite())
    }
}

/// World-frame wrench: force and torque about a reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn zero() -> Self {
        Self { force: Vector3::zeros(), torque: Vector3::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| v.is_finite())
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        Wrench { force: self.force + rhs.force, torque: self.torque + rhs.torque }
    }
}

/// Pose plus linear and angular velocity of the end-effector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub pose: Pose,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
}

impl Kinematics {
    pub fn at_rest(pose: Pose) -> Self {
        Self { pose, linear_velocity: Vector3::zeros(), angular_velocity: Vector3::zeros() }
    }
}
