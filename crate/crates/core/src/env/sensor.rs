use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::scene::SceneConfig;
use crate::types::{FTReading, Pose, Wrench};

/// Moves a wrench taken about the peg tip to the wrist sensor, which sits
/// `sensor_offset` up the peg axis.
pub fn wrench_at_sensor(about_tip: &Wrench, pose: &Pose, sensor_offset: f64) -> Wrench {
    let arm = pose.orientation * Vector3::new(0.0, 0.0, sensor_offset);
    // τ_s = τ_tip + (tip − sensor) × F
    Wrench { force: about_tip.force, torque: about_tip.torque + (-arm).cross(&about_tip.force) }
}

/// Noisy wrist reading in the end-effector frame.
pub fn sense_ft<R: Rng + ?Sized>(
    at_sensor: &Wrench,
    orientation: &UnitQuaternion<f64>,
    scene: &SceneConfig,
    rng: &mut R,
) -> FTReading {
    let inv = orientation.inverse();
    let mut force = inv * at_sensor.force;
    let mut torque = inv * at_sensor.torque;
    if scene.ft_noise_force > 0.0 {
        let n = Normal::new(0.0, scene.ft_noise_force).expect("finite sigma");
        force += Vector3::from_fn(|_, _| n.sample(rng));
    }
    if scene.ft_noise_torque > 0.0 {
        let n = Normal::new(0.0, scene.ft_noise_torque).expect("finite sigma");
        torque += Vector3::from_fn(|_, _| n.sample(rng));
    }
    FTReading { force, torque }
}
