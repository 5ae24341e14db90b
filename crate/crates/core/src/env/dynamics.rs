use nalgebra::{UnitQuaternion, Vector3};

use super::contact::{contact_wrench, ContactResult};
use super::scene::SceneConfig;
use crate::types::{Kinematics, Wrench};
use crate::{Error, Result};

/// Rigid end-effector state integrated by [`inner_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PegState {
    pub kin: Kinematics,
    pub in_hole: bool,
}

/// Outcome of one inner step: the contact used and the applied contact wrench
/// about the tip.
#[derive(Debug, Clone, PartialEq)]
pub struct StepContact {
    pub contact: ContactResult,
    pub wrench: Wrench,
}

/// Semi-implicit Euler step of the virtual end-effector under the commanded
/// wrench plus contact. Friction is evaluated against the velocity the step
/// would produce without it and is capped so it can stop, but never reverse,
/// the tangential motion.
pub fn inner_step(
    state: &mut PegState,
    commanded: &Wrench,
    scene: &SceneConfig,
    mu: f64,
    dt: f64,
) -> Result<StepContact> {
    if !(dt > 0.0) {
        return Err(Error::RejectedInput(format!("dt must be > 0, got {dt}")));
    }
    if !commanded.is_finite() {
        return Err(Error::Fault(format!("non-finite commanded wrench {commanded:?}")));
    }
    let m = scene.gains.virtual_mass;
    let inertia = scene.gains.virtual_inertia;
    let contact = contact_wrench(&state.kin, state.in_hole, scene, mu);

    let normals: Vector3<f64> = contact.patches.iter().map(|p| p.normal * p.normal_force).sum();
    let v_pred = state.kin.linear_velocity + (commanded.force + normals) * (dt / m);
    let frictions: Vec<Vector3<f64>> = contact
        .patches
        .iter()
        .map(|p| {
            let f = p.friction(&v_pred, mu, scene.stick_velocity);
            let v_t = v_pred - p.normal * v_pred.dot(&p.normal);
            let stop = v_t.norm() * m / dt;
            let mag = f.norm();
            if mag > stop && mag > 0.0 {
                f * (stop / mag)
            } else {
                f
            }
        })
        .collect();
    let tip = state.kin.pose.position;
    let wrench = contact.wrench(&tip, &frictions);
    let total = *commanded + wrench;
    if !total.is_finite() {
        return Err(Error::Fault(format!("non-finite contact wrench {wrench:?}")));
    }

    let kin = &mut state.kin;
    kin.linear_velocity += total.force * (dt / m);
    kin.pose.position += kin.linear_velocity * dt;
    if scene.planar {
        kin.angular_velocity = Vector3::zeros();
        kin.pose.orientation = UnitQuaternion::identity();
    } else {
        kin.angular_velocity += total.torque * (dt / inertia);
        let q = UnitQuaternion::from_scaled_axis(kin.angular_velocity * dt) * kin.pose.orientation;
        kin.pose.orientation = UnitQuaternion::new_normalize(q.into_inner());
    }
    state.in_hole = contact.in_hole && kin.pose.position.z < 0.0;
    Ok(StepContact { contact, wrench })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Pose;

    fn free_state(z: f64) -> PegState {
        PegState { kin: Kinematics::at_rest(Pose::at(0.05, 0.0, z)), in_hole: false }
    }

    #[test]
    fn zero_wrench_keeps_pose() {
        let scene = SceneConfig::default();
        let mut s = free_state(0.02);
        let before = s;
        for _ in 0..100 {
            inner_step(&mut s, &Wrench::zero(), &scene, 0.38, 1e-3).unwrap();
        }
        assert_eq!(s, before);
    }

    #[test]
    fn constant_force_matches_closed_form() {
        let scene = SceneConfig::default();
        let mut s = free_state(0.02);
        let f = Vector3::new(0.3, -0.1, 0.05);
        let (dt, n) = (1e-3, 50);
        for _ in 0..n {
            inner_step(&mut s, &Wrench { force: f, torque: Vector3::zeros() }, &scene, 0.38, dt).unwrap();
        }
        let m = scene.gains.virtual_mass;
        let v = f * (n as f64 * dt / m);
        assert!((s.kin.linear_velocity - v).norm() < 1e-15);
        // Semi-implicit Euler: x_n = x_0 + dt²/m · F · n(n+1)/2
        let dx = f * (dt * dt / m * (n * (n + 1)) as f64 / 2.0);
        assert!((s.kin.pose.position - Vector3::new(0.05, 0.0, 0.02) - dx).norm() < 1e-15);
    }

    #[test]
    fn non_finite_command_faults() {
        let scene = SceneConfig::default();
        let mut s = free_state(0.0);
        let w = Wrench { force: Vector3::new(f64::NAN, 0.0, 0.0), torque: Vector3::zeros() };
        assert!(matches!(inner_step(&mut s, &w, &scene, 0.38, 1e-3), Err(Error::Fault(_))));
        assert!(inner_step(&mut s, &Wrench::zero(), &scene, 0.38, 0.0).is_err());
    }

    #[test]
    fn quaternion_stays_normalized() {
        let scene = SceneConfig::default();
        let mut s = free_state(0.5);
        s.kin.angular_velocity = Vector3::new(3.0, -7.0, 11.0);
        for _ in 0..1_000_000 {
            inner_step(&mut s, &Wrench::zero(), &scene, 0.38, 1e-3).unwrap();
        }
        assert!((s.kin.pose.orientation.quaternion().norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn resting_peg_does_no_work() {
        let scene = SceneConfig::default();
        let mut s = free_state(0.0);
        let push = Wrench { force: Vector3::new(0.0, 0.0, -5.0), torque: Vector3::zeros() };
        let mut last = None;
        for _ in 0..3000 {
            last = Some(inner_step(&mut s, &push, &scene, 0.38, 1e-3).unwrap());
        }
        let c = last.unwrap().contact;
        let power = c.normal_force * s.kin.linear_velocity.z;
        assert!(power.abs() < 1e-9, "power {power}");
        assert!((c.penetration - 5.0 / scene.contact_stiffness).abs() < 1e-9);
    }
}
