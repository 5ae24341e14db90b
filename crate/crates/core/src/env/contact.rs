//! Penalty contact between the peg and the table/hole with regularized Coulomb
//! friction.

use nalgebra::{Vector2, Vector3};

use super::geometry::disc_minus_disc;
use super::scene::SceneConfig;
use crate::types::{Kinematics, Wrench};

/// One active contact: unit normal pointing into the peg, penalty normal force,
/// application point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPatch {
    pub normal: Vector3<f64>,
    pub normal_force: f64,
    pub point: Vector3<f64>,
    pub penetration: f64,
}

impl ContactPatch {
    /// Coulomb friction against the tangential part of `velocity`; below the
    /// stick speed the magnitude ramps linearly so it vanishes at rest.
    pub fn friction(&self, velocity: &Vector3<f64>, mu: f64, stick_velocity: f64) -> Vector3<f64> {
        let v_t = velocity - self.normal * velocity.dot(&self.normal);
        let speed = v_t.norm();
        let limit = mu * self.normal_force;
        if speed == 0.0 || limit == 0.0 {
            Vector3::zeros()
        } else if speed >= stick_velocity {
            -v_t * (limit / speed)
        } else {
            -v_t * (limit / stick_velocity)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactResult {
    pub patches: Vec<ContactPatch>,
    /// Summed penalty normal force, N.
    pub normal_force: f64,
    /// Summed friction force (world frame, tangential to each patch), N.
    pub friction: Vector3<f64>,
    /// Force-weighted contact centroid; the tip centre when out of contact.
    pub centroid: Vector3<f64>,
    pub in_hole: bool,
    /// Deepest penetration among the active patches, m.
    pub penetration: f64,
}

impl ContactResult {
    /// Total contact wrench with torque taken about the peg tip centre.
    pub fn wrench(&self, tip: &Vector3<f64>, friction: &[Vector3<f64>]) -> Wrench {
        let mut w = Wrench::zero();
        for (patch, f) in self.patches.iter().zip(friction) {
            let force = patch.normal * patch.normal_force + f;
            w.force += force;
            w.torque += (patch.point - tip).cross(&force);
        }
        w
    }

    pub fn is_free(&self) -> bool {
        self.patches.is_empty()
    }
}

/// Contact state of the peg for the given kinematics.
///
/// `was_in_hole` carries the admission history: a peg that dropped into the
/// aperture stays in the hole (walls and bottom active) until its tip rises
/// back above the table surface.
pub fn contact_wrench(kin: &Kinematics, was_in_hole: bool, scene: &SceneConfig, mu: f64) -> ContactResult {
    let p = kin.pose.position;
    let v = kin.linear_velocity;
    let k = scene.contact_stiffness;
    let c = scene.normal_damping();
    let rho_vec = Vector2::new(p.x, p.y);
    let rho = rho_vec.norm();

    let in_hole = p.z < 0.0 && (was_in_hole || rho <= scene.admission_radius());
    let mut patches = Vec::new();

    if p.z < 0.0 && !in_hole {
        let depth = -p.z;
        let force = (k * depth - c * v.z).max(0.0);
        let region = disc_minus_disc(rho_vec, scene.peg_radius, Vector2::zeros(), scene.hole_radius);
        patches.push(ContactPatch {
            normal: Vector3::z(),
            normal_force: force,
            point: Vector3::new(region.centroid.x, region.centroid.y, p.z),
            penetration: depth,
        });
    } else if in_hole {
        let overlap = rho + scene.peg_radius - scene.hole_radius;
        if overlap > 0.0 && rho > 0.0 {
            let out = Vector3::new(rho_vec.x / rho, rho_vec.y / rho, 0.0);
            let rate = v.dot(&out);
            patches.push(ContactPatch {
                normal: -out,
                normal_force: (k * overlap + c * rate).max(0.0),
                point: p + out * scene.peg_radius,
                penetration: overlap,
            });
        }
        let below = -scene.hole_depth - p.z;
        if below > 0.0 {
            patches.push(ContactPatch {
                normal: Vector3::z(),
                normal_force: (k * below - c * v.z).max(0.0),
                point: p,
                penetration: below,
            });
        }
    }

    let frictions: Vec<Vector3<f64>> =
        patches.iter().map(|pt| pt.friction(&v, mu, scene.stick_velocity)).collect();
    let normal_force = patches.iter().map(|pt| pt.normal_force).sum::<f64>();
    let friction = frictions.iter().sum::<Vector3<f64>>();
    let penetration = patches.iter().map(|pt| pt.penetration).fold(0.0, f64::max);
    let centroid = if normal_force > 0.0 {
        patches.iter().map(|pt| pt.point * pt.normal_force).sum::<Vector3<f64>>() / normal_force
    } else if let Some(first) = patches.first() {
        first.point
    } else {
        p
    };
    ContactResult { patches, normal_force, friction, centroid, in_hole, penetration }
}
