//! Stratified Monte Carlo oracle for the supported part of the peg face.

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spikeinsert::env::{contact_wrench, disc_minus_disc, SceneConfig};
use spikeinsert::types::{Kinematics, Pose};

/// Area and centroid of {peg disc} \ {hole disc} from one jittered sample per
/// cell of a `grid × grid` partition of the peg's bounding square.
pub fn monte_carlo_support(peg: Vector2<f64>, r_peg: f64, r_hole: f64, grid: usize, rng: &mut ChaCha8Rng) -> (f64, Vector2<f64>) {
    let cell = 2.0 * r_peg / grid as f64;
    let (mut hits, mut sum) = (0usize, Vector2::zeros());
    for i in 0..grid {
        for j in 0..grid {
            let local = Vector2::new(
                -r_peg + (i as f64 + rng.random::<f64>()) * cell,
                -r_peg + (j as f64 + rng.random::<f64>()) * cell,
            );
            if local.norm_squared() > r_peg * r_peg {
                continue;
            }
            let p = peg + local;
            if p.norm_squared() <= r_hole * r_hole {
                continue;
            }
            hits += 1;
            sum += p;
        }
    }
    let area = hits as f64 * cell * cell;
    let centroid = if hits > 0 { sum / hits as f64 } else { peg };
    (area, centroid)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ContactCheck {
    pub offsets: usize,
    /// Largest |area − oracle| / r_p².
    pub area: f64,
    /// Largest centroid distance / r_p.
    pub centroid: f64,
    /// Largest gap between the contact point reported by the contact model
    /// and the geometric centroid, / r_p.
    pub contact_point: f64,
}

/// Compares the closed-form region (and the contact model's patch point) with
/// the oracle over `offsets` random lateral offsets of a shallowly pressed peg.
pub fn check_contact(offsets: usize, grid: usize, seed: u64) -> ContactCheck {
    let scene = SceneConfig::default();
    let (rp, rh) = (scene.peg_radius, scene.hole_radius);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ContactCheck { offsets, ..Default::default() };
    for _ in 0..offsets {
        let rho = rng.random_range((rh - rp) * 1.2..rp + rh + 0.002);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let peg = Vector2::new(rho * phi.cos(), rho * phi.sin());
        let region = disc_minus_disc(peg, rp, Vector2::zeros(), rh);
        let (area, centroid) = monte_carlo_support(peg, rp, rh, grid, &mut rng);
        out.area = out.area.max((region.area - area).abs() / (rp * rp));
        out.centroid = out.centroid.max((region.centroid - centroid).norm() / rp);

        let kin = Kinematics::at_rest(Pose::at(peg.x, peg.y, -1e-4));
        let c = contact_wrench(&kin, false, &scene, 0.38);
        let point = c.patches.first().map(|p| p.point).unwrap_or(Vector3::zeros());
        out.contact_point = out.contact_point.max((point.xy() - region.centroid).norm() / rp);
    }
    out
}
