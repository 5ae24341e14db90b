//! Planar disc–disc region geometry for the peg face against the hole aperture.

use nalgebra::Vector2;
use std::f64::consts::PI;

/// Area and centroid of a planar region. An empty region reports zero area and
/// the reference point it was derived from as centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub area: f64,
    pub centroid: Vector2<f64>,
}

/// Circular segment cut off by a chord at signed distance `h` from the centre
/// (the part on the far side of the chord). Returns (area, centroid distance).
fn segment(r: f64, h: f64) -> (f64, f64) {
    let h = h.clamp(-r, r);
    let half_chord_sq = (r * r - h * h).max(0.0);
    let half_chord = half_chord_sq.sqrt();
    let area = r * r * (h / r).acos() - h * half_chord;
    if area <= 0.0 {
        return (0.0, h);
    }
    (area, 2.0 * half_chord_sq * half_chord / (3.0 * area))
}

/// Intersection of two discs.
pub fn lens(c1: Vector2<f64>, r1: f64, c2: Vector2<f64>, r2: f64) -> Region {
    let delta = c2 - c1;
    let d = delta.norm();
    if d >= r1 + r2 {
        return Region { area: 0.0, centroid: c1 };
    }
    if d <= (r1 - r2).abs() {
        let (c, r) = if r1 <= r2 { (c1, r1) } else { (c2, r2) };
        return Region { area: PI * r * r, centroid: c };
    }
    let u = delta / d;
    let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let (a1, g1) = segment(r1, a);
    let (a2, g2) = segment(r2, d - a);
    let area = a1 + a2;
    let centroid = ((c1 + u * g1) * a1 + (c2 - u * g2) * a2) / area;
    Region { area, centroid }
}

/// Part of the peg disc that rests on solid table, i.e. the peg face minus the
/// hole aperture.
pub fn disc_minus_disc(peg: Vector2<f64>, r_peg: f64, hole: Vector2<f64>, r_hole: f64) -> Region {
    let full = PI * r_peg * r_peg;
    let cut = lens(peg, r_peg, hole, r_hole);
    let area = full - cut.area;
    if area <= full * 1e-15 {
        return Region { area: 0.0, centroid: peg };
    }
    let centroid = (peg * full - cut.centroid * cut.area) / area;
    Region { area, centroid }
}
