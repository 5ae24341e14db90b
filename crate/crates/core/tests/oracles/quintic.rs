//! Boundary-value oracle for quintic segments: solves the 6×6 system directly.

use nalgebra::{Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spikeinsert::traj::{fit_quintic, replan, AxisState, QuinticSegment};

/// Coefficients from an LU solve of the six boundary conditions.
pub fn solve_boundary(p0: f64, v0: f64, a0: f64, pf: f64, vf: f64, af: f64, t: f64) -> [f64; 6] {
    let row = |tau: f64, d: usize| -> [f64; 6] {
        let mut r = [0.0; 6];
        for (k, slot) in r.iter_mut().enumerate() {
            if k >= d {
                let fall: f64 = (0..d).map(|j| (k - j) as f64).product();
                *slot = fall * tau.powi((k - d) as i32);
            }
        }
        r
    };
    let rows = [row(0.0, 0), row(0.0, 1), row(0.0, 2), row(t, 0), row(t, 1), row(t, 2)];
    let m = Matrix6::from_fn(|i, j| rows[i][j]);
    let rhs = Vector6::new(p0, v0, a0, pf, vf, af);
    let x = m.lu().solve(&rhs).expect("non-singular boundary system");
    std::array::from_fn(|k| x[k])
}

#[derive(Debug, Default, Clone, Copy)]
pub struct QuinticCheck {
    /// Largest boundary-condition residual.
    pub boundary: f64,
    /// Largest position/velocity/acceleration gap to the linear-solve oracle
    /// over eleven points of the segment.
    pub oracle: f64,
    /// Largest position/velocity/acceleration jump across a replan splice.
    pub splice: f64,
}

fn random_axis(rng: &mut ChaCha8Rng) -> AxisState {
    AxisState {
        position: rng.random_range(-0.1..0.1),
        velocity: rng.random_range(-0.5..0.5),
        acceleration: rng.random_range(-5.0..5.0),
        jerk: 0.0,
    }
}

/// `cases` random rest-to-target problems plus one random splice each.
pub fn check_quintic(cases: usize, seed: u64) -> QuinticCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = QuinticCheck::default();
    for _ in 0..cases {
        let start = random_axis(&mut rng);
        let pf: f64 = rng.random_range(-0.1..0.1);
        let t: f64 = rng.random_range(0.05..2.0);
        let seg: QuinticSegment = fit_quintic(&[start], &[pf], t, 0.0).expect("fit");
        let s0 = seg.eval(0.0)[0];
        let s1 = seg.eval(t)[0];
        let residuals = [
            s0.position - start.position,
            s0.velocity - start.velocity,
            s0.acceleration - start.acceleration,
            s1.position - pf,
            s1.velocity,
            s1.acceleration,
        ];
        out.boundary = residuals.iter().fold(out.boundary, |m, r| m.max(r.abs()));

        let oracle = QuinticSegment {
            coeffs: vec![solve_boundary(start.position, start.velocity, start.acceleration, pf, 0.0, 0.0, t)],
            duration: t,
            start_time: 0.0,
        };
        for k in 0..=10 {
            let tau = t * k as f64 / 10.0;
            let (a, b) = (seg.eval(tau)[0], oracle.eval(tau)[0]);
            let gaps = [a.position - b.position, a.velocity - b.velocity, a.acceleration - b.acceleration];
            out.oracle = gaps.iter().fold(out.oracle, |m, g| m.max(g.abs()));
        }

        let splice_at: f64 = rng.random_range(0.0..t);
        let next = replan(&seg, splice_at, &[rng.random_range(-0.1..0.1)], rng.random_range(0.05..2.0)).expect("replan");
        let before = seg.sample(splice_at)[0];
        let after = next.sample(splice_at)[0];
        let jumps = [
            before.position - after.position,
            before.velocity - after.velocity,
            before.acceleration - after.acceleration,
        ];
        out.splice = jumps.iter().fold(out.splice, |m, r| m.max(r.abs()));
    }
    out
}
