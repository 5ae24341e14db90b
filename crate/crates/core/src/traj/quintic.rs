use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Position, velocity, acceleration and jerk of one axis at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisState {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub jerk: f64,
}

impl AxisState {
    pub fn at_rest(position: f64) -> Self {
        Self { position, ..Default::default() }
    }
}

/// Degree-5 polynomial per axis, `x(τ) = Σ aₖ τᵏ` for local time τ ∈ [0, duration].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuinticSegment {
    pub coeffs: Vec<[f64; 6]>,
    pub duration: f64,
    pub start_time: f64,
}

/// Solves the rest-to-rest boundary problem per axis: initial (p, v, a) from
/// `start`, final position from `target`, final velocity and acceleration zero.
pub fn fit_quintic(
    start: &[AxisState],
    target: &[f64],
    duration: f64,
    start_time: f64,
) -> Result<QuinticSegment> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::RejectedInput(format!("segment duration must be > 0, got {duration}")));
    }
    if start.len() != target.len() {
        return Err(crate::error::shape_err("quintic axes", start.len(), target.len()));
    }
    let t = duration;
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let coeffs = start
        .iter()
        .zip(target)
        .map(|(s, &pf)| {
            let (p0, v0, a0) = (s.position, s.velocity, s.acceleration);
            let d = pf - p0;
            [
                p0,
                v0,
                0.5 * a0,
                (20.0 * d - 12.0 * v0 * t - 3.0 * a0 * t2) / (2.0 * t3),
                (-30.0 * d + 16.0 * v0 * t + 3.0 * a0 * t2) / (2.0 * t4),
                (12.0 * d - 6.0 * v0 * t - a0 * t2) / (2.0 * t5),
            ]
        })
        .collect();
    Ok(QuinticSegment { coeffs, duration, start_time })
}

/// Splices a new segment onto `current` at absolute time `time`, starting from
/// the old segment's instantaneous state so position, velocity and acceleration
/// stay continuous.
pub fn replan(
    current: &QuinticSegment,
    time: f64,
    target: &[f64],
    duration: f64,
) -> Result<QuinticSegment> {
    let state = current.sample(time);
    fit_quintic(&state, target, duration, time)
}

impl QuinticSegment {
    pub fn axes(&self) -> usize {
        self.coeffs.len()
    }

    /// Evaluates at local time, clamped to `[0, duration]`; past the end the
    /// segment holds its terminal state with zero jerk.
    pub fn eval(&self, local_time: f64) -> Vec<AxisState> {
        let beyond = local_time > self.duration;
        let t = local_time.clamp(0.0, self.duration);
        self.coeffs
            .iter()
            .map(|c| {
                let position = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
                let velocity =
                    c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
                let acceleration = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
                let jerk = if beyond { 0.0 } else { 6.0 * c[3] + t * (24.0 * c[4] + t * 60.0 * c[5]) };
                AxisState { position, velocity, acceleration, jerk }
            })
            .collect()
    }

    /// Evaluates at absolute time.
    pub fn sample(&self, time: f64) -> Vec<AxisState> {
        self.eval(time - self.start_time)
    }
}
