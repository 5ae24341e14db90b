use serde::{Deserialize, Serialize};

use crate::traj::{ActionPostprocess, ImpedanceGains};
use crate::{Error, Result};

/// Table, hole and peg geometry plus the contact, sensing and episode constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    /// m
    pub peg_radius: f64,
    /// m; the hole is centred at the origin of the table frame.
    pub hole_radius: f64,
    /// m; the hole bottom sits at `-hole_depth`.
    pub hole_depth: f64,
    /// Penalty stiffness, N/m.
    pub contact_stiffness: f64,
    /// Candidate Coulomb coefficients; one is drawn per episode.
    pub friction: Vec<f64>,
    /// Tangential speed (m/s) below which friction ramps linearly.
    pub stick_velocity: f64,
    /// Per-axis force noise σ, N.
    pub ft_noise_force: f64,
    /// Per-axis torque noise σ, N·m.
    pub ft_noise_torque: f64,
    /// Per-axis σ of the start offset around the hole centre, m.
    pub start_sigma: f64,
    /// Tip height at reset, m.
    pub start_height: f64,
    /// Distance from the peg tip up to the wrist sensor, m.
    pub sensor_offset: f64,
    /// Inner integration step, s.
    pub dt: f64,
    /// Simulated time between policy decisions, s.
    pub decision_period: f64,
    /// s
    pub timeout: f64,
    /// Tip height at or below which the insertion counts as done, m.
    pub success_depth: f64,
    /// Lateral half-width of the reachable workspace, m.
    pub workspace_xy: f64,
    /// Reachable tip-height range, m.
    pub workspace_z: [f64; 2],
    /// Locks the orientation to vertical and ignores rotational actions.
    pub planar: bool,
    pub gains: ImpedanceGains,
    pub postprocess: ActionPostprocess,
    /// Duration of every replanned quintic segment, s.
    pub segment_duration: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            peg_radius: 0.010,
            hole_radius: 0.0105,
            hole_depth: 0.070,
            contact_stiffness: 1.0e4,
            friction: vec![0.34, 0.38, 0.42],
            stick_velocity: 1.0e-4,
            ft_noise_force: 0.1,
            ft_noise_torque: 0.01,
            start_sigma: 0.02,
            start_height: 0.0,
            sensor_offset: 0.1,
            dt: 1.0e-3,
            decision_period: 0.1,
            timeout: 30.0,
            success_depth: -0.065,
            workspace_xy: 0.08,
            workspace_z: [-0.08, 0.05],
            planar: false,
            gains: ImpedanceGains::default(),
            postprocess: ActionPostprocess::default(),
            segment_duration: 0.3,
        }
    }
}

impl SceneConfig {
    /// Orientation held vertical; used for desk-scale training.
    pub fn planar() -> Self {
        Self { planar: true, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.peg_radius > 0.0) || !(self.hole_radius > self.peg_radius) {
            return fail("need 0 < peg_radius < hole_radius");
        }
        if !(self.hole_depth > 0.0) {
            return fail("hole_depth must be > 0");
        }
        if !(self.contact_stiffness > 0.0) {
            return fail("contact_stiffness must be > 0");
        }
        if self.friction.is_empty() || self.friction.iter().any(|&m| !(m > 0.0)) {
            return fail("friction set must be non-empty and positive");
        }
        if !(self.stick_velocity > 0.0) {
            return fail("stick_velocity must be > 0");
        }
        if self.ft_noise_force < 0.0 || self.ft_noise_torque < 0.0 || self.start_sigma < 0.0 {
            return fail("noise levels must be >= 0");
        }
        if !(self.dt > 0.0) || !(self.decision_period >= self.dt) || !(self.timeout > 0.0) {
            return fail("need 0 < dt <= decision_period and timeout > 0");
        }
        if !(self.segment_duration > 0.0) {
            return fail("segment_duration must be > 0");
        }
        if !(self.start_height > self.success_depth) || !(self.start_height > -self.hole_depth) {
            return fail("start_height must lie above the success depth");
        }
        if !(self.workspace_xy > 0.0) || !(self.workspace_z[0] < self.workspace_z[1]) {
            return fail("workspace bounds are degenerate");
        }
        self.gains.validate()?;
        self.postprocess.validate()
    }

    /// Largest lateral axis offset at which the peg face fits inside the aperture.
    pub fn admission_radius(&self) -> f64 {
        self.hole_radius - self.peg_radius
    }

    pub fn normal_damping(&self) -> f64 {
        2.0 * (self.contact_stiffness * self.gains.virtual_mass).sqrt()
    }

    pub fn inner_steps_per_decision(&self) -> usize {
        (self.decision_period / self.dt).round().max(1.0) as usize
    }
}
