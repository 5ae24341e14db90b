//! Quasi-static peg-in-hole environment.
//!
//! A flat-ended cylindrical peg, driven through a quintic trajectory and a
//! Cartesian impedance controller, interacts with a table that has a circular
//! hole at its origin. Contact is penalty based with Coulomb friction; the wrist
//! sensor reports the contact wrench with Gaussian noise.

mod contact;
mod dynamics;
mod geometry;
mod scene;
mod sensor;

pub use contact::{contact_wrench, ContactPatch, ContactResult};
pub use dynamics::{inner_step, PegState, StepContact};
pub use geometry::{disc_minus_disc, lens, Region};
pub use scene::SceneConfig;
pub use sensor::{sense_ft, wrench_at_sensor};

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::traj::{impedance_wrench, postprocess_action, PoseTrajectory};
use crate::types::{ActionVector, FTReading, Kinematics, Pose, StateVector, Wrench};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Continue,
    Success,
    Timeout,
}

/// Success once the tip reaches `success_depth`; timeout once `elapsed`
/// reaches the scene timeout.
pub fn check_termination(tip_z: f64, elapsed: f64, scene: &SceneConfig) -> Termination {
    if tip_z <= scene.success_depth {
        Termination::Success
    } else if elapsed >= scene.timeout - 1e-9 {
        Termination::Timeout
    } else {
        Termination::Continue
    }
}

/// Result of one policy decision.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: StateVector,
    pub ft: FTReading,
    pub pose: Pose,
    /// Simulated time after the step, s.
    pub time: f64,
    pub termination: Termination,
    /// The raw action exceeded its bounds and was clamped.
    pub clamped: bool,
}

/// One environment instance; single-threaded, owns its RNG.
#[derive(Debug, Clone)]
pub struct InsertionEnv {
    scene: SceneConfig,
    rng: ChaCha8Rng,
    peg: PegState,
    trajectory: PoseTrajectory,
    steps: u64,
    mu: f64,
    last_wrench: Wrench,
    last_ft: FTReading,
}

impl InsertionEnv {
    pub fn new(scene: SceneConfig) -> Result<Self> {
        scene.validate()?;
        let pose = Pose::at(0.0, 0.0, scene.start_height);
        let trajectory = PoseTrajectory::hold(&pose, scene.segment_duration, 0.0)?;
        let mu = scene.friction[0];
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(0),
            peg: PegState { kin: Kinematics::at_rest(pose), in_hole: false },
            trajectory,
            steps: 0,
            mu,
            last_wrench: Wrench::zero(),
            last_ft: FTReading::zero(),
            scene,
        })
    }

    pub fn scene(&self) -> &SceneConfig {
        &self.scene
    }

    /// Overrides the start height and lateral spread used by subsequent resets.
    pub fn set_start(&mut self, height: f64, sigma: f64) -> Result<()> {
        let scene = SceneConfig { start_height: height, start_sigma: sigma, ..self.scene.clone() };
        scene.validate()?;
        self.scene = scene;
        Ok(())
    }

    pub fn friction(&self) -> f64 {
        self.mu
    }

    pub fn peg(&self) -> &PegState {
        &self.peg
    }

    pub fn trajectory(&self) -> &PoseTrajectory {
        &self.trajectory
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.scene.dt
    }

    pub fn last_ft(&self) -> &FTReading {
        &self.last_ft
    }

    /// True contact wrench at the wrist from the last inner step, world frame.
    pub fn last_wrench(&self) -> &Wrench {
        &self.last_wrench
    }

    /// Places the peg tip at `start_height` above a Gaussian offset around the
    /// hole centre, draws the friction coefficient and returns the first
    /// observation. A start below the surface keeps the offset inside the
    /// aperture.
    pub fn reset(&mut self, seed: u64) -> StateVector {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut x, mut y) = if self.scene.start_sigma > 0.0 {
            let n = Normal::new(0.0, self.scene.start_sigma).expect("finite sigma");
            (n.sample(&mut self.rng), n.sample(&mut self.rng))
        } else {
            (0.0, 0.0)
        };
        let limit = 0.9 * self.scene.admission_radius();
        let rho = x.hypot(y);
        if self.scene.start_height < 0.0 && rho > limit {
            x *= limit / rho;
            y *= limit / rho;
        }
        let idx = self.rng.random_range(0..self.scene.friction.len());
        self.mu = self.scene.friction[idx];
        let pose = Pose::at(x, y, self.scene.start_height);
        self.peg = PegState { kin: Kinematics::at_rest(pose), in_hole: false };
        self.trajectory = PoseTrajectory::hold(&pose, self.scene.segment_duration, 0.0)
            .expect("validated segment duration");
        self.steps = 0;
        self.last_wrench = Wrench::zero();
        self.observe()
    }

    fn observe(&mut self) -> StateVector {
        self.last_ft = sense_ft(&self.last_wrench, &self.peg.kin.pose.orientation, &self.scene, &mut self.rng);
        StateVector::from_parts(&self.peg.kin.pose, &self.last_ft)
    }

    fn clamp_to_workspace(&self, target: &mut Pose) {
        let s = &self.scene;
        target.position.x = target.position.x.clamp(-s.workspace_xy, s.workspace_xy);
        target.position.y = target.position.y.clamp(-s.workspace_xy, s.workspace_xy);
        target.position.z = target.position.z.clamp(s.workspace_z[0], s.workspace_z[1]);
        if s.planar {
            target.orientation = UnitQuaternion::identity();
        }
    }

    /// Applies one policy action: target from the current pose, replans the
    /// trajectory, then integrates the controlled peg until the next decision
    /// or until the insertion succeeds.
    pub fn step(&mut self, action: &ActionVector) -> Result<StepOutcome> {
        self.step_observed(action, &mut |_, _| {})
    }

    /// [`InsertionEnv::step`] that also hands every inner integration step and
    /// the friction coefficient in force to `inspect`.
    pub fn step_observed(
        &mut self,
        action: &ActionVector,
        inspect: &mut dyn FnMut(&StepContact, f64),
    ) -> Result<StepOutcome> {
        let mut out = postprocess_action(action, &self.scene.postprocess, &self.peg.kin.pose);
        self.clamp_to_workspace(&mut out.target);
        let now = self.time();
        self.trajectory.replan_to(now, &out.target)?;

        let mut termination = Termination::Continue;
        for _ in 0..self.scene.inner_steps_per_decision() {
            let setpoint = self.trajectory.setpoint(self.time());
            let cmd = impedance_wrench(&setpoint, &self.peg.kin, &self.scene.gains);
            let step = inner_step(&mut self.peg, &cmd, &self.scene, self.mu, self.scene.dt)?;
            inspect(&step, self.mu);
            self.last_wrench = wrench_at_sensor(&step.wrench, &self.peg.kin.pose, self.scene.sensor_offset);
            self.steps += 1;
            if check_termination(self.peg.kin.pose.position.z, self.time(), &self.scene) == Termination::Success {
                termination = Termination::Success;
                break;
            }
        }
        if termination == Termination::Continue {
            termination = check_termination(self.peg.kin.pose.position.z, self.time(), &self.scene);
        }
        let state = self.observe();
        Ok(StepOutcome {
            state,
            ft: self.last_ft,
            pose: self.peg.kin.pose,
            time: self.time(),
            termination,
            clamped: out.clamped,
        })
    }

    /// Lateral axis offset from the hole centre, m.
    pub fn lateral_offset(&self) -> f64 {
        let p: Vector3<f64> = self.peg.kin.pose.position;
        p.xy().norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn termination_rules() {
        let s = SceneConfig::default();
        assert_eq!(check_termination(-0.066, 1.0, &s), Termination::Success);
        assert_eq!(check_termination(-0.01, 30.0, &s), Termination::Timeout);
        assert_eq!(check_termination(0.0, 0.0, &s), Termination::Continue);
    }

    #[test]
    fn zero_sigma_starts_over_hole() {
        let scene = SceneConfig { start_sigma: 0.0, ..Default::default() };
        let mut env = InsertionEnv::new(scene).unwrap();
        let s = env.reset(17);
        assert_eq!((s.0[0], s.0[1]), (0.0, 0.0));
    }

    #[test]
    fn start_inside_the_hole_is_admitted() {
        let mut env = InsertionEnv::new(SceneConfig::planar()).unwrap();
        env.set_start(-0.02, 0.01).unwrap();
        for seed in 0..20 {
            let s = env.reset(seed);
            assert!(s.0[0].hypot(s.0[1]) <= 0.9 * env.scene().admission_radius() + 1e-15);
            assert_eq!(s.0[2], -0.02);
            let out = env.step(&ActionVector([0.0; 6])).unwrap();
            assert!(env.peg().in_hole);
            assert!(out.pose.position.z < -0.019);
        }
        assert!(env.set_start(-0.07, 0.0).is_err());
    }

    #[test]
    fn push_down_over_hole_inserts() {
        let scene = SceneConfig { start_sigma: 0.0, ..SceneConfig::planar() };
        let mut env = InsertionEnv::new(scene).unwrap();
        env.reset(3);
        let down = ActionVector([0.0, 0.0, -0.005, 0.0, 0.0, 0.0]);
        let mut done = Termination::Continue;
        for _ in 0..100 {
            let out = env.step(&down).unwrap();
            done = out.termination;
            if done != Termination::Continue {
                break;
            }
        }
        assert_eq!(done, Termination::Success);
    }

    #[test]
    fn peg_off_centre_cannot_enter() {
        let scene = SceneConfig { start_sigma: 0.0, ..SceneConfig::planar() };
        let mut env = InsertionEnv::new(scene).unwrap();
        env.reset(3);
        env.peg.kin.pose.position.x = 0.0008;
        env.trajectory = PoseTrajectory::hold(&env.peg.kin.pose, 0.3, 0.0).unwrap();
        let down = ActionVector([0.0, 0.0, -0.005, 0.0, 0.0, 0.0]);
        for _ in 0..50 {
            let out = env.step(&down).unwrap();
            assert!(out.pose.position.z > -1e-3);
            assert!(!env.peg().in_hole);
        }
    }
}
