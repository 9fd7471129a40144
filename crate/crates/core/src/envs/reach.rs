//! Dense-reward reaching: drive the effector onto a seeded target point.
//! The episode ends on contact, so good policies stop paying the distance
//! cost early while random ones pay it for the full horizon.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use super::arm::{dist, ArmCore, ArmModel, N_JOINTS};
use super::{Env, EnvName, StepInfo, StepResult, CONTACT_TOL};

/// Short-horizon task (5 simulated seconds): ample time to reach, short
/// enough that random-walk wander cannot blur the trained/random gap.
pub const REACH_MAX_STEPS: usize = 50;

/// Target offsets from the nominal starting effector, folded inward so every
/// target stays well inside the reachable annulus and the starting distance
/// band is narrow (keeps the random-baseline variance small).
const TARGET_DIST_MIN: f64 = 0.62;
const TARGET_DIST_MAX: f64 = 0.72;
const TARGET_ARC: f64 = 0.9;

pub struct ReachEnv {
    pub(crate) core: ArmCore,
    pub(crate) target: (f64, f64),
    reached: bool,
}

impl ReachEnv {
    pub fn new() -> ReachEnv {
        ReachEnv {
            core: ArmCore::new(),
            target: (0.0, 0.0),
            reached: false,
        }
    }

    pub(crate) fn sample_target(rng: &mut ChaCha8Rng) -> (f64, f64) {
        let p0 = ArmModel::nominal_effector();
        let norm = (p0.0 * p0.0 + p0.1 * p0.1).sqrt();
        let inward = (-p0.0 / norm, -p0.1 / norm);
        let r = rng.random_range(TARGET_DIST_MIN..TARGET_DIST_MAX);
        let psi = rng.random_range(-TARGET_ARC..TARGET_ARC);
        let (s, c) = psi.sin_cos();
        let dir = (c * inward.0 - s * inward.1, s * inward.0 + c * inward.1);
        (p0.0 + r * dir.0, p0.1 + r * dir.1)
    }

    #[cfg(test)]
    pub(crate) fn set_target(&mut self, target: (f64, f64)) {
        self.target = target;
    }
}

impl Default for ReachEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for ReachEnv {
    fn name(&self) -> EnvName {
        EnvName::Reach
    }

    fn obs_dim(&self) -> usize {
        N_JOINTS + 4
    }

    fn act_dim(&self) -> usize {
        N_JOINTS
    }

    fn max_steps(&self) -> usize {
        REACH_MAX_STEPS
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.core.reset(&mut rng);
        self.target = Self::sample_target(&mut rng);
        self.reached = false;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> StepResult {
        let (r_act, _) = self.core.advance(action);
        let d = dist(self.core.effector, self.target);
        if d < CONTACT_TOL {
            self.reached = true;
        }
        let reward = -d + r_act;
        let done = self.reached || self.core.steps >= REACH_MAX_STEPS;
        let info = StepInfo {
            dist: d,
            progress: if self.reached { 1.0 } else { 0.0 },
            r_dist: -d,
            r_act,
            ..StepInfo::default()
        };
        StepResult {
            observation: self.observe(),
            reward,
            done,
            info,
        }
    }

    fn observe(&self) -> Vec<f64> {
        let mut obs = self.core.model.joint_angles.clone();
        obs.extend([
            self.core.effector.0,
            self.core.effector.1,
            self.target.0,
            self.target.1,
        ]);
        obs
    }

    fn state_vec(&self) -> Vec<f64> {
        let mut v = self.core.state_vec();
        v.extend([self.target.0, self.target.1, self.reached as u8 as f64]);
        v
    }

    fn restore_state(&mut self, state: &[f64]) {
        let used = self.core.restore(state);
        self.target = (state[used], state[used + 1]);
        self.reached = state[used + 2] != 0.0;
    }
}
