//! Feeding analog: bring the utensil to the mouth point gently. The one-time
//! bonus requires both contact and low effector speed (the spill analog);
//! arriving fast earns nothing and the episode continues.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use super::arm::{dist, ArmCore, N_JOINTS};
use super::human::{Silhouette, HEAD_RADIUS};
use super::{
    apply_force_limit, Env, EnvName, StepInfo, StepResult, ARM_MAX_STEPS, CONTACT_TOL,
    CONTACT_STIFFNESS, FORCE_CAP,
};

const FEED_BONUS: f64 = 10.0;
const MAX_CONTACT_SPEED: f64 = 0.02;

pub struct FeedingEnv {
    pub(crate) core: ArmCore,
    pub(crate) human: Silhouette,
    fed: bool,
}

impl FeedingEnv {
    pub fn new() -> FeedingEnv {
        FeedingEnv {
            core: ArmCore::new(),
            human: Silhouette::placeholder(),
            fed: false,
        }
    }
}

impl Default for FeedingEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for FeedingEnv {
    fn name(&self) -> EnvName {
        EnvName::Feeding
    }

    fn obs_dim(&self) -> usize {
        N_JOINTS + 6
    }

    fn act_dim(&self) -> usize {
        N_JOINTS
    }

    fn max_steps(&self) -> usize {
        ARM_MAX_STEPS
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.core.reset(&mut rng);
        self.human = Silhouette::generate(&mut rng);
        self.fed = false;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> StepResult {
        let (r_act, speed) = self.core.advance(action);
        let p = self.core.effector;
        let d = dist(p, self.human.mouth);

        let penetration = (HEAD_RADIUS - dist(p, self.human.head_center)).max(0.0);
        let (f_applied, penalty) = apply_force_limit(CONTACT_STIFFNESS * penetration, FORCE_CAP);

        let mut bonus = 0.0;
        if !self.fed && d < CONTACT_TOL && speed < MAX_CONTACT_SPEED {
            self.fed = true;
            bonus = FEED_BONUS;
        }

        let reward = -d + r_act + bonus - penalty;
        let done = self.fed || self.core.steps >= ARM_MAX_STEPS;
        let info = StepInfo {
            dist: d,
            force: f_applied,
            progress: if self.fed { 1.0 } else { 0.0 },
            bonus,
            r_dist: -d,
            r_act,
            r_bonus: bonus,
            r_force: -penalty,
        };
        StepResult {
            observation: self.observe(),
            reward,
            done,
            info,
        }
    }

    fn observe(&self) -> Vec<f64> {
        let p = self.core.effector;
        let penetration = (HEAD_RADIUS - dist(p, self.human.head_center)).max(0.0);
        let f = (CONTACT_STIFFNESS * penetration).min(FORCE_CAP);
        let speed = dist(p, self.core.prev_effector);
        let mut obs = self.core.model.joint_angles.clone();
        obs.extend([p.0, p.1, self.human.mouth.0, self.human.mouth.1, f, speed]);
        obs
    }

    fn state_vec(&self) -> Vec<f64> {
        let mut v = self.core.state_vec();
        v.extend(self.human.state_vec());
        v.push(self.fed as u8 as f64);
        v
    }

    fn restore_state(&mut self, state: &[f64]) {
        let mut used = self.core.restore(state);
        used += self.human.restore(&state[used..]);
        self.fed = state[used] != 0.0;
    }
}
