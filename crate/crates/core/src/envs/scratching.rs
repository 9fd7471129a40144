//! Itch-scratching analog: a sustained-contact task. The effector earns a
//! per-step bonus only while the contact force sits inside a target window,
//! so the policy must hold position and modulate pressure, not just arrive.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use super::arm::{dist, ArmCore, N_JOINTS};
use super::human::Silhouette;
use super::{
    apply_force_limit, Env, EnvName, StepInfo, StepResult, ARM_MAX_STEPS, CONTACT_STIFFNESS,
    FORCE_CAP,
};

/// Radius of the itch patch; penetration is measured against it.
pub const ITCH_RADIUS: f64 = 0.05;
/// Modeled forces inside this window count as a good scratch.
pub const FORCE_WINDOW: (f64, f64) = (0.2, 1.0);
const SCRATCH_BONUS: f64 = 1.0;

pub struct ScratchingEnv {
    pub(crate) core: ArmCore,
    pub(crate) human: Silhouette,
    pub(crate) itch: (f64, f64),
    contact_steps: usize,
}

impl ScratchingEnv {
    pub fn new() -> ScratchingEnv {
        ScratchingEnv {
            core: ArmCore::new(),
            human: Silhouette::placeholder(),
            itch: (0.0, 0.0),
            contact_steps: 0,
        }
    }

    fn raw_force(&self, p: (f64, f64)) -> f64 {
        CONTACT_STIFFNESS * (ITCH_RADIUS - dist(p, self.itch)).max(0.0)
    }
}

impl Default for ScratchingEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for ScratchingEnv {
    fn name(&self) -> EnvName {
        EnvName::Scratching
    }

    fn obs_dim(&self) -> usize {
        N_JOINTS + 5
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
        self.itch = self.human.arm_point(rng.random_range(0.2..0.8));
        self.contact_steps = 0;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> StepResult {
        let (r_act, _) = self.core.advance(action);
        let p = self.core.effector;
        let d = dist(p, self.itch);

        let f = self.raw_force(p);
        let (f_applied, penalty) = apply_force_limit(f, FORCE_CAP);

        let in_window = f >= FORCE_WINDOW.0 && f <= FORCE_WINDOW.1;
        let bonus = if in_window { SCRATCH_BONUS } else { 0.0 };
        if in_window {
            self.contact_steps += 1;
        }

        let reward = -d + r_act + bonus - penalty;
        // sustained-contact task: no early exit
        let done = self.core.steps >= ARM_MAX_STEPS;
        let info = StepInfo {
            dist: d,
            force: f_applied,
            progress: self.contact_steps as f64 / ARM_MAX_STEPS as f64,
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
        let f = self.raw_force(p).min(FORCE_CAP);
        let mut obs = self.core.model.joint_angles.clone();
        obs.extend([p.0, p.1, self.itch.0, self.itch.1, f]);
        obs
    }

    fn state_vec(&self) -> Vec<f64> {
        let mut v = self.core.state_vec();
        v.extend(self.human.state_vec());
        v.extend([self.itch.0, self.itch.1, self.contact_steps as f64]);
        v
    }

    fn restore_state(&mut self, state: &[f64]) {
        let mut used = self.core.restore(state);
        used += self.human.restore(&state[used..]);
        self.itch = (state[used], state[used + 1]);
        self.contact_steps = state[used + 2] as usize;
    }
}
