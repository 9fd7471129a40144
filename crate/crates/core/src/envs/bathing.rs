//! Bed-bathing analog: wipe an ordered chain of waypoints along the human
//! forearm. Each waypoint pays once; the episode ends when the arm is clean.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use super::arm::{dist, ArmCore, N_JOINTS};
use super::human::{Silhouette, SKIN_RADIUS};
use super::{
    apply_force_limit, Env, EnvName, StepInfo, StepResult, ARM_MAX_STEPS, CONTACT_TOL,
    CONTACT_STIFFNESS, FORCE_CAP,
};

pub const N_WAYPOINTS: usize = 8;
const WIPE_BONUS: f64 = 2.0;

pub struct BathingEnv {
    pub(crate) core: ArmCore,
    pub(crate) human: Silhouette,
    pub(crate) waypoints: Vec<(f64, f64)>,
    wiped: usize,
}

impl BathingEnv {
    pub fn new() -> BathingEnv {
        BathingEnv {
            core: ArmCore::new(),
            human: Silhouette::placeholder(),
            waypoints: Vec::new(),
            wiped: 0,
        }
    }

    pub(crate) fn next_waypoint(&self) -> (f64, f64) {
        if self.wiped < self.waypoints.len() {
            self.waypoints[self.wiped]
        } else {
            // finished: hold the last waypoint as the reference point
            *self.waypoints.last().expect("waypoints set at reset")
        }
    }

    #[cfg(test)]
    pub(crate) fn set_wiped(&mut self, wiped: usize) {
        self.wiped = wiped;
    }
}

impl Default for BathingEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for BathingEnv {
    fn name(&self) -> EnvName {
        EnvName::Bathing
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
        self.waypoints = (0..N_WAYPOINTS)
            .map(|k| self.human.arm_point(k as f64 / (N_WAYPOINTS - 1) as f64))
            .collect();
        self.wiped = 0;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> StepResult {
        let (r_act, _) = self.core.advance(action);
        let p = self.core.effector;

        let penetration = (SKIN_RADIUS - self.human.dist_to_arm(p)).max(0.0);
        let (f_applied, penalty) = apply_force_limit(CONTACT_STIFFNESS * penetration, FORCE_CAP);

        let mut bonus = 0.0;
        while self.wiped < self.waypoints.len() && dist(p, self.waypoints[self.wiped]) < CONTACT_TOL
        {
            self.wiped += 1;
            bonus += WIPE_BONUS;
        }
        let complete = self.wiped == self.waypoints.len();
        let d = if complete { 0.0 } else { dist(p, self.next_waypoint()) };

        let reward = -d + r_act + bonus - penalty;
        let done = complete || self.core.steps >= ARM_MAX_STEPS;
        let info = StepInfo {
            dist: d,
            force: f_applied,
            progress: self.wiped as f64 / self.waypoints.len() as f64,
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
        let penetration = (SKIN_RADIUS - self.human.dist_to_arm(p)).max(0.0);
        let f = (CONTACT_STIFFNESS * penetration).min(FORCE_CAP);
        let wp = self.next_waypoint();
        let progress = if self.waypoints.is_empty() {
            0.0
        } else {
            self.wiped as f64 / self.waypoints.len() as f64
        };
        let mut obs = self.core.model.joint_angles.clone();
        obs.extend([p.0, p.1, wp.0, wp.1, f, progress]);
        obs
    }

    fn state_vec(&self) -> Vec<f64> {
        let mut v = self.core.state_vec();
        v.extend(self.human.state_vec());
        v.push(self.wiped as f64);
        for wp in &self.waypoints {
            v.extend([wp.0, wp.1]);
        }
        v
    }

    fn restore_state(&mut self, state: &[f64]) {
        let mut used = self.core.restore(state);
        used += self.human.restore(&state[used..]);
        self.wiped = state[used] as usize;
        used += 1;
        self.waypoints = state[used..]
            .chunks(2)
            .map(|c| (c[0], c[1]))
            .collect();
    }
}
