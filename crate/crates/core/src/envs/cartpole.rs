//! Continuous-force cart-pole. The classic dynamics with the discrete
//! push replaced by force = 10 * clamp(a, -1, 1) so the same Gaussian policy
//! head drives every environment. Semi-implicit Euler at dt = 0.02.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use super::{Env, EnvName, StepInfo, StepResult};

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
const POLE_HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * POLE_HALF_LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const THETA_LIMIT: f64 = 12.0 * std::f64::consts::PI / 180.0;
const X_LIMIT: f64 = 2.4;
const MAX_STEPS: usize = 500;
const RESET_SPREAD: f64 = 0.05;

pub struct CartPoleEnv {
    x: f64,
    x_dot: f64,
    theta: f64,
    theta_dot: f64,
    steps: usize,
}

impl CartPoleEnv {
    pub fn new() -> CartPoleEnv {
        CartPoleEnv {
            x: 0.0,
            x_dot: 0.0,
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
        }
    }

    fn within_bounds(&self) -> bool {
        self.x.abs() <= X_LIMIT && self.theta.abs() <= THETA_LIMIT
    }
}

impl Default for CartPoleEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl Env for CartPoleEnv {
    fn name(&self) -> EnvName {
        EnvName::Cartpole
    }

    fn obs_dim(&self) -> usize {
        4
    }

    fn act_dim(&self) -> usize {
        1
    }

    fn max_steps(&self) -> usize {
        MAX_STEPS
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.x = rng.random_range(-RESET_SPREAD..RESET_SPREAD);
        self.x_dot = rng.random_range(-RESET_SPREAD..RESET_SPREAD);
        self.theta = rng.random_range(-RESET_SPREAD..RESET_SPREAD);
        self.theta_dot = rng.random_range(-RESET_SPREAD..RESET_SPREAD);
        self.steps = 0;
        self.observe()
    }

    fn step(&mut self, action: &[f64]) -> StepResult {
        let force = FORCE_MAG * action[0].clamp(-1.0, 1.0);
        let cos_t = self.theta.cos();
        let sin_t = self.theta.sin();
        let temp = (force + POLE_MASS_LENGTH * self.theta_dot * self.theta_dot * sin_t) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin_t - cos_t * temp)
            / (POLE_HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos_t * cos_t / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS;

        // velocity first, then position: keeps the exact upright equilibrium
        // and makes a constant push move the cart from the very first step
        self.x_dot += TAU * x_acc;
        self.x += TAU * self.x_dot;
        self.theta_dot += TAU * theta_acc;
        self.theta += TAU * self.theta_dot;
        self.steps += 1;

        let alive = self.within_bounds();
        let reward = if alive { 1.0 } else { 0.0 };
        let done = !alive || self.steps >= MAX_STEPS;
        let info = StepInfo {
            progress: self.steps as f64 / MAX_STEPS as f64,
            bonus: reward,
            r_bonus: reward,
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
        vec![self.x, self.x_dot, self.theta, self.theta_dot]
    }

    fn state_vec(&self) -> Vec<f64> {
        vec![self.x, self.x_dot, self.theta, self.theta_dot, self.steps as f64]
    }

    fn restore_state(&mut self, state: &[f64]) {
        self.x = state[0];
        self.x_dot = state[1];
        self.theta = state[2];
        self.theta_dot = state[3];
        self.steps = state[4] as usize;
    }
}
