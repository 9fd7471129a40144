//! Planar 7-joint kinematic chain: the robot arm shared by the reach and
//! assistive tasks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ACTION_PENALTY;

pub const N_JOINTS: usize = 7;
pub const LINK_LENGTH: f64 = 0.15;
pub const MAX_JOINT_DELTA: f64 = 0.05;

/// Resting pose all arm tasks reset near; slightly curled so the effector
/// starts away from both the workspace boundary and the silhouette.
pub const BASE_POSE: [f64; N_JOINTS] = [0.5, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3];
const POSE_JITTER: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct ArmModel {
    pub link_lengths: Vec<f64>,
    pub joint_angles: Vec<f64>,
    pub max_joint_delta: f64,
}

impl ArmModel {
    pub fn new() -> ArmModel {
        ArmModel {
            link_lengths: vec![LINK_LENGTH; N_JOINTS],
            joint_angles: vec![0.0; N_JOINTS],
            max_joint_delta: MAX_JOINT_DELTA,
        }
    }

    pub fn n_joints(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn reset_pose(&mut self, rng: &mut ChaCha8Rng) {
        self.joint_angles = BASE_POSE
            .iter()
            .map(|&a| a + rng.random_range(-POSE_JITTER..POSE_JITTER))
            .collect();
    }

    /// End-effector position of the resting pose without jitter; target
    /// sampling is anchored here so its distribution is pose-independent.
    pub fn nominal_effector() -> (f64, f64) {
        let mut arm = ArmModel::new();
        arm.joint_angles = BASE_POSE.to_vec();
        forward_kinematics(&arm)
    }

    /// Clamp the raw action to [-1, 1], scale by the per-step joint delta,
    /// and integrate with joint limits at +/- pi. Returns the clamped action.
    pub fn apply_action(&mut self, action: &[f64]) -> Vec<f64> {
        let clamped: Vec<f64> = action.iter().map(|a| a.clamp(-1.0, 1.0)).collect();
        for (angle, a) in self.joint_angles.iter_mut().zip(&clamped) {
            *angle = (*angle + a * self.max_joint_delta).clamp(-std::f64::consts::PI, std::f64::consts::PI);
        }
        clamped
    }

    /// Largest reach radius (fully stretched arm).
    pub fn max_reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// Smallest reachable radius for an unrestricted planar chain:
    /// max(0, 2 * L_max - sum L).
    pub fn min_reach(&self) -> f64 {
        let total = self.max_reach();
        let longest = self.link_lengths.iter().cloned().fold(0.0, f64::max);
        (2.0 * longest - total).max(0.0)
    }
}

impl Default for ArmModel {
    fn default() -> Self {
        Self::new()
    }
}

/// Cumulative-angle planar chain: p = sum_i L_i (cos Theta_i, sin Theta_i)
/// with Theta_i the running sum of joint angles up to i.
pub fn forward_kinematics(arm: &ArmModel) -> (f64, f64) {
    let mut theta = 0.0;
    let (mut x, mut y) = (0.0, 0.0);
    for (length, angle) in arm.link_lengths.iter().zip(&arm.joint_angles) {
        theta += angle;
        x += length * theta.cos();
        y += length * theta.sin();
    }
    (x, y)
}

pub fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Common per-step bookkeeping for every arm task: integrate the action,
/// track the effector, and price the action effort.
#[derive(Debug, Clone)]
pub(crate) struct ArmCore {
    pub model: ArmModel,
    pub steps: usize,
    pub effector: (f64, f64),
    pub prev_effector: (f64, f64),
}

impl ArmCore {
    pub fn new() -> ArmCore {
        ArmCore {
            model: ArmModel::new(),
            steps: 0,
            effector: (0.0, 0.0),
            prev_effector: (0.0, 0.0),
        }
    }

    pub fn reset(&mut self, rng: &mut ChaCha8Rng) {
        self.model.reset_pose(rng);
        self.steps = 0;
        self.effector = forward_kinematics(&self.model);
        self.prev_effector = self.effector;
    }

    /// Advance one step; returns (action penalty term, effector speed).
    pub fn advance(&mut self, action: &[f64]) -> (f64, f64) {
        let clamped = self.model.apply_action(action);
        self.prev_effector = self.effector;
        self.effector = forward_kinematics(&self.model);
        self.steps += 1;
        let effort: f64 = clamped.iter().map(|a| a * a).sum();
        let speed = dist(self.effector, self.prev_effector);
        (-ACTION_PENALTY * effort, speed)
    }

    pub fn state_vec(&self) -> Vec<f64> {
        let mut v = self.model.joint_angles.clone();
        v.push(self.steps as f64);
        v.extend([
            self.effector.0,
            self.effector.1,
            self.prev_effector.0,
            self.prev_effector.1,
        ]);
        v
    }

    /// Restores from `state_vec` layout; returns the number of values read.
    pub fn restore(&mut self, state: &[f64]) -> usize {
        let n = self.model.n_joints();
        self.model.joint_angles = state[..n].to_vec();
        self.steps = state[n] as usize;
        self.effector = (state[n + 1], state[n + 2]);
        self.prev_effector = (state[n + 3], state[n + 4]);
        n + 5
    }
}
