//! Lightweight deterministic environments behind one step/reset contract:
//! continuous-force cart-pole, planar-arm reach, and three assistive-task
//! analogs (feeding, bed bathing, itch scratching) with force-limited contact.
//!
//! All arm tasks run a 7-joint planar kinematic chain against a static,
//! seeded stick-figure silhouette. 10 steps make up one simulated second and
//! assistive episodes last 20 seconds (200 steps).

mod arm;
mod bathing;
mod cartpole;
mod feeding;
mod human;
mod reach;
mod scratching;

pub use arm::{forward_kinematics, ArmModel};
pub use bathing::BathingEnv;
pub use cartpole::CartPoleEnv;
pub use feeding::FeedingEnv;
pub use reach::ReachEnv;
pub use scratching::ScratchingEnv;

use serde::{Deserialize, Serialize};

/// Episode cap shared by the arm tasks: 20 s at 10 steps/s.
pub const ARM_MAX_STEPS: usize = 200;
/// Success / contact tolerance radius in meters.
pub const CONTACT_TOL: f64 = 0.03;
/// Quadratic action-effort penalty coefficient.
pub const ACTION_PENALTY: f64 = 0.01;
/// Effector force cap in abstract newton-equivalent units.
pub const FORCE_CAP: f64 = 1.0;
/// Per-unit penalty on force exceeding the cap.
pub const FORCE_PENALTY_RATE: f64 = 0.05;
/// Contact stiffness: force per meter of penetration.
pub const CONTACT_STIFFNESS: f64 = 50.0;

/// Cap the effector force and price the excess.
/// Returns (applied force, penalty).
pub fn apply_force_limit(f: f64, cap: f64) -> (f64, f64) {
    debug_assert!(f >= 0.0 && cap > 0.0);
    (f.min(cap), FORCE_PENALTY_RATE * (f - cap).max(0.0))
}

/// Per-step diagnostics. The reward always equals
/// `r_dist + r_act + r_bonus + r_force` exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepInfo {
    /// Distance to the current target (meters).
    pub dist: f64,
    /// Applied (capped) effector force.
    pub force: f64,
    /// Task-progress fraction in [0, 1].
    pub progress: f64,
    /// Bonus reward earned this step.
    pub bonus: f64,
    pub r_dist: f64,
    pub r_act: f64,
    pub r_bonus: f64,
    pub r_force: f64,
}

impl StepInfo {
    /// Stable names consumed by the CSV logger and eval aggregates.
    pub fn as_pairs(&self) -> [(&'static str, f64); 8] {
        [
            ("dist", self.dist),
            ("force", self.force),
            ("progress", self.progress),
            ("bonus", self.bonus),
            ("r_dist", self.r_dist),
            ("r_act", self.r_act),
            ("r_bonus", self.r_bonus),
            ("r_force", self.r_force),
        ]
    }

    pub fn reward_components(&self) -> f64 {
        self.r_dist + self.r_act + self.r_bonus + self.r_force
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// The environment contract every task implements.
pub trait Env: Send {
    fn name(&self) -> EnvName;
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    fn max_steps(&self) -> usize;
    /// Start a new episode; fully determined by the seed.
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> StepResult;
    /// Current observation without advancing (used after state restore).
    fn observe(&self) -> Vec<f64>;
    /// Full internal state as a flat array (checkpoint payload).
    fn state_vec(&self) -> Vec<f64>;
    fn restore_state(&mut self, state: &[f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvName {
    Cartpole,
    Reach,
    Feeding,
    Bathing,
    Scratching,
}

pub const ENV_NAMES: [EnvName; 5] = [
    EnvName::Cartpole,
    EnvName::Reach,
    EnvName::Feeding,
    EnvName::Bathing,
    EnvName::Scratching,
];

impl std::str::FromStr for EnvName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cartpole" => Ok(EnvName::Cartpole),
            "reach" => Ok(EnvName::Reach),
            "feeding" => Ok(EnvName::Feeding),
            "bathing" => Ok(EnvName::Bathing),
            "scratching" => Ok(EnvName::Scratching),
            other => Err(format!(
                "unknown env '{other}' (valid: cartpole, reach, feeding, bathing, scratching)"
            )),
        }
    }
}

impl std::fmt::Display for EnvName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnvName::Cartpole => "cartpole",
            EnvName::Reach => "reach",
            EnvName::Feeding => "feeding",
            EnvName::Bathing => "bathing",
            EnvName::Scratching => "scratching",
        })
    }
}

pub fn make_env(name: EnvName) -> Box<dyn Env> {
    match name {
        EnvName::Cartpole => Box::new(CartPoleEnv::new()),
        EnvName::Reach => Box::new(ReachEnv::new()),
        EnvName::Feeding => Box::new(FeedingEnv::new()),
        EnvName::Bathing => Box::new(BathingEnv::new()),
        EnvName::Scratching => Box::new(ScratchingEnv::new()),
    }
}
