//! Static stick-figure silhouette the assistive tasks act on. Regenerated per
//! reset with a small seeded jitter on its anchor point.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::arm::dist;

const ANCHOR: (f64, f64) = (0.55, 0.35);
const ANCHOR_JITTER: f64 = 0.03;
pub const HEAD_RADIUS: f64 = 0.06;
pub const SKIN_RADIUS: f64 = 0.02;

#[derive(Debug, Clone)]
pub(crate) struct Silhouette {
    /// Head circle center; the feeding target sits on its robot-facing edge.
    pub head_center: (f64, f64),
    pub mouth: (f64, f64),
    /// Forearm segment the bathing and scratching tasks work along.
    pub shoulder: (f64, f64),
    pub wrist: (f64, f64),
}

impl Silhouette {
    pub fn generate(rng: &mut ChaCha8Rng) -> Silhouette {
        let anchor = (
            ANCHOR.0 + rng.random_range(-ANCHOR_JITTER..ANCHOR_JITTER),
            ANCHOR.1 + rng.random_range(-ANCHOR_JITTER..ANCHOR_JITTER),
        );
        let shoulder = (anchor.0 - 0.05, anchor.1 - 0.25);
        Silhouette {
            head_center: anchor,
            mouth: (anchor.0 - HEAD_RADIUS, anchor.1),
            shoulder,
            wrist: (shoulder.0 - 0.30, shoulder.1 - 0.05),
        }
    }

    /// Point at fraction `t` along the forearm segment.
    pub fn arm_point(&self, t: f64) -> (f64, f64) {
        (
            self.shoulder.0 + t * (self.wrist.0 - self.shoulder.0),
            self.shoulder.1 + t * (self.wrist.1 - self.shoulder.1),
        )
    }

    /// Distance from `p` to the forearm segment.
    pub fn dist_to_arm(&self, p: (f64, f64)) -> f64 {
        let (ax, ay) = self.shoulder;
        let (bx, by) = self.wrist;
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = dx * dx + dy * dy;
        let t = (((p.0 - ax) * dx + (p.1 - ay) * dy) / len2).clamp(0.0, 1.0);
        dist(p, (ax + t * dx, ay + t * dy))
    }

    pub fn state_vec(&self) -> Vec<f64> {
        vec![
            self.head_center.0,
            self.head_center.1,
            self.mouth.0,
            self.mouth.1,
            self.shoulder.0,
            self.shoulder.1,
            self.wrist.0,
            self.wrist.1,
        ]
    }

    pub fn restore(&mut self, state: &[f64]) -> usize {
        self.head_center = (state[0], state[1]);
        self.mouth = (state[2], state[3]);
        self.shoulder = (state[4], state[5]);
        self.wrist = (state[6], state[7]);
        8
    }

    pub fn placeholder() -> Silhouette {
        Silhouette {
            head_center: ANCHOR,
            mouth: (ANCHOR.0 - HEAD_RADIUS, ANCHOR.1),
            shoulder: (0.0, 0.0),
            wrist: (0.0, 0.0),
        }
    }
}
