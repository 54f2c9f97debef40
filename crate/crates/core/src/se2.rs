//! Planar rigid motions (SE(2)) and the pose distance used by every metric.
//!
//! Rotations are stored as a single wrapped heading angle. Composition is
//! `(θ1 + θ2, p1 + R(θ1) p2)` and the inverse is `(−θ, −R(−θ) p)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(−π, π]`. `wrap_angle(−π) == π`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    // `a` can land on exactly −π after the addition above for inputs just
    // below −π; fold it onto the canonical half-turn.
    if a <= -PI {
        a = PI;
    }
    a
}

/// An element of SE(2): heading plus planar position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub theta: f64,
    pub x: f64,
    pub y: f64,
}

impl Pose2 {
    /// Builds a pose, wrapping the heading.
    pub fn new(theta: f64, x: f64, y: f64) -> Self {
        Pose2 {
            theta: wrap_angle(theta),
            x,
            y,
        }
    }

    pub fn identity() -> Self {
        Pose2 {
            theta: 0.0,
            x: 0.0,
            y: 0.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.theta.is_finite()
            && self.x.is_finite()
            && self.y.is_finite()
            && self.theta > -PI
            && self.theta <= PI
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Rotates a body-frame vector into the world frame.
    pub fn rotate(&self, v: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }

    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let [rx, ry] = self.rotate(other.position());
        Pose2 {
            theta: wrap_angle(self.theta + other.theta),
            x: self.x + rx,
            y: self.y + ry,
        }
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        // −Rᵀ p
        Pose2 {
            theta: wrap_angle(-self.theta),
            x: -(c * self.x + s * self.y),
            y: -(-s * self.x + c * self.y),
        }
    }
}

impl Default for Pose2 {
    fn default() -> Self {
        Pose2::identity()
    }
}

pub fn se2_identity() -> Pose2 {
    Pose2::identity()
}

pub fn se2_compose(g1: &Pose2, g2: &Pose2) -> Pose2 {
    g1.compose(g2)
}

pub fn se2_inverse(g: &Pose2) -> Pose2 {
    g.inverse()
}

/// Weight of the rotational term in [`state_distance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceParams {
    pub alpha_rot: f64,
}

impl DistanceParams {
    pub fn new(alpha_rot: f64) -> crate::Result<Self> {
        if !(alpha_rot >= 0.0) || !alpha_rot.is_finite() {
            return Err(crate::Error::InvalidArgument(format!(
                "alpha_rot must be finite and >= 0, got {alpha_rot}"
            )));
        }
        Ok(DistanceParams { alpha_rot })
    }
}

impl Default for DistanceParams {
    fn default() -> Self {
        DistanceParams { alpha_rot: 1.0 }
    }
}

/// Absolute wrapped heading difference, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

pub fn translation_distance(a: &Pose2, b: &Pose2) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// `‖p1 − p2‖ + α |wrap(θ1 − θ2)|`.
pub fn state_distance(s1: &Pose2, s2: &Pose2, params: &DistanceParams) -> f64 {
    translation_distance(s1, s2) + params.alpha_rot * angle_distance(s1.theta, s2.theta)
}
