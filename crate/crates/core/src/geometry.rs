use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid maps -pi to pi, which is the closed end of the interval.
    a
}

/// Horizontal circle describing a pole cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub lx: f64,
    pub ly: f64,
    pub r: f64,
}

impl Circle {
    pub fn new(lx: f64, ly: f64, r: f64) -> Self {
        Self { lx, ly, r }
    }

    pub fn center(&self) -> [f64; 2] {
        [self.lx, self.ly]
    }

    pub fn center_distance(&self, other: &Circle) -> f64 {
        (self.lx - other.lx).hypot(self.ly - other.ly)
    }
}

/// Planar rigid transform / vehicle pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    /// Builds a pose with `theta` wrapped to (-pi, pi].
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    /// Maps a point from this pose's local frame into the parent frame.
    pub fn transform_point(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }

    /// Maps a parent-frame point into this pose's local frame.
    pub fn inverse_transform_point(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        let dx = p[0] - self.x;
        let dy = p[1] - self.y;
        [c * dx + s * dy, -s * dx + c * dy]
    }

    /// `self ∘ other`: applies `other` expressed in this pose's frame.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let [x, y] = self.transform_point([other.x, other.y]);
        Pose2::new(x, y, self.theta + other.theta)
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            -(c * self.x + s * self.y),
            s * self.x - c * self.y,
            -self.theta,
        )
    }

    /// Relative increment taking `self` to `to`, i.e. `self⁻¹ ∘ to`.
    pub fn between(&self, to: &Pose2) -> Pose2 {
        self.inverse().compose(to)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

impl Default for Pose2 {
    fn default() -> Self {
        Pose2::IDENTITY
    }
}
