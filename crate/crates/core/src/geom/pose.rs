use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shortest signed rotation taking `from` onto `to`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    normalize_angle(to - from)
}

/// Planar pose: east/north position in meters and heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    pub fn distance_to(&self, other: &Pose2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Expresses the world point `(px, py)` in this pose's body frame.
    pub fn to_local(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let dx = px - self.x;
        let dy = py - self.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    pub fn heading_error(&self, other: &Pose2D) -> f64 {
        angle_diff(other.theta, self.theta).abs()
    }
}

/// Advances a pose along a constant-curvature arc.
///
/// `displacement` is signed (negative for reverse motion) and `curvature` is
/// the steering curvature, so the heading changes by `curvature * displacement`.
pub fn advance(pose: &Pose2D, curvature: f64, displacement: f64) -> Pose2D {
    let dtheta = curvature * displacement;
    if dtheta.abs() < 1e-12 {
        // second-order term keeps tiny arcs consistent with the arc branch
        let mid = pose.theta + 0.5 * dtheta;
        return Pose2D::new(
            pose.x + displacement * mid.cos(),
            pose.y + displacement * mid.sin(),
            pose.theta + dtheta,
        );
    }
    let theta1 = pose.theta + dtheta;
    Pose2D::new(
        pose.x + (theta1.sin() - pose.theta.sin()) / curvature,
        pose.y - (theta1.cos() - pose.theta.cos()) / curvature,
        theta1,
    )
}
