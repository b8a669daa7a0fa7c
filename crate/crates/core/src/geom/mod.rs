//! Planar geometry shared by the fleet manager and the vehicle agents.

mod path;
mod pose;
mod reeds_shepp;

pub use path::{DirectionRun, Direction, PathSample, PathSegment, RSPath, Steer};
pub use pose::{advance, angle_diff, normalize_angle, Pose2D};
pub use reeds_shepp::plan_rs_path;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("turning radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("poses must have finite coordinates")]
    NonFinitePose,
    #[error("arc length {s} outside [0, {total}]")]
    OutOfRange { s: f64, total: f64 },
    #[error("sampling step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("no candidate path found")]
    NoPath,
}
