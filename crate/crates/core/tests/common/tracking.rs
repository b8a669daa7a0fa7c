//! Commanded yaw rate while sitting exactly on a single constant-curvature
//! segment.

use fleetsim_core::acs::pure_pursuit;
use fleetsim_core::geom::{Direction, PathSegment, Pose2D, RSPath, Steer};

pub fn arc(start: Pose2D, radius: f64, left: bool, direction: Direction, length: f64) -> RSPath {
    let curvature = if left { 1.0 / radius } else { -1.0 / radius };
    RSPath {
        start,
        segments: vec![PathSegment {
            steer: if left { Steer::Left } else { Steer::Right },
            direction,
            length,
            curvature,
            start_pose: start,
        }],
        total_length: length,
        r_min: radius,
    }
}

/// Yaw-rate references at `n` evenly spaced zero-error poses along the path.
pub fn omegas(path: &RSPath, speed: f64, lookahead: f64, n: usize) -> Vec<f64> {
    let run = path.direction_runs()[0];
    (0..n)
        .map(|k| {
            let s = run.start_s + (run.end_s - run.start_s) * k as f64 / n as f64;
            let (pose, _, _) = path.pose_along(s).unwrap();
            pure_pursuit(&pose, path, &run, s, speed, lookahead, f64::INFINITY)
        })
        .collect()
}

pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}
