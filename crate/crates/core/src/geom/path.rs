use serde::{Deserialize, Serialize};

use super::pose::{advance, Pose2D};
use super::GeomError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Steer {
    Left,
    Straight,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Reverse => -1.0,
        }
    }
}

/// One constant-curvature piece of a planned path.
///
/// `curvature` is the steering curvature (positive for `Left`), so the yaw
/// rate while driving the segment is `v * curvature` with `v` signed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub steer: Steer,
    pub direction: Direction,
    pub length: f64,
    pub curvature: f64,
    pub start_pose: Pose2D,
}

impl PathSegment {
    /// Pose after travelling `ds` meters along the segment. `ds` beyond the
    /// segment length extrapolates the same arc or line.
    pub fn pose_at(&self, ds: f64) -> Pose2D {
        advance(&self.start_pose, self.curvature, self.direction.sign() * ds)
    }

    pub fn end_pose(&self) -> Pose2D {
        self.pose_at(self.length)
    }

    fn circle_center(&self) -> Option<(f64, f64)> {
        if self.curvature == 0.0 {
            return None;
        }
        let r = 1.0 / self.curvature;
        let (s, c) = self.start_pose.theta.sin_cos();
        Some((self.start_pose.x - r * s, self.start_pose.y + r * c))
    }

    /// Arc length in `[0, length]` of the point closest to `(px, py)`.
    pub fn project(&self, px: f64, py: f64) -> f64 {
        match self.circle_center() {
            None => {
                let (s, c) = self.start_pose.theta.sin_cos();
                let along = self.direction.sign()
                    * ((px - self.start_pose.x) * c + (py - self.start_pose.y) * s);
                along.clamp(0.0, self.length)
            }
            Some((cx, cy)) => {
                let r = 1.0 / self.curvature.abs();
                let a0 = (self.start_pose.y - cy).atan2(self.start_pose.x - cx);
                let ap = (py - cy).atan2(px - cx);
                // the center-relative angle advances with this sign as s grows
                let turn = self.curvature.signum() * self.direction.sign();
                let swept = (turn * (ap - a0)).rem_euclid(std::f64::consts::TAU) * r;
                if swept <= self.length {
                    swept
                } else {
                    let d_start = self.start_pose.distance_to(&Pose2D::new(px, py, 0.0));
                    let end = self.end_pose();
                    let d_end = (end.x - px).hypot(end.y - py);
                    if d_start < d_end {
                        0.0
                    } else {
                        self.length
                    }
                }
            }
        }
    }
}

/// A planned path made of at most five constant-curvature segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSPath {
    pub start: Pose2D,
    pub segments: Vec<PathSegment>,
    pub total_length: f64,
    pub r_min: f64,
}

/// A point produced by [`RSPath::sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub s: f64,
    pub pose: Pose2D,
    pub curvature: f64,
    pub direction: Direction,
}

/// A maximal run of consecutive segments driven in the same direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionRun {
    pub start_s: f64,
    pub end_s: f64,
    pub direction: Direction,
}

impl RSPath {
    pub fn empty(start: Pose2D, r_min: f64) -> Self {
        Self {
            start,
            segments: Vec::new(),
            total_length: 0.0,
            r_min,
        }
    }

    pub fn goal(&self) -> Pose2D {
        self.segments
            .last()
            .map(PathSegment::end_pose)
            .unwrap_or(self.start)
    }

    pub fn reversals(&self) -> usize {
        self.segments
            .windows(2)
            .filter(|w| w[0].direction != w[1].direction)
            .count()
    }

    /// Index of the segment containing `s` and the offset into it.
    fn locate(&self, s: f64) -> (usize, f64) {
        let mut acc = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if s <= acc + seg.length || i + 1 == self.segments.len() {
                return (i, (s - acc).clamp(0.0, seg.length));
            }
            acc += seg.length;
        }
        (0, 0.0)
    }

    /// Closed-form evaluation at arc length `s`.
    pub fn pose_along(&self, s: f64) -> Result<(Pose2D, f64, Direction), GeomError> {
        if !(0.0..=self.total_length).contains(&s) {
            return Err(GeomError::OutOfRange {
                s,
                total: self.total_length,
            });
        }
        if self.segments.is_empty() {
            return Ok((self.start, 0.0, Direction::Forward));
        }
        let (i, ds) = self.locate(s);
        let seg = &self.segments[i];
        Ok((seg.pose_at(ds), seg.curvature, seg.direction))
    }

    /// Samples the path with spacing at most `ds`; each segment boundary is
    /// included so the last sample is exactly the goal.
    pub fn sample(&self, ds: f64) -> Result<Vec<PathSample>, GeomError> {
        if !(ds > 0.0) || !ds.is_finite() {
            return Err(GeomError::InvalidStep(ds));
        }
        let mut out = Vec::new();
        let Some(first) = self.segments.first() else {
            out.push(PathSample {
                s: 0.0,
                pose: self.start,
                curvature: 0.0,
                direction: Direction::Forward,
            });
            return Ok(out);
        };
        out.push(PathSample {
            s: 0.0,
            pose: first.start_pose,
            curvature: first.curvature,
            direction: first.direction,
        });
        let mut base = 0.0;
        for seg in &self.segments {
            let n = (seg.length / ds).ceil().max(1.0) as usize;
            for k in 1..=n {
                let local = seg.length * k as f64 / n as f64;
                out.push(PathSample {
                    s: base + local,
                    pose: seg.pose_at(local),
                    curvature: seg.curvature,
                    direction: seg.direction,
                });
            }
            base += seg.length;
        }
        if let Some(last) = out.last_mut() {
            last.s = self.total_length;
        }
        Ok(out)
    }

    /// Arc length of the locally nearest path point at or after `s_hint`.
    ///
    /// The search walks forward from the segment containing the hint and stops
    /// at the first segment whose projection lands before its end, looking at
    /// most one segment past the hint's segment. Progress is therefore
    /// monotone when the hint is the previous result.
    pub fn nearest_on_path(&self, p: &Pose2D, s_hint: f64) -> f64 {
        self.nearest_within(p, s_hint, self.total_length)
    }

    /// Same as [`RSPath::nearest_on_path`], never returning more than `s_max`.
    pub fn nearest_within(&self, p: &Pose2D, s_hint: f64, s_max: f64) -> f64 {
        let s_max = s_max.min(self.total_length);
        let s_hint = s_hint.clamp(0.0, s_max);
        if self.segments.is_empty() || s_hint >= s_max {
            return s_hint;
        }
        // a hint on a boundary belongs to the segment that starts there
        let mut base = 0.0;
        let mut first = self.segments.len() - 1;
        for (i, seg) in self.segments.iter().enumerate() {
            if s_hint < base + seg.length - 1e-12 {
                first = i;
                break;
            }
            base += seg.length;
        }
        if first == self.segments.len() - 1 {
            base = self.total_length - self.segments[first].length;
        }
        for seg in self.segments.iter().skip(first).take(2) {
            let local = seg.project(p.x, p.y);
            let s = (base + local).max(s_hint);
            if s >= s_max {
                return s_max;
            }
            if local < seg.length {
                return s;
            }
            base += seg.length;
        }
        base.clamp(s_hint, s_max)
    }

    /// Splits the path at every direction change.
    pub fn direction_runs(&self) -> Vec<DirectionRun> {
        let mut runs: Vec<DirectionRun> = Vec::new();
        let mut s = 0.0;
        for seg in &self.segments {
            match runs.last_mut() {
                Some(run) if run.direction == seg.direction => run.end_s = s + seg.length,
                _ => runs.push(DirectionRun {
                    start_s: s,
                    end_s: s + seg.length,
                    direction: seg.direction,
                }),
            }
            s += seg.length;
        }
        runs
    }

    /// Pose at `s`, continuing the geometry of the segment that ends at
    /// `run_end` when `s` lies beyond it.
    pub fn pose_extended(&self, s: f64, run_end: f64) -> Pose2D {
        if self.segments.is_empty() {
            return self.start;
        }
        if s <= run_end {
            return self.pose_along(s.clamp(0.0, self.total_length)).map(|p| p.0).unwrap_or(self.start);
        }
        let (i, _) = self.locate(run_end);
        let mut seg_start: f64 = self.segments[..i].iter().map(|s| s.length).sum();
        let mut idx = i;
        // run_end on a boundary belongs to the segment that ends there
        if (seg_start - run_end).abs() < 1e-12 && i > 0 {
            idx = i - 1;
            seg_start -= self.segments[idx].length;
        }
        self.segments[idx].pose_at(s - seg_start)
    }
}
