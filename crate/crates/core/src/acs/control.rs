use serde::{Deserialize, Serialize};

use crate::geom::{angle_diff, DirectionRun, Pose2D, RSPath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlParams {
    /// Planned deceleration used for the approach ramp.
    pub a_dec: f64,
    pub goal_tol: f64,
    pub lookahead: f64,
    /// Speed below which the vehicle counts as standing still.
    pub standstill_speed: f64,
    pub pid: PidGains,
    pub angle_tol: f64,
    pub hold_time: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            a_dec: 0.5,
            goal_tol: 0.15,
            lookahead: 3.0,
            standstill_speed: 0.05,
            pid: PidGains::default(),
            angle_tol: 0.5_f64.to_radians(),
            hold_time: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 2.0,
            ki: 0.1,
            kd: 0.2,
        }
    }
}

/// Approach speed magnitude with `d_rem` metres left to the stop point.
pub fn ramp_speed(d_rem: f64, cruise: f64, a_dec: f64) -> f64 {
    cruise.min((2.0 * a_dec * d_rem.max(0.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Longitudinal {
    pub v_ref: f64,
    pub goal_reached: bool,
}

/// Signed speed reference at progress `s` on `run`.
pub fn longitudinal_control(run: &DirectionRun, s: f64, cruise: f64, params: &ControlParams) -> Longitudinal {
    let d_rem = (run.end_s - s).max(0.0);
    if d_rem < params.goal_tol {
        return Longitudinal {
            v_ref: 0.0,
            goal_reached: true,
        };
    }
    Longitudinal {
        v_ref: run.direction.sign() * ramp_speed(d_rem, cruise, params.a_dec),
        goal_reached: false,
    }
}

/// Point on the run whose straight-line distance from the vehicle is the
/// lookahead, continuing the final segment past the run end if needed.
pub fn lookahead_point(pose: &Pose2D, path: &RSPath, run: &DirectionRun, s_near: f64, lookahead: f64) -> Pose2D {
    let dist = |s: f64| {
        let p = path.pose_extended(s, run.end_s);
        (p.x - pose.x).hypot(p.y - pose.y)
    };
    let step = (lookahead / 8.0).max(1e-3);
    let mut lo = s_near;
    let mut hi = s_near;
    let mut found = dist(lo) >= lookahead;
    let limit = run.end_s + 4.0 * lookahead;
    while !found && hi < limit {
        lo = hi;
        hi += step;
        found = dist(hi) >= lookahead;
    }
    if found && hi > lo {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if dist(mid) >= lookahead {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    path.pose_extended(hi, run.end_s)
}

/// Pure pursuit yaw-rate reference for speed `v_ref`.
pub fn pure_pursuit(
    pose: &Pose2D,
    path: &RSPath,
    run: &DirectionRun,
    s_near: f64,
    v_ref: f64,
    lookahead: f64,
    omega_max: f64,
) -> f64 {
    let target = lookahead_point(pose, path, run, s_near, lookahead);
    let (_, y) = pose.to_local(target.x, target.y);
    // reversing steers in a frame turned by half a revolution
    let y_t = run.direction.sign() * y;
    let omega = v_ref.abs() * 2.0 * y_t / (lookahead * lookahead);
    omega.clamp(-omega_max, omega_max)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
    pub settled_for: f64,
}

/// Upper-body rotation rate toward `target`; returns the rate and whether
/// the angle has been held within tolerance long enough.
pub fn upper_body_pid(
    angle: f64,
    target: f64,
    dt: f64,
    state: &mut PidState,
    gains: &PidGains,
    rate_max: f64,
    params: &ControlParams,
) -> (f64, bool) {
    let e = angle_diff(target, angle);
    let de = state.prev_error.map_or(0.0, |p| (e - p) / dt);
    state.prev_error = Some(e);
    let unsat = gains.kp * e + gains.ki * (state.integral + e * dt) + gains.kd * de;
    if unsat.abs() < rate_max || unsat.signum() != e.signum() {
        state.integral += e * dt;
    }
    if gains.ki > 0.0 {
        let cap = rate_max / gains.ki;
        state.integral = state.integral.clamp(-cap, cap);
    }
    let rate = (gains.kp * e + gains.ki * state.integral + gains.kd * de).clamp(-rate_max, rate_max);
    if e.abs() < params.angle_tol {
        state.settled_for += dt;
    } else {
        state.settled_for = 0.0;
    }
    (rate, state.settled_for + 1e-9 >= params.hold_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Direction, PathSegment, Steer};

    fn straight(len: f64) -> RSPath {
        RSPath {
            start: Pose2D::origin(),
            segments: vec![PathSegment {
                steer: Steer::Straight,
                direction: Direction::Forward,
                length: len,
                curvature: 0.0,
                start_pose: Pose2D::origin(),
            }],
            total_length: len,
            r_min: 7.0,
        }
    }

    fn run(len: f64) -> DirectionRun {
        DirectionRun {
            start_s: 0.0,
            end_s: len,
            direction: Direction::Forward,
        }
    }

    #[test]
    fn cruise_ramp_and_goal() {
        let p = ControlParams::default();
        let r = run(200.0);
        assert_eq!(longitudinal_control(&r, 100.0, 2.0, &p).v_ref, 2.0);
        let near = longitudinal_control(&r, 199.9, 2.0, &p);
        assert_eq!(near.v_ref, 0.0);
        assert!(near.goal_reached);
        assert!((longitudinal_control(&r, 199.0, 2.0, &p).v_ref - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reverse_run_is_negative() {
        let r = DirectionRun {
            direction: Direction::Reverse,
            ..run(50.0)
        };
        assert_eq!(longitudinal_control(&r, 0.0, 2.0, &ControlParams::default()).v_ref, -2.0);
    }

    #[test]
    fn aligned_on_straight_gives_zero() {
        let path = straight(50.0);
        let w = pure_pursuit(&Pose2D::new(10.0, 0.0, 0.0), &path, &run(50.0), 10.0, 1.0, 3.0, 0.5);
        assert_eq!(w, 0.0);
    }

    #[test]
    fn lateral_offset_steers_back() {
        let path = straight(50.0);
        let w = pure_pursuit(&Pose2D::new(10.0, 0.5, 0.0), &path, &run(50.0), 10.0, 1.0, 3.0, 0.5);
        assert!((w - 2.0 * -0.5 / 9.0).abs() < 1e-9, "{w}");
    }

    #[test]
    fn target_continues_past_run_end() {
        let path = straight(10.0);
        let t = lookahead_point(&Pose2D::new(9.0, 0.0, 0.0), &path, &run(10.0), 9.0, 3.0);
        assert!((t.x - 12.0).abs() < 1e-9);
    }

    #[test]
    fn pure_p_rate() {
        let p = ControlParams::default();
        let gains = PidGains {
            kp: 1.0,
            ki: 0.0,
            kd: 0.0,
        };
        let (rate, _) = upper_body_pid(0.0, 0.5, 0.02, &mut PidState::default(), &gains, 10.0, &p);
        assert!((rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn at_target_completes_after_hold() {
        let p = ControlParams::default();
        let mut st = PidState::default();
        let mut steps = 0;
        loop {
            let (rate, done) = upper_body_pid(0.3, 0.3, 0.02, &mut st, &p.pid, 0.6, &p);
            assert_eq!(rate, 0.0);
            steps += 1;
            if done {
                break;
            }
        }
        assert_eq!(steps, 25);
    }
}
