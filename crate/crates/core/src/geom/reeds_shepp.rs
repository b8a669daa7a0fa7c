//! Shortest curvature-bounded paths with forward and reverse motion.
//!
//! Candidates come from the classical closed-form word families
//! (CSC, CCC, CCCC, CCSC, CSCC, CCSCC). Each family is solved for a canonical
//! left-first word and mapped onto the remaining words through the timeflip,
//! reflection and backwards symmetries of the problem. All computation is
//! done for a unit turning radius in the start frame and scaled afterwards.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::path::{Direction, PathSegment, RSPath, Steer};
use super::pose::Pose2D;
use super::GeomError;

const ZERO: f64 = 1e-10;
/// Segments shorter than this (in unit-radius lengths) are dropped.
const MIN_SEGMENT: f64 = 1e-10;
/// Candidates within this length of the best are considered ties.
const TIE_EPS: f64 = 1e-9;

use Steer::{Left as L, Right as R, Straight as S};

/// Candidate in unit-radius coordinates: steering word plus signed lengths.
#[derive(Debug, Clone)]
struct Word {
    steer: Vec<Steer>,
    lengths: Vec<f64>,
}

fn mod2pi(x: f64) -> f64 {
    let v = x % TAU;
    if v < -PI {
        v + TAU
    } else if v > PI {
        v - TAU
    } else {
        v
    }
}

fn polar(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y), y.atan2(x))
}

fn tau_omega(u: f64, v: f64, xi: f64, eta: f64, phi: f64) -> (f64, f64) {
    let delta = mod2pi(u - v);
    let a = u.sin() - delta.sin();
    let b = u.cos() - delta.cos() - 1.0;
    let t1 = (eta * a - xi * b).atan2(xi * a + eta * b);
    let t2 = 2.0 * (delta.cos() - v.cos() - u.cos()) + 3.0;
    let tau = if t2 < 0.0 { mod2pi(t1 + PI) } else { mod2pi(t1) };
    let omega = mod2pi(tau - u + v - phi);
    (tau, omega)
}

// L+ S+ L+
fn lp_sp_lp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u, t) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if t >= -ZERO {
        let v = mod2pi(phi - t);
        if v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

// L+ S+ R+
fn lp_sp_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u1, t1) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    let u1 = u1 * u1;
    if u1 >= 4.0 {
        let u = (u1 - 4.0).sqrt();
        let theta = 2.0_f64.atan2(u);
        let t = mod2pi(t1 + theta);
        let v = mod2pi(t - phi);
        if t >= -ZERO && v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

// L+ R- L
fn lp_rm_l(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u1, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if u1 <= 4.0 {
        let u = -2.0 * (0.25 * u1).asin();
        let t = mod2pi(theta + 0.5 * u + PI);
        let v = mod2pi(phi - t + u);
        if t >= -ZERO && u <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

// L+ R+u L-u R-
fn lp_rup_lum_rm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = 0.25 * (2.0 + xi.hypot(eta));
    if rho <= 1.0 {
        let u = rho.acos();
        let (t, v) = tau_omega(u, -u, xi, eta, phi);
        if t >= -ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

// L+ R-u L-u R+
fn lp_rum_lum_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = (20.0 - xi * xi - eta * eta) / 16.0;
    if (0.0..=1.0).contains(&rho) {
        let u = -rho.acos();
        if u >= -0.5 * PI {
            let (t, v) = tau_omega(u, u, xi, eta, phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

// L+ R-(π/2) S- L-
fn lp_rm_sm_lm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (rho, theta) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if rho >= 2.0 {
        let r = (rho * rho - 4.0).sqrt();
        let u = 2.0 - r;
        let t = mod2pi(theta + r.atan2(-2.0));
        let v = mod2pi(phi - 0.5 * PI - t);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

// L+ R-(π/2) S- R-
fn lp_rm_sm_rm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, theta) = polar(-eta, xi);
    if rho >= 2.0 {
        let t = theta;
        let u = 2.0 - rho;
        let v = mod2pi(t + 0.5 * PI - phi);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

// L+ R-(π/2) S- L-(π/2) R+
fn lp_rm_s_lm_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, _) = polar(xi, eta);
    if rho >= 2.0 {
        let u = 4.0 - (rho * rho - 4.0).sqrt();
        if u <= ZERO {
            let t = mod2pi(((4.0 - u) * xi - 2.0 * eta).atan2(-2.0 * xi + (u - 4.0) * eta));
            let v = mod2pi(t - phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

type Solver = fn(f64, f64, f64) -> Option<(f64, f64, f64)>;

fn swap_lr(word: &[Steer]) -> Vec<Steer> {
    word.iter()
        .map(|s| match s {
            L => R,
            R => L,
            S => S,
        })
        .collect()
}

/// Runs `solver` on the four symmetric variants of `(x, y, phi)`.
///
/// `lengths` maps the solver's `(t, u, v)` into the word's signed lengths.
fn symmetric<F>(out: &mut Vec<Word>, solver: Solver, word: &[Steer], x: f64, y: f64, phi: f64, lengths: F)
where
    F: Fn(f64, f64, f64) -> Vec<f64>,
{
    let neg = |v: Vec<f64>| v.into_iter().map(|l| -l).collect::<Vec<_>>();
    let reflected = swap_lr(word);
    if let Some((t, u, v)) = solver(x, y, phi) {
        out.push(Word { steer: word.to_vec(), lengths: lengths(t, u, v) });
    }
    // timeflip
    if let Some((t, u, v)) = solver(-x, y, -phi) {
        out.push(Word { steer: word.to_vec(), lengths: neg(lengths(t, u, v)) });
    }
    // reflect
    if let Some((t, u, v)) = solver(x, -y, -phi) {
        out.push(Word { steer: reflected.clone(), lengths: lengths(t, u, v) });
    }
    // timeflip + reflect
    if let Some((t, u, v)) = solver(-x, -y, phi) {
        out.push(Word { steer: reflected, lengths: neg(lengths(t, u, v)) });
    }
}

fn candidates(x: f64, y: f64, phi: f64) -> Vec<Word> {
    let mut out = Vec::with_capacity(48);
    let h = FRAC_PI_2;

    // CSC
    symmetric(&mut out, lp_sp_lp, &[L, S, L], x, y, phi, |t, u, v| vec![t, u, v]);
    symmetric(&mut out, lp_sp_rp, &[L, S, R], x, y, phi, |t, u, v| vec![t, u, v]);

    // CCC, forwards and backwards
    let xb = x * phi.cos() + y * phi.sin();
    let yb = x * phi.sin() - y * phi.cos();
    symmetric(&mut out, lp_rm_l, &[L, R, L], x, y, phi, |t, u, v| vec![t, u, v]);
    symmetric(&mut out, lp_rm_l, &[L, R, L], xb, yb, phi, |t, u, v| vec![v, u, t]);

    // CCCC
    symmetric(&mut out, lp_rup_lum_rm, &[L, R, L, R], x, y, phi, |t, u, v| vec![t, u, -u, v]);
    symmetric(&mut out, lp_rum_lum_rp, &[L, R, L, R], x, y, phi, |t, u, v| vec![t, u, u, v]);

    // CCSC and its backwards form CSCC
    symmetric(&mut out, lp_rm_sm_lm, &[L, R, S, L], x, y, phi, |t, u, v| vec![t, -h, u, v]);
    symmetric(&mut out, lp_rm_sm_rm, &[L, R, S, R], x, y, phi, |t, u, v| vec![t, -h, u, v]);
    symmetric(&mut out, lp_rm_sm_lm, &[L, S, R, L], xb, yb, phi, |t, u, v| vec![v, u, -h, t]);
    symmetric(&mut out, lp_rm_sm_rm, &[R, S, R, L], xb, yb, phi, |t, u, v| vec![v, u, -h, t]);

    // CCSCC
    symmetric(&mut out, lp_rm_s_lm_rp, &[L, R, S, L, R], x, y, phi, |t, u, v| {
        vec![t, -h, u, -h, v]
    });

    out
}

/// Drops empty pieces and merges neighbours with identical steering and gear.
fn simplify(word: &Word) -> Vec<(Steer, f64)> {
    let mut out: Vec<(Steer, f64)> = Vec::with_capacity(5);
    for (&steer, &len) in word.steer.iter().zip(&word.lengths) {
        if len.abs() < MIN_SEGMENT {
            continue;
        }
        match out.last_mut() {
            Some((s, l)) if *s == steer && l.signum() == len.signum() => *l += len,
            _ => out.push((steer, len)),
        }
    }
    out
}

fn reversals(pieces: &[(Steer, f64)]) -> usize {
    pieces
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .count()
}

/// Plans the shortest Reeds-Shepp path from `start` to `goal`.
///
/// Ties within 1e-9 (unit radius) prefer fewer segments, then fewer
/// direction changes.
pub fn plan_rs_path(start: &Pose2D, goal: &Pose2D, r_min: f64) -> Result<RSPath, GeomError> {
    if !(r_min > 0.0) || !r_min.is_finite() {
        return Err(GeomError::InvalidRadius(r_min));
    }
    if !start.is_finite() || !goal.is_finite() {
        return Err(GeomError::NonFinitePose);
    }
    let (s, c) = start.theta.sin_cos();
    let dx = goal.x - start.x;
    let dy = goal.y - start.y;
    let x = (c * dx + s * dy) / r_min;
    let y = (-s * dx + c * dy) / r_min;
    let phi = goal.theta - start.theta;

    let mut best: Option<(f64, Vec<(Steer, f64)>)> = None;
    for word in candidates(x, y, phi) {
        let pieces = simplify(&word);
        let len: f64 = pieces.iter().map(|p| p.1.abs()).sum();
        let better = match &best {
            None => true,
            Some((bl, bp)) => {
                if len < bl - TIE_EPS {
                    true
                } else if len <= bl + TIE_EPS {
                    (pieces.len(), reversals(&pieces)) < (bp.len(), reversals(bp))
                } else {
                    false
                }
            }
        };
        if better {
            best = Some((len, pieces));
        }
    }
    let Some((_, pieces)) = best else {
        return Err(GeomError::NoPath);
    };
    Ok(build_path(*start, &pieces, r_min))
}

fn build_path(start: Pose2D, pieces: &[(Steer, f64)], r_min: f64) -> RSPath {
    let mut segments = Vec::with_capacity(pieces.len());
    let mut pose = start;
    for &(steer, len) in pieces {
        let curvature = match steer {
            L => 1.0 / r_min,
            R => -1.0 / r_min,
            S => 0.0,
        };
        let direction = if len >= 0.0 {
            Direction::Forward
        } else {
            Direction::Reverse
        };
        let seg = PathSegment {
            steer,
            direction,
            length: len.abs() * r_min,
            curvature,
            start_pose: pose,
        };
        pose = seg.end_pose();
        segments.push(seg);
    }
    let total_length = segments.iter().map(|s| s.length).sum();
    RSPath {
        start,
        segments,
        total_length,
        r_min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_reaches(path: &RSPath, goal: &Pose2D) {
        let end = path.goal();
        assert!(end.distance_to(goal) < 1e-6, "end {end:?} goal {goal:?}");
        assert!(end.heading_error(goal) < 1e-6, "end {end:?} goal {goal:?}");
    }

    #[test]
    fn aligned_collinear_is_single_straight() {
        let goal = Pose2D::new(5.0, 0.0, 0.0);
        let p = plan_rs_path(&Pose2D::origin(), &goal, 6.0).unwrap();
        assert_eq!(p.segments.len(), 1);
        assert_eq!(p.segments[0].steer, Steer::Straight);
        assert_eq!(p.segments[0].direction, Direction::Forward);
        assert!((p.segments[0].length - 5.0).abs() < 1e-12);
        assert_reaches(&p, &goal);
    }

    #[test]
    fn identity_is_empty() {
        for r in [0.5, 1.0, 7.0] {
            let p = plan_rs_path(&Pose2D::origin(), &Pose2D::origin(), r).unwrap();
            assert!(p.segments.is_empty());
            assert_eq!(p.total_length, 0.0);
        }
    }

    #[test]
    fn straight_reverse() {
        let goal = Pose2D::new(-4.0, 0.0, 0.0);
        let p = plan_rs_path(&Pose2D::origin(), &goal, 7.0).unwrap();
        assert_eq!(p.segments.len(), 1);
        assert_eq!(p.segments[0].direction, Direction::Reverse);
        assert_reaches(&p, &goal);
    }

    /// Golden value from the brute-force word-family oracle in
    /// `tests/common/rs_oracle.rs` (see `oracle_turnaround_golden`).
    const TURN_IN_PLACE_UNIT: f64 = std::f64::consts::PI;

    #[test]
    fn turn_in_place_matches_oracle_golden() {
        let goal = Pose2D::new(0.0, 0.0, PI);
        let p = plan_rs_path(&Pose2D::origin(), &goal, 1.0).unwrap();
        assert!((p.total_length - TURN_IN_PLACE_UNIT).abs() < 1e-6, "{}", p.total_length);
        assert_reaches(&p, &goal);
    }

    #[test]
    fn invalid_radius() {
        let g = Pose2D::new(1.0, 1.0, 0.0);
        assert!(matches!(plan_rs_path(&Pose2D::origin(), &g, 0.0), Err(GeomError::InvalidRadius(_))));
        assert!(matches!(plan_rs_path(&Pose2D::origin(), &g, -2.0), Err(GeomError::InvalidRadius(_))));
    }

    #[test]
    fn segment_invariants_hold() {
        let start = Pose2D::new(3.0, -1.0, 0.4);
        let goal = Pose2D::new(-2.0, 4.0, -2.5);
        let p = plan_rs_path(&start, &goal, 2.0).unwrap();
        assert!(p.segments.len() <= 5);
        let sum: f64 = p.segments.iter().map(|s| s.length).sum();
        assert!((sum - p.total_length).abs() < 1e-9);
        for w in p.segments.windows(2) {
            let e = w[0].end_pose();
            assert!(e.distance_to(&w[1].start_pose) < 1e-9);
            assert!(e.heading_error(&w[1].start_pose) < 1e-9);
        }
        for seg in &p.segments {
            match seg.steer {
                Steer::Straight => assert_eq!(seg.curvature, 0.0),
                _ => assert_eq!(seg.curvature.abs(), 0.5),
            }
        }
        assert_reaches(&p, &goal);
    }
}
