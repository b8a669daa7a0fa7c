use serde::{Deserialize, Serialize};

use crate::par;
use crate::world::ActorKind;

/// Prediction sampling interval.
pub const PREDICTION_STEP: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyCircle {
    pub actor_id: String,
    pub center: (f64, f64),
    pub radius: f64,
}

impl SafetyCircle {
    pub fn overlaps(&self, other: &SafetyCircle) -> bool {
        let d = (self.center.0 - other.center.0).hypot(self.center.1 - other.center.1);
        d < self.radius + other.radius
    }
}

/// A circle moving at constant velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub circle: SafetyCircle,
    pub velocity: (f64, f64),
}

impl Track {
    pub fn at(&self, t: f64) -> (f64, f64) {
        (
            self.circle.center.0 + self.velocity.0 * t,
            self.circle.center.1 + self.velocity.1 * t,
        )
    }

    pub fn stationary(&self) -> Track {
        Track {
            circle: self.circle.clone(),
            velocity: (0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub a: String,
    pub b: String,
    /// First predicted sample time with overlapping circles.
    pub time: f64,
}

/// Earliest sample `k * step <= horizon` at which the two circles overlap.
pub fn first_conflict(a: &Track, b: &Track, horizon: f64, step: f64) -> Option<f64> {
    let reach = a.circle.radius + b.circle.radius;
    let n = if horizon > 0.0 { (horizon / step + 1e-9).floor() as usize } else { 0 };
    (0..=n).map(|k| k as f64 * step).find(|&t| {
        let (ax, ay) = a.at(t);
        let (bx, by) = b.at(t);
        (ax - bx).hypot(ay - by) < reach
    })
}

/// All conflicting pairs in `(i, j)` index order.
pub fn check_interference(tracks: &[Track], horizon: f64, step: f64) -> Vec<Conflict> {
    let pairs: Vec<(usize, usize)> = (0..tracks.len())
        .flat_map(|i| (i + 1..tracks.len()).map(move |j| (i, j)))
        .collect();
    par::map(&pairs, |&(i, j)| {
        first_conflict(&tracks[i], &tracks[j], horizon, step).map(|time| Conflict {
            a: tracks[i].circle.actor_id.clone(),
            b: tracks[j].circle.actor_id.clone(),
            time,
        })
    })
    .into_iter()
    .flatten()
    .collect()
}

/// What the resolver knows about one side of a conflict.
#[derive(Debug, Clone, PartialEq)]
pub struct Contender {
    pub id: String,
    pub kind: ActorKind,
    /// Intends to move (executing, or held only by an interference pause).
    pub mobile: bool,
    pub mission_start: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YieldRule {
    /// Vehicles always give way to personnel.
    Person,
    /// A moving vehicle gives way to one that is standing.
    Parked,
    /// The later mission gives way.
    MissionOrder,
    /// Equal mission start: the larger id gives way.
    IdOrder,
    /// The side with priority would drive into the other once stopped, so
    /// it waits instead.
    Blocked,
}

/// Index (0 or 1) of the side that must hold, or `None` when nobody can.
pub fn choose_yielder(a: &Contender, b: &Contender) -> Option<(usize, YieldRule)> {
    use ActorKind::*;
    match (a.kind, b.kind) {
        (Person, Person) => None,
        (Vehicle, Person) => a.mobile.then_some((0, YieldRule::Person)),
        (Person, Vehicle) => b.mobile.then_some((1, YieldRule::Person)),
        (Vehicle, Vehicle) => match (a.mobile, b.mobile) {
            (false, false) => None,
            (true, false) => Some((0, YieldRule::Parked)),
            (false, true) => Some((1, YieldRule::Parked)),
            (true, true) => {
                if a.mission_start != b.mission_start {
                    let later = if a.mission_start > b.mission_start { 0 } else { 1 };
                    Some((later, YieldRule::MissionOrder))
                } else {
                    Some((if a.id > b.id { 0 } else { 1 }, YieldRule::IdOrder))
                }
            }
        },
    }
}
