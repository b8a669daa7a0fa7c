//! Read-only view of a running simulation, pushed to console clients.

use serde::{Deserialize, Serialize};

use crate::acs::{FaultKind, Mode};
use crate::fms::{Hold, SafetyCircle, YieldRule, ZoneKind};
use crate::geom::Pose2D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSnapshot {
    pub id: String,
    pub mode: Mode,
    pub fault: Option<FaultKind>,
    pub latched: bool,
    pub holds: Vec<Hold>,
    /// Ground-truth pose.
    pub pose: Pose2D,
    /// On-board estimate.
    pub estimate: Pose2D,
    pub speed: f64,
    pub upper_angle: f64,
    pub workflow: Option<String>,
    pub mission_id: Option<String>,
    pub action_index: usize,
    /// Remaining planned path, sampled every half metre.
    pub path: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonSnapshot {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSnapshot {
    pub id: String,
    pub kind: ZoneKind,
    pub polygon: Vec<(f64, f64)>,
    pub intruded: bool,
    pub intruders: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictSnapshot {
    pub a: String,
    pub b: String,
    pub yielder: String,
    pub rule: YieldRule,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub time: f64,
    pub vehicle: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub sim_time: f64,
    pub tick: u64,
    pub finished: bool,
    pub vehicles: Vec<VehicleSnapshot>,
    pub persons: Vec<PersonSnapshot>,
    pub circles: Vec<SafetyCircle>,
    pub zones: Vec<ZoneSnapshot>,
    pub conflicts: Vec<ConflictSnapshot>,
    pub alerts: Vec<Alert>,
    pub workflows: Vec<String>,
}
