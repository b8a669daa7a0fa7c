//! Fleet manager: workflow compilation, interference and intrusion
//! supervision, heartbeat monitoring and command dispatch.

mod interference;
mod reactor;
mod supervise;
mod workflow;
mod zone;

use serde::{Deserialize, Serialize};

pub use interference::{
    check_interference, choose_yielder, first_conflict, Conflict, Contender, SafetyCircle, Track, YieldRule,
    PREDICTION_STEP,
};
pub use reactor::{AgentRecord, Fms, FmsEvent, Hold, Outgoing, PersonTrack, VehicleInfo, ZoneState};
pub use supervise::{check_zone_intrusion, dispatch, supervise_heartbeats};
pub use workflow::{compile_route, compile_workflow, Route, Waypoint, Workflow, ZONE_CHECK_STEP};
pub use zone::{Zone, ZoneKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FmsError {
    #[error("planning failed for {vehicle} leg {leg}: {reason}")]
    PlanningFailed { vehicle: String, leg: usize, reason: String },
    #[error("path for {vehicle} leg {leg} leaves the permitted zones at s = {s:.2} m")]
    ZoneViolation { vehicle: String, leg: usize, s: f64 },
    #[error("unknown zone {0}")]
    UnknownZone(String),
    #[error("unknown vehicle {0}")]
    UnknownVehicle(String),
    #[error("invalid workflow {workflow}: {reason}")]
    InvalidWorkflow { workflow: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FmsParams {
    pub heartbeat_period: f64,
    pub heartbeat_timeout: f64,
    pub safety_margin: f64,
    pub person_radius: f64,
    pub horizon: f64,
    /// Conflict-free time before an interference pause is lifted.
    pub interference_clear_hold: f64,
    /// Intruder-free time before a zone is declared clear.
    pub intrusion_clear_hold: f64,
    /// How far ahead person positions are extrapolated for zone checks.
    pub intrusion_lookahead: f64,
    /// Minimum interval between repeats of an unconfirmed pause or resume.
    pub command_retry: f64,
    /// Reaction time assumed when predicting where a vehicle comes to rest.
    pub stop_latency: f64,
    /// Deceleration assumed when predicting where a vehicle comes to rest.
    pub assumed_decel: f64,
}

impl Default for FmsParams {
    fn default() -> Self {
        Self {
            heartbeat_period: 0.2,
            heartbeat_timeout: 1.0,
            safety_margin: 1.0,
            person_radius: 0.5,
            horizon: 5.0,
            interference_clear_hold: 1.0,
            intrusion_clear_hold: 2.0,
            intrusion_lookahead: 1.0,
            command_retry: 0.5,
            stop_latency: 0.5,
            assumed_decel: 2.0,
        }
    }
}

impl FmsParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("heartbeat_period", self.heartbeat_period),
            ("heartbeat_timeout", self.heartbeat_timeout),
            ("person_radius", self.person_radius),
            ("command_retry", self.command_retry),
            ("assumed_decel", self.assumed_decel),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive"));
            }
        }
        let non_negative = [
            ("safety_margin", self.safety_margin),
            ("horizon", self.horizon),
            ("interference_clear_hold", self.interference_clear_hold),
            ("intrusion_clear_hold", self.intrusion_clear_hold),
            ("intrusion_lookahead", self.intrusion_lookahead),
            ("stop_latency", self.stop_latency),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) {
                return Err(format!("{name} must be non-negative"));
            }
        }
        Ok(())
    }
}
