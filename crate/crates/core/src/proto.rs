//! Messages exchanged between the fleet manager and the vehicles.

use serde::{Deserialize, Serialize};

use crate::acs::{FaultKind, MessageKind, Mission, Mode};
use crate::geom::Pose2D;

/// Downlink: fleet manager to one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum FmsMessage {
    AssignMission(Mission),
    Pause,
    Resume,
    RemoteStop,
    Restart,
    /// Replaces the running mission at the next action boundary.
    Transition(Mission),
    /// Liveness probe; answered with a status report.
    Ping,
}

impl FmsMessage {
    pub fn kind(&self) -> Option<MessageKind> {
        Some(match self {
            FmsMessage::AssignMission(_) => MessageKind::AssignMission,
            FmsMessage::Pause => MessageKind::Pause,
            FmsMessage::Resume => MessageKind::Resume,
            FmsMessage::RemoteStop => MessageKind::RemoteStop,
            FmsMessage::Restart => MessageKind::Restart,
            FmsMessage::Transition(_) | FmsMessage::Ping => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FmsMessage::AssignMission(_) => "assign_mission",
            FmsMessage::Pause => "pause",
            FmsMessage::Resume => "resume",
            FmsMessage::RemoteStop => "remote_stop",
            FmsMessage::Restart => "restart",
            FmsMessage::Transition(_) => "transition",
            FmsMessage::Ping => "ping",
        }
    }
}

/// Heartbeat payload reported by a vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStatus {
    pub vehicle: String,
    pub stamp: f64,
    pub mode: Mode,
    pub fault: Option<FaultKind>,
    pub pose: Pose2D,
    pub speed: f64,
    /// Estimated ground velocity.
    pub velocity: (f64, f64),
    /// Velocity the vehicle would hold along its path if allowed to drive.
    pub intent: (f64, f64),
    pub upper_angle: f64,
    pub mission_id: Option<String>,
    pub action_index: usize,
    pub mission_complete: bool,
    /// Recoverable fault that paused the vehicle and needs an operator resume.
    pub held_by_fault: Option<FaultKind>,
    pub position_trace: f64,
}

/// Uplink: vehicles and personnel tags to the fleet manager.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum Uplink {
    Status(AgentStatus),
    PersonFix { person: String, stamp: f64, x: f64, y: f64 },
}

/// Operator-facing commands accepted by the fleet manager.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorCommand {
    DefineWorkflow {
        workflow: crate::fms::Workflow,
    },
    StartMission {
        workflow: String,
    },
    /// Pauses one vehicle, or every vehicle when `vehicle` is absent.
    Pause {
        #[serde(default)]
        vehicle: Option<String>,
    },
    Resume {
        vehicle: String,
    },
    Restart {
        vehicle: String,
    },
    RemoteStop {
        #[serde(default)]
        vehicle: Option<String>,
    },
    /// Switches a running vehicle onto another workflow's route.
    TransitionRoute {
        vehicle: String,
        workflow: String,
    },
}

impl OperatorCommand {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorCommand::DefineWorkflow { .. } => "define_workflow",
            OperatorCommand::StartMission { .. } => "start_mission",
            OperatorCommand::Pause { .. } => "pause",
            OperatorCommand::Resume { .. } => "resume",
            OperatorCommand::Restart { .. } => "restart",
            OperatorCommand::RemoteStop { .. } => "remote_stop",
            OperatorCommand::TransitionRoute { .. } => "transition_route",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum CommandResult {
    Ack,
    Rejected { reason: String },
}
