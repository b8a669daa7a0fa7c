//! Messages on the live console connection. Every frame is a JSON text
//! message `{"type": ..., "payload": ...}`.

use serde::{Deserialize, Serialize};

use fleetsim_core::proto::OperatorCommand;
use fleetsim_core::snapshot::Snapshot;

/// An operator command as sent by a console.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandRequest {
    /// Echoed back in the matching ack or rejection.
    pub id: String,
    pub operator: String,
    pub command: OperatorCommand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum ClientMessage {
    Command(CommandRequest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub scenario: String,
    pub seed: u64,
    pub timestep: f64,
    pub speed: f64,
    pub snapshot_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: String,
}

/// Reply to a frame that could not be understood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolError {
    pub reason: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello(Hello),
    Snapshot(Box<Snapshot>),
    Ack(Ack),
    Rejected(Rejection),
    Error(ProtocolError),
}

impl ServerMessage {
    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("server message serializes")
    }
}

/// Parses one client frame, mapping failures to a protocol error.
pub fn parse_client(text: &str) -> Result<ClientMessage, ProtocolError> {
    serde_json::from_str(text).map_err(|e| ProtocolError {
        reason: "malformed".into(),
        detail: e.to_string(),
    })
}
