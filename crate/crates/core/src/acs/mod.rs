//! On-board autonomous control: mission state machine, localization and
//! motion control.

mod agent;
mod control;
mod ekf;
mod faults;
mod fsm;
mod mission;

pub use agent::{Agent, AgentEvent, AgentParams, Telemetry};
pub use control::{
    longitudinal_control, lookahead_point, pure_pursuit, ramp_speed, upper_body_pid, ControlParams, Longitudinal,
    PidGains, PidState,
};
pub use ekf::{EstimatorParams, EstimatorState, GnssOutcome};
pub use faults::{detect_faults, FaultParams};
pub use fsm::{on_fault, on_message, FaultKind, MessageKind, Mode, Outcome, RejectReason};
pub use mission::{Action, Mission};
