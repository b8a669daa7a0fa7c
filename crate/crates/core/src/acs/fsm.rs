use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Idle,
    Executing,
    PausedRecoverable,
    StoppedNonRecoverable,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::Idle,
        Mode::Executing,
        Mode::PausedRecoverable,
        Mode::StoppedNonRecoverable,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    ConnectionLoss,
    SensorTimeout,
    LocalizationDivergence,
    HardwareFailure,
}

impl FaultKind {
    pub const ALL: [FaultKind; 4] = [
        FaultKind::ConnectionLoss,
        FaultKind::SensorTimeout,
        FaultKind::LocalizationDivergence,
        FaultKind::HardwareFailure,
    ];

    pub fn recoverable(self) -> bool {
        matches!(self, FaultKind::ConnectionLoss | FaultKind::SensorTimeout)
    }

    /// Recoverable faults that clear without operator involvement.
    pub fn auto_resume(self) -> bool {
        matches!(self, FaultKind::SensorTimeout)
    }
}

/// Message kinds the mission planner reacts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    AssignMission,
    Pause,
    Resume,
    RemoteStop,
    Restart,
}

impl MessageKind {
    pub const ALL: [MessageKind; 5] = [
        MessageKind::AssignMission,
        MessageKind::Pause,
        MessageKind::Resume,
        MessageKind::RemoteStop,
        MessageKind::Restart,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Latched,
    InvalidInMode,
    FaultActive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accepted(Mode),
    Rejected(RejectReason),
}

/// Reaction to an operator or FMS message given the currently active fault.
pub fn on_message(mode: Mode, msg: MessageKind, active_fault: Option<FaultKind>) -> Outcome {
    use MessageKind::*;
    use Mode::*;
    match (mode, msg) {
        (_, RemoteStop) => Outcome::Accepted(StoppedNonRecoverable),
        (StoppedNonRecoverable, Restart) => Outcome::Accepted(Idle),
        (StoppedNonRecoverable, _) => Outcome::Rejected(RejectReason::Latched),
        (Idle, AssignMission) => Outcome::Accepted(Executing),
        (Executing, Pause) => Outcome::Accepted(PausedRecoverable),
        (PausedRecoverable, Resume) => match active_fault {
            Some(_) => Outcome::Rejected(RejectReason::FaultActive),
            None => Outcome::Accepted(Executing),
        },
        _ => Outcome::Rejected(RejectReason::InvalidInMode),
    }
}

/// Mode after a fault is raised.
pub fn on_fault(mode: Mode, fault: FaultKind) -> Mode {
    match (mode, fault.recoverable()) {
        (Mode::StoppedNonRecoverable, _) => Mode::StoppedNonRecoverable,
        (_, false) => Mode::StoppedNonRecoverable,
        (Mode::Executing, true) => Mode::PausedRecoverable,
        (m, true) => m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pause_keeps_recoverable() {
        assert_eq!(
            on_message(Mode::Executing, MessageKind::Pause, None),
            Outcome::Accepted(Mode::PausedRecoverable)
        );
    }

    #[test]
    fn stopped_rejects_resume() {
        assert_eq!(
            on_message(Mode::StoppedNonRecoverable, MessageKind::Resume, None),
            Outcome::Rejected(RejectReason::Latched)
        );
    }

    #[test]
    fn hardware_failure_latches() {
        for m in Mode::ALL {
            assert_eq!(on_fault(m, FaultKind::HardwareFailure), Mode::StoppedNonRecoverable);
        }
        assert_eq!(on_fault(Mode::Executing, FaultKind::ConnectionLoss), Mode::PausedRecoverable);
    }
}
