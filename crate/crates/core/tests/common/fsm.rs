//! Declared mission state machine and exhaustive checks against it.

use std::collections::{BTreeSet, VecDeque};

use fleetsim_core::acs::{
    on_fault, on_message, Action, Agent, AgentEvent, AgentParams, EstimatorParams, EstimatorState, FaultKind,
    MessageKind, Mission, Mode, Outcome, RejectReason,
};
use fleetsim_core::geom::{plan_rs_path, Pose2D};
use fleetsim_core::proto::FmsMessage;
use fleetsim_core::world::VehicleSpec;

use Mode::*;

/// Accepted transitions with no fault present; every other pair is rejected.
pub const ACCEPTED: [(Mode, MessageKind, Mode); 8] = [
    (Idle, MessageKind::AssignMission, Executing),
    (Executing, MessageKind::Pause, PausedRecoverable),
    (PausedRecoverable, MessageKind::Resume, Executing),
    (Idle, MessageKind::RemoteStop, StoppedNonRecoverable),
    (Executing, MessageKind::RemoteStop, StoppedNonRecoverable),
    (PausedRecoverable, MessageKind::RemoteStop, StoppedNonRecoverable),
    (StoppedNonRecoverable, MessageKind::RemoteStop, StoppedNonRecoverable),
    (StoppedNonRecoverable, MessageKind::Restart, Idle),
];

pub fn declared(mode: Mode, msg: MessageKind, fault: Option<FaultKind>) -> Outcome {
    if let Some(&(_, _, to)) = ACCEPTED.iter().find(|(m, k, _)| *m == mode && *k == msg) {
        if mode == PausedRecoverable && msg == MessageKind::Resume && fault.is_some() {
            return Outcome::Rejected(RejectReason::FaultActive);
        }
        return Outcome::Accepted(to);
    }
    if mode == StoppedNonRecoverable {
        Outcome::Rejected(RejectReason::Latched)
    } else {
        Outcome::Rejected(RejectReason::InvalidInMode)
    }
}

pub fn declared_fault(mode: Mode, fault: FaultKind) -> Mode {
    match (mode, fault) {
        (_, FaultKind::HardwareFailure | FaultKind::LocalizationDivergence) => StoppedNonRecoverable,
        (Executing, _) => PausedRecoverable,
        (m, _) => m,
    }
}

fn faults() -> Vec<Option<FaultKind>> {
    std::iter::once(None).chain(FaultKind::ALL.map(Some)).collect()
}

/// Mismatches between the transition functions and the declared table.
pub fn table_mismatches() -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut bad = Vec::new();
    for mode in Mode::ALL {
        for msg in MessageKind::ALL {
            for fault in faults() {
                checked += 1;
                let (got, want) = (on_message(mode, msg, fault), declared(mode, msg, fault));
                if got != want {
                    bad.push(format!("{mode:?} {msg:?} {fault:?}: got {got:?}, declared {want:?}"));
                }
            }
        }
        for fault in FaultKind::ALL {
            checked += 1;
            let (got, want) = (on_fault(mode, fault), declared_fault(mode, fault));
            if got != want {
                bad.push(format!("{mode:?} fault {fault:?}: got {got:?}, declared {want:?}"));
            }
        }
    }
    (checked, bad)
}

fn mission() -> Mission {
    let path = plan_rs_path(&Pose2D::origin(), &Pose2D::new(10.0, 0.0, 0.0), 4.0).unwrap();
    Mission::new(
        "m",
        vec![Action::FollowPath {
            path,
            cruise_speed: 1.0,
        }],
    )
}

fn agent() -> Agent {
    let p = EstimatorParams::default();
    let est = EstimatorState::new(Pose2D::origin(), 0.0, p.initial_covariance(), 0.0);
    Agent::new("cc1", VehicleSpec::default(), AgentParams::default(), p, est, 0.0)
}

fn message(kind: MessageKind) -> FmsMessage {
    match kind {
        MessageKind::AssignMission => FmsMessage::AssignMission(mission()),
        MessageKind::Pause => FmsMessage::Pause,
        MessageKind::Resume => FmsMessage::Resume,
        MessageKind::RemoteStop => FmsMessage::RemoteStop,
        MessageKind::Restart => FmsMessage::Restart,
    }
}

/// Agents in every reachable (mode, fault) combination.
fn reachable() -> Vec<Agent> {
    let idle = agent();
    let mut executing = idle.clone();
    executing.handle_message(0.0, message(MessageKind::AssignMission));
    let mut paused = executing.clone();
    paused.handle_message(0.0, FmsMessage::Pause);
    let mut stopped = executing.clone();
    stopped.handle_message(0.0, FmsMessage::RemoteStop);
    let mut out = Vec::new();
    for base in [idle, executing, paused, stopped] {
        for fault in faults() {
            let mut a = base.clone();
            if let Some(f) = fault {
                a.inject_fault(0.0, f);
            }
            a.take_events();
            out.push(a);
        }
    }
    out
}

/// Delivers every message to every reachable agent state and compares the
/// resulting mode and events with the declared table.
pub fn agent_mismatches() -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut bad = Vec::new();
    for base in reachable() {
        for msg in MessageKind::ALL {
            checked += 1;
            let mut a = base.clone();
            let (mode, fault) = (a.mode(), a.fault());
            // a delivered message is itself proof that the link is up
            let effective = fault.filter(|f| *f != FaultKind::ConnectionLoss);
            a.handle_message(1.0, message(msg));
            let events = a.take_events();
            let rejected = events.iter().any(|(_, e)| matches!(e, AgentEvent::Rejected { .. }));
            let ok = match declared(mode, msg, effective) {
                Outcome::Accepted(to) => a.mode() == to && !rejected,
                Outcome::Rejected(reason) => {
                    a.mode() == mode
                        && events
                            .iter()
                            .any(|(_, e)| matches!(e, AgentEvent::Rejected { reason: r, .. } if *r == reason))
                }
            };
            if !ok {
                bad.push(format!("{mode:?}/{fault:?} + {msg:?} -> {:?} events {events:?}", a.mode()));
            }
        }
    }
    (checked, bad)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Input {
    Message(MessageKind),
    Fault(FaultKind),
}

/// Labels of every edge that leaves StoppedNonRecoverable, found by a
/// breadth-first walk over all agent states reachable from Idle.
pub fn stopped_exits() -> (usize, BTreeSet<String>) {
    let inputs: Vec<Input> = MessageKind::ALL
        .into_iter()
        .map(Input::Message)
        .chain(FaultKind::ALL.into_iter().map(Input::Fault))
        .collect();
    let key = |a: &Agent| (a.mode(), a.fault(), a.mission().is_some());
    let mut seen = BTreeSet::new();
    let mut exits = BTreeSet::new();
    let mut queue = VecDeque::from([agent()]);
    seen.insert(key(&queue[0]));
    while let Some(a) = queue.pop_front() {
        for &input in &inputs {
            let mut b = a.clone();
            match input {
                Input::Message(m) => b.handle_message(1.0, message(m)),
                Input::Fault(f) => b.inject_fault(1.0, f),
            }
            if a.mode() == StoppedNonRecoverable && b.mode() != StoppedNonRecoverable {
                exits.insert(format!("{input:?}"));
            }
            if seen.insert(key(&b)) {
                queue.push_back(b);
            }
        }
    }
    (seen.len(), exits)
}
