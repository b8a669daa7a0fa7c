use std::collections::VecDeque;

use super::reactor::AgentRecord;
use super::zone::{Zone, ZoneKind};
use crate::proto::FmsMessage;

/// Latches every agent whose last heartbeat is older than `timeout`;
/// returns the ids latched by this call.
pub fn supervise_heartbeats(records: &mut [AgentRecord], now: f64, timeout: f64) -> Vec<String> {
    let mut latched = Vec::new();
    for r in records.iter_mut() {
        if !r.stop_latched && now - r.last_heartbeat > timeout {
            r.stop_latched = true;
            latched.push(r.id.clone());
        }
    }
    latched
}

/// `(zone, intruder)` pairs for positions strictly inside operational zones.
pub fn check_zone_intrusion(zones: &[&Zone], positions: &[(String, (f64, f64))]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for z in zones.iter().filter(|z| z.kind == ZoneKind::Operational) {
        for (id, (x, y)) in positions {
            if z.contains_strict(*x, *y) {
                out.push((z.id.clone(), id.clone()));
            }
        }
    }
    out
}

/// Drains one agent's queue in send order; a remote stop jumps the queue and
/// is flagged for the stop radio as well. Repeated stops collapse into one.
pub fn dispatch(queue: &mut VecDeque<FmsMessage>) -> Vec<(FmsMessage, bool)> {
    let mut out = Vec::with_capacity(queue.len());
    if queue.iter().any(|m| *m == FmsMessage::RemoteStop) {
        out.push((FmsMessage::RemoteStop, true));
    }
    out.extend(
        queue
            .drain(..)
            .filter(|m| *m != FmsMessage::RemoteStop)
            .map(|m| (m, false)),
    );
    out
}
