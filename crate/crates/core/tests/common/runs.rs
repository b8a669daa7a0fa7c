//! End-to-end checks on seeded scenario families, computed from the world
//! truth and the event log rather than from the engine's own monitor.

use fleetsim_core::acs::Mode;
use fleetsim_core::engine::{LogOptions, Sim};
use fleetsim_core::fms::Zone;
use fleetsim_core::log::{replay, Record};
use fleetsim_core::scenario::ScenarioConfig;
use serde_json::Value;

pub const STOP_WITHIN: f64 = 2.0;

fn text<'a>(r: &'a Record, key: &str) -> &'a str {
    r.payload.get(key).and_then(Value::as_str).unwrap_or("")
}

/// Final distance from every vehicle to the last waypoint of its route.
pub fn stopping_error(cfg: &ScenarioConfig) -> f64 {
    let mut sim = Sim::new(cfg, cfg.seed, LogOptions::none()).unwrap();
    sim.run().unwrap();
    let mut worst: f64 = 0.0;
    for wf in &cfg.workflows {
        for route in &wf.routes {
            let goal = route.waypoints.last().unwrap();
            let p = sim.world().vehicle(&route.vehicle).unwrap().state.pose;
            worst = worst.max((p.x - goal.x).hypot(p.y - goal.y));
        }
    }
    worst
}

#[derive(Debug, Default)]
pub struct Crossing {
    /// Smallest clearance between safety circles while both vehicles execute.
    pub min_clearance: f64,
    pub conflicts: usize,
    /// Conflict entries whose yielder is missing or not one of the pair.
    pub unnamed: usize,
    pub completed: bool,
}

pub fn crossing(cfg: &ScenarioConfig) -> Crossing {
    let mut sim = Sim::new(cfg, cfg.seed, LogOptions::in_memory()).unwrap();
    let margin = cfg.fms.safety_margin;
    let mut out = Crossing {
        min_clearance: f64::INFINITY,
        ..Default::default()
    };
    while !sim.finished() {
        sim.step().unwrap();
        let (a, b) = (&sim.world().vehicles()[0], &sim.world().vehicles()[1]);
        if sim.agents().iter().all(|g| g.mode() == Mode::Executing) {
            let ra = a.spec.footprint_radius + margin;
            let rb = b.spec.footprint_radius + margin;
            let clearance = a.state.pose.distance_to(&b.state.pose) - ra - rb;
            out.min_clearance = out.min_clearance.min(clearance);
        }
    }
    out.completed = sim.fms().records().iter().all(|r| r.run.as_ref().is_some_and(|x| x.finished));
    for r in sim.log().records().iter().filter(|r| r.kind == "conflict_detected") {
        out.conflicts += 1;
        let y = text(r, "yielder");
        if y.is_empty() || (y != text(r, "a") && y != text(r, "b")) {
            out.unnamed += 1;
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct Outage {
    /// Vehicles whose heartbeat went silent for longer than the timeout.
    pub silent: usize,
    pub latches: usize,
    /// Largest delay from timeout expiry to the latch.
    pub worst_latch_delay: f64,
    /// Latches issued before any timeout expired.
    pub early_latches: usize,
    /// RemoteStop messages queued on the main channel.
    pub remote_stops_sent: usize,
    pub stop_deliveries: usize,
    /// Largest time from stop delivery to standstill.
    pub worst_halt: f64,
    pub unhalted: usize,
    /// Vehicles not latched and at rest at the end.
    pub still_moving: usize,
}

/// Heartbeat supervision and remote-stop outcomes of one outage run.
pub fn outage(cfg: &ScenarioConfig) -> Outage {
    let mut sim = Sim::new(cfg, cfg.seed, LogOptions::in_memory()).unwrap();
    sim.run().unwrap();
    let timeout = cfg.fms.heartbeat_timeout;
    let recs = sim.log().records();
    let end = sim.time();
    let mut out = Outage::default();
    for v in &cfg.vehicles {
        let beats: Vec<f64> = recs
            .iter()
            .filter(|r| r.kind == "delivered" && text(r, "link") == v.id && text(r, "message") == "status")
            .map(|r| r.sim_time)
            .collect();
        let latch = recs
            .iter()
            .find(|r| r.kind == "stop_latched" && text(r, "vehicle") == v.id && text(r, "cause") == "heartbeat_lost")
            .map(|r| r.sim_time);
        // the heartbeat clock starts with the run
        let mut last = 0.0;
        let mut expiry = None;
        for &t in beats.iter().chain(std::iter::once(&end)) {
            if t - last > timeout + cfg.timestep {
                expiry = Some(last + timeout);
                break;
            }
            last = t;
        }
        match (expiry, latch) {
            (Some(e), Some(t)) => {
                out.silent += 1;
                out.latches += 1;
                out.worst_latch_delay = out.worst_latch_delay.max(t - e);
                if t < e {
                    out.early_latches += 1;
                }
            }
            (Some(_), None) => {
                out.silent += 1;
                out.worst_latch_delay = f64::INFINITY;
            }
            (None, Some(_)) => {
                out.latches += 1;
                out.early_latches += 1;
            }
            (None, None) => {}
        }
        out.remote_stops_sent += recs
            .iter()
            .filter(|r| {
                (r.kind == "sent" || r.kind == "dropped") && text(r, "vehicle") == v.id && text(r, "message") == "remote_stop"
            })
            .count();
        let body = sim.world().vehicle(&v.id).unwrap();
        let agent = sim.agents().iter().find(|a| a.id() == v.id).unwrap();
        if !(agent.latched() && body.state.v.abs() < 1e-6) {
            out.still_moving += 1;
        }
    }
    for r in recs.iter().filter(|r| r.kind == "stop_delivered") {
        out.stop_deliveries += 1;
        let v = text(r, "vehicle");
        let halted = recs
            .iter()
            .find(|h| h.kind == "vehicle_halted" && text(h, "vehicle") == v && h.sim_time >= r.sim_time);
        match halted {
            Some(h) => out.worst_halt = out.worst_halt.max(h.sim_time - r.sim_time),
            None => out.unhalted += 1,
        }
    }
    out
}

/// Time a straight walk from `a` to `b` over `[t0, t1]` first enters the
/// interior of a convex polygon, by Cyrus-Beck clipping.
pub fn entry_time(zone: &Zone, a: (f64, f64), b: (f64, f64), t0: f64, t1: f64) -> Option<f64> {
    let poly = &zone.polygon;
    let n = poly.len();
    let ccw = {
        let area: f64 = (0..n)
            .map(|i| {
                let (p, q) = (poly[i], poly[(i + 1) % n]);
                p.0 * q.1 - q.0 * p.1
            })
            .sum();
        area > 0.0
    };
    let d = (b.0 - a.0, b.1 - a.1);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let e = (q.0 - p.0, q.1 - p.1);
        // inward normal
        let nrm = if ccw { (-e.1, e.0) } else { (e.1, -e.0) };
        let num = nrm.0 * (a.0 - p.0) + nrm.1 * (a.1 - p.1);
        let den = nrm.0 * d.0 + nrm.1 * d.1;
        if den.abs() < 1e-15 {
            if num < 0.0 {
                return None;
            }
            continue;
        }
        let t = -num / den;
        if den > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
    }
    (lo < hi).then_some(t0 + lo * (t1 - t0))
}

#[derive(Debug, Default)]
pub struct Intrusion {
    pub entry: Option<f64>,
    /// How long before the entry-plus-one-tick deadline every assigned
    /// vehicle had stopped executing; negative or missing means late.
    pub pause_margin: Option<f64>,
    /// Ticks on which an assigned vehicle executed while the intrusion was
    /// unresolved.
    pub executing_ticks: usize,
    pub detected: bool,
}

pub fn intrusion(cfg: &ScenarioConfig, zone_id: &str) -> Intrusion {
    let zone = cfg.zones.iter().find(|z| z.id == zone_id).unwrap().clone();
    let script = &cfg.persons[0].script;
    let (s0, s1) = (&script[0], &script[1]);
    let entry = entry_time(&zone, (s0.x, s0.y), (s1.x, s1.y), s0.t, s1.t);
    let assigned: Vec<usize> = cfg
        .vehicles
        .iter()
        .enumerate()
        .filter(|(_, v)| {
            cfg.workflows
                .iter()
                .any(|w| w.zones.iter().any(|z| z == zone_id) && w.routes.iter().any(|r| r.vehicle == v.id))
        })
        .map(|(i, _)| i)
        .collect();
    let mut sim = Sim::new(cfg, cfg.seed, LogOptions::none()).unwrap();
    let deadline = entry.map(|e| e + cfg.timestep);
    let mut out = Intrusion {
        entry,
        ..Default::default()
    };
    let mut since: Option<f64> = None;
    let mut unresolved = false;
    while !sim.finished() {
        sim.step().unwrap();
        let now = sim.time();
        let intruded = sim.fms().zone_states().get(zone_id).is_some_and(|s| s.intruded);
        out.detected |= intruded;
        let executing = assigned.iter().filter(|&&i| sim.agents()[i].mode() == Mode::Executing).count();
        if let Some(d) = deadline {
            if out.pause_margin.is_none() {
                since = if executing == 0 { since.or(Some(now)) } else { None };
                if now >= d - 1e-9 {
                    out.pause_margin = since.map(|t| d - t);
                }
            }
            unresolved = now >= d - 1e-9 && (intruded || !out.detected);
        }
        if unresolved {
            out.executing_ticks += executing;
        }
    }
    out
}

/// Runs a scenario twice; returns whether the serialized logs are identical
/// and whether replaying the log reproduces the recorded digest.
pub fn determinism(cfg: &ScenarioConfig) -> (bool, bool) {
    let run = || {
        let mut sim = Sim::new(cfg, cfg.seed, LogOptions::in_memory()).unwrap();
        sim.run().unwrap();
        let (_, log) = sim.finish().unwrap();
        log.lines().join("\n") + "\n"
    };
    let (a, b) = (run(), run());
    let replayed = replay(a.as_bytes()).map(|r| r.matches()).unwrap_or(false);
    (a == b, replayed)
}
