//! Seeded scenario generators used by the CI suites and benchmarks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fms::{FmsParams, Route, Waypoint, Workflow, Zone, ZoneKind};
use crate::geom::Pose2D;
use crate::net::{ChannelConfig, StopTarget};
use crate::proto::OperatorCommand;
use crate::scenario::{PersonConfig, ScenarioConfig, ScriptedAction, ScriptedEvent, VehicleConfig};
use crate::world::{SensorConfig, TimedPoint, VehicleSpec, Window};

fn rng(family: u64, seed: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(family);
    r
}

fn square(id: &str, half: f64) -> Zone {
    Zone::new(
        id,
        vec![(-half, -half), (half, -half), (half, half), (-half, half)],
        ZoneKind::Operational,
    )
}

fn waypoint(p: Pose2D) -> Waypoint {
    Waypoint {
        x: p.x,
        y: p.y,
        theta: p.theta,
        rotate_upper: None,
        dwell: None,
    }
}

fn vehicle(id: &str, pose: Pose2D, payload: f64) -> VehicleConfig {
    VehicleConfig {
        id: id.into(),
        pose,
        payload,
        upper_angle: 0.0,
        spec: VehicleSpec::default(),
    }
}

fn workflow(id: &str, zone: &str, cruise: f64, routes: Vec<(&str, Vec<Pose2D>)>, autostart: bool) -> Workflow {
    Workflow {
        id: id.into(),
        routes: routes
            .into_iter()
            .map(|(v, ps)| Route {
                vehicle: v.into(),
                waypoints: ps.into_iter().map(waypoint).collect(),
            })
            .collect(),
        zones: vec![zone.into()],
        cruise_speed: cruise,
        looping: false,
        autostart,
    }
}

fn base(name: String, seed: u64, duration: f64) -> ScenarioConfig {
    ScenarioConfig {
        name,
        seed,
        timestep: 0.02,
        duration,
        end_when_idle: true,
        vehicles: Vec::new(),
        persons: Vec::new(),
        zones: Vec::new(),
        workflows: Vec::new(),
        events: Vec::new(),
        network: ChannelConfig::default(),
        sensors: SensorConfig::default(),
        fms: FmsParams::default(),
        agent: Default::default(),
        estimator: None,
        telemetry_period: 0.1,
    }
}

/// One vehicle driving to a random goal (possibly with reversals) under
/// varied payload, speed and GNSS noise.
pub fn stopping(seed: u64) -> ScenarioConfig {
    let mut r = rng(1, seed);
    let mut c = base(format!("stopping-{seed}"), seed, 240.0);
    let d = r.random_range(8.0..40.0);
    let bearing = r.random_range(-PI..PI);
    let goal = Pose2D::new(d * bearing.cos(), d * bearing.sin(), r.random_range(-PI..PI));
    let payload = r.random_range(0.0..11_000.0);
    let cruise = r.random_range(0.8..2.7);
    c.sensors.gnss_sigma_fixed = r.random_range(0.005..0.04);
    c.vehicles.push(vehicle("cc1", Pose2D::origin(), payload));
    c.zones.push(square("yard", 100.0));
    c.workflows
        .push(workflow("haul", "yard", cruise, vec![("cc1", vec![Pose2D::origin(), goal])], true));
    c
}

/// Two vehicles on straight routes that cross, timed to arrive at the
/// crossing close together.
pub fn crossing(seed: u64) -> ScenarioConfig {
    let mut r = rng(2, seed);
    let mut c = base(format!("crossing-{seed}"), seed, 150.0);
    c.fms.safety_margin = r.random_range(1.0..1.5);
    let angle = r.random_range(PI / 4.0..3.0 * PI / 4.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
    let cruise = r.random_range(1.0..2.7);
    let cruise_b = r.random_range(1.0..2.7);
    let run_in_a = r.random_range(25.0..40.0);
    // arrival times at the crossing differ by at most a few seconds
    let skew = r.random_range(-3.0..3.0);
    let run_in_b = f64::clamp((run_in_a / cruise + skew) * cruise_b, 20.0, 60.0);
    let run_out = 30.0;
    let start_a = Pose2D::new(-run_in_a, 0.0, 0.0);
    let goal_a = Pose2D::new(run_out, 0.0, 0.0);
    let (ca, sa) = (angle.cos(), angle.sin());
    let start_b = Pose2D::new(-run_in_b * ca, -run_in_b * sa, angle);
    let goal_b = Pose2D::new(run_out * ca, run_out * sa, angle);
    c.vehicles
        .push(vehicle("cc1", start_a, r.random_range(0.0..11_000.0)));
    c.vehicles
        .push(vehicle("cc2", start_b, r.random_range(0.0..11_000.0)));
    c.zones.push(square("yard", 100.0));
    let delay = if r.random_bool(0.5) { r.random_range(0.0..2.0) } else { 0.0 };
    c.workflows
        .push(workflow("route-a", "yard", cruise, vec![("cc1", vec![start_a, goal_a])], true));
    c.workflows.push(workflow(
        "route-b",
        "yard",
        cruise_b,
        vec![("cc2", vec![start_b, goal_b])],
        delay == 0.0,
    ));
    if delay > 0.0 {
        c.events.push(ScriptedEvent {
            at: delay,
            action: ScriptedAction::Operator {
                command: OperatorCommand::StartMission {
                    workflow: "route-b".into(),
                },
            },
        });
    }
    c
}

/// A driving vehicle whose main channel goes silent for longer than the
/// heartbeat timeout. Odd seeds also lose every main-channel message and
/// rely on a stop-radio press.
pub fn outage(seed: u64) -> ScenarioConfig {
    let mut r = rng(3, seed);
    let mut c = base(format!("outage-{seed}"), seed, 40.0);
    c.end_when_idle = false;
    c.vehicles.push(vehicle("cc1", Pose2D::origin(), r.random_range(0.0..11_000.0)));
    c.vehicles.push(vehicle(
        "cc2",
        Pose2D::new(0.0, 30.0, 0.0),
        r.random_range(0.0..11_000.0),
    ));
    c.zones.push(square("yard", 200.0));
    let cruise = r.random_range(1.5..2.7);
    c.workflows.push(workflow(
        "long-haul",
        "yard",
        cruise,
        vec![
            ("cc1", vec![Pose2D::origin(), Pose2D::new(150.0, 0.0, 0.0)]),
            ("cc2", vec![Pose2D::new(0.0, 30.0, 0.0), Pose2D::new(150.0, 30.0, 0.0)]),
        ],
        true,
    ));
    let t0 = r.random_range(5.0..15.0);
    if seed.is_multiple_of(2) {
        let len = r.random_range(1.2..6.0);
        c.network.outages.push(Window {
            start: t0,
            end: t0 + len,
        });
    } else {
        c.events.push(ScriptedEvent {
            at: t0 - 0.5,
            action: ScriptedAction::LinkLoss { drop_prob: 1.0 },
        });
        c.events.push(ScriptedEvent {
            at: t0,
            action: ScriptedAction::StopPress { target: StopTarget::All },
        });
        c.duration = t0 + 5.0;
    }
    c
}

/// A tagged person walks straight across an active zone.
pub fn intrusion(seed: u64) -> ScenarioConfig {
    let mut r = rng(4, seed);
    let mut c = base(format!("intrusion-{seed}"), seed, 80.0);
    c.zones.push(square("pit", 40.0));
    c.zones.push(Zone::new(
        "access",
        vec![(-120.0, -120.0), (120.0, -120.0), (120.0, 120.0), (-120.0, 120.0)],
        ZoneKind::Operational,
    ));
    c.vehicles.push(vehicle("cc1", Pose2D::new(-25.0, -10.0, 0.0), 3000.0));
    c.vehicles.push(vehicle("cc2", Pose2D::new(-25.0, 10.0, 0.0), 3000.0));
    c.workflows.push(workflow(
        "dig",
        "pit",
        r.random_range(1.0..2.7),
        vec![
            ("cc1", vec![Pose2D::new(-25.0, -10.0, 0.0), Pose2D::new(30.0, -10.0, 0.0)]),
            ("cc2", vec![Pose2D::new(-25.0, 10.0, 0.0), Pose2D::new(30.0, 10.0, 0.0)]),
        ],
        true,
    ));
    let heading = r.random_range(-PI..PI);
    let speed = r.random_range(0.8..1.6);
    let enter_at = r.random_range(4.0..12.0);
    // entry point on the boundary of the pit, walking inward
    let side = r.random_range(-30.0..30.0);
    let (dx, dy) = (heading.cos(), heading.sin());
    let (ex, ey) = match (dx.abs() > dy.abs(), dx > 0.0, dy > 0.0) {
        (true, true, _) => (-40.0, side),
        (true, false, _) => (40.0, side),
        (false, _, true) => (side, -40.0),
        (false, _, false) => (side, 40.0),
    };
    let walk_in = speed * enter_at;
    let start = (ex - dx * walk_in, ey - dy * walk_in);
    let across = 140.0;
    let t_end = (walk_in + across) / speed;
    c.persons.push(PersonConfig {
        id: "worker".into(),
        gnss_tag: true,
        script: vec![
            TimedPoint {
                t: 0.0,
                x: start.0,
                y: start.1,
            },
            TimedPoint {
                t: t_end,
                x: start.0 + dx * (walk_in + across),
                y: start.1 + dy * (walk_in + across),
            },
        ],
    });
    c.duration = t_end.min(60.0);
    c.end_when_idle = false;
    c
}
