//! Fixed-timestep simulation loop binding the world, the on-board stacks,
//! the fleet manager and the network.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::acs::{Action, Agent, AgentEvent, EstimatorState, FaultKind, Mode};
use crate::fms::{Fms, FmsEvent};
use crate::geom::Pose2D;
use crate::log::{EventLog, LOG_FORMAT};
use crate::net::{Channel, SendOutcome, StopChannel, StopTarget};
use crate::proto::{CommandResult, FmsMessage, OperatorCommand, Uplink};
use crate::scenario::{ScenarioConfig, ScriptedAction};
use crate::snapshot::{Alert, ConflictSnapshot, PersonSnapshot, Snapshot, VehicleSnapshot, ZoneSnapshot};
use crate::world::{Person, VehicleBody, VehicleState, World, WorldError};

/// Time allowed from stop delivery to standstill.
pub const STOP_DEADLINE: f64 = 2.0;
/// Exit status of a run with safety violations.
pub const EXIT_VIOLATION: i32 = 2;

const DOWNLINK_STREAM: u64 = 2_000_000;
const UPLINK_STREAM: u64 = 2_000_001;
const ALERTS_KEPT: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    /// Two executing vehicles with overlapping safety circles.
    Overlap { a: String, b: String, distance: f64 },
    /// A vehicle still moving too long after a stop was delivered.
    MissedStop { vehicle: String, delivered_at: f64 },
    /// A vehicle executing while a person is inside its zone.
    IntrusionBreach { zone: String, person: String, vehicle: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub exit_code: i32,
    pub digest: String,
    pub ticks: u64,
    pub sim_time: f64,
    pub violations: Vec<(f64, Violation)>,
    /// Distance from each vehicle's rest pose to its last reached goal.
    pub goal_errors: BTreeMap<String, f64>,
    pub records: u64,
}

/// Where the log goes.
pub struct LogOptions {
    pub keep_records: bool,
    pub keep_lines: bool,
    pub writer: Option<Box<dyn Write + Send>>,
}

impl LogOptions {
    pub fn none() -> Self {
        Self {
            keep_records: false,
            keep_lines: false,
            writer: None,
        }
    }

    pub fn in_memory() -> Self {
        Self {
            keep_records: true,
            keep_lines: true,
            writer: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("log write failed: {0}")]
    Log(#[from] std::io::Error),
}

fn tagged(v: Value, tag: &str) -> (String, serde_json::Map<String, Value>) {
    match v {
        Value::Object(mut m) => {
            let kind = m.remove(tag).and_then(|k| k.as_str().map(str::to_string)).unwrap_or_default();
            (kind, m)
        }
        other => (String::new(), serde_json::Map::from_iter([("value".to_string(), other)])),
    }
}

fn message_payload(vehicle: &str, m: &FmsMessage) -> Value {
    let mission = match m {
        FmsMessage::AssignMission(x) | FmsMessage::Transition(x) => Some(x.mission_id.clone()),
        _ => None,
    };
    json!({ "vehicle": vehicle, "message": m.name(), "mission_id": mission })
}

fn uplink_payload(link: &str, m: &Uplink) -> Value {
    let name = match m {
        Uplink::Status(_) => "status",
        Uplink::PersonFix { .. } => "person_fix",
    };
    json!({ "link": link, "message": name })
}

pub struct Sim {
    cfg: ScenarioConfig,
    seed: u64,
    world: World,
    agents: Vec<Agent>,
    fms: Fms,
    down: Channel<FmsMessage>,
    up: Channel<Uplink>,
    stop: StopChannel,
    log: EventLog,
    script: Vec<(f64, ScriptedAction)>,
    script_next: usize,
    telemetry_stride: u64,
    stop_watch: BTreeMap<String, f64>,
    overlapping: BTreeSet<(usize, usize)>,
    breaches: BTreeSet<(String, String, String)>,
    violations: Vec<(f64, Violation)>,
    last_goal: BTreeMap<String, Pose2D>,
    alerts: VecDeque<Alert>,
    finished: bool,
}

impl Sim {
    pub fn new(cfg: &ScenarioConfig, seed: u64, log: LogOptions) -> Result<Self, EngineError> {
        let mut cfg = cfg.materialized();
        cfg.seed = seed;
        let bodies = cfg
            .vehicles
            .iter()
            .map(|v| {
                let mut st = VehicleState::at_rest(v.pose);
                st.payload_mass = v.payload;
                st.upper_angle = v.upper_angle;
                VehicleBody::new(v.id.clone(), v.spec.clone(), st)
            })
            .collect();
        let persons = cfg
            .persons
            .iter()
            .map(|p| Person {
                id: p.id.clone(),
                gnss_tag: p.gnss_tag,
                script: p.script.clone(),
            })
            .collect();
        let world = World::new(cfg.timestep, cfg.sensors.clone(), seed, bodies, persons)?;
        let est_params = cfg.estimator_params();
        let agents = cfg
            .vehicles
            .iter()
            .map(|v| {
                let est = EstimatorState::new(v.pose, 0.0, est_params.initial_covariance(), 0.0);
                Agent::new(v.id.clone(), v.spec.clone(), cfg.agent.clone(), est_params.clone(), est, 0.0)
            })
            .collect();
        let fms = Fms::new(cfg.fms.clone(), cfg.vehicle_infos(), cfg.zones.clone(), 0.0);
        let mut script: Vec<(f64, ScriptedAction)> = cfg.events.iter().map(|e| (e.at, e.action.clone())).collect();
        script.sort_by(|a, b| a.0.total_cmp(&b.0));
        let telemetry_stride = (cfg.telemetry_period / cfg.timestep).round().max(1.0) as u64;
        let mut sim = Self {
            down: Channel::new(cfg.network.clone(), seed, DOWNLINK_STREAM),
            up: Channel::new(cfg.network.clone(), seed, UPLINK_STREAM),
            stop: StopChannel::new(),
            log: EventLog::new(log.keep_records, log.keep_lines, log.writer),
            seed,
            world,
            agents,
            fms,
            script,
            script_next: 0,
            telemetry_stride,
            stop_watch: BTreeMap::new(),
            overlapping: BTreeSet::new(),
            breaches: BTreeSet::new(),
            violations: Vec::new(),
            last_goal: BTreeMap::new(),
            alerts: VecDeque::new(),
            finished: false,
            cfg,
        };
        let header = json!({
            "format": LOG_FORMAT,
            "seed": seed,
            "config": serde_json::to_value(&sim.cfg).expect("config serializes"),
        });
        sim.log.append(0.0, "sim", "header", header)?;
        for wf in sim.cfg.workflows.clone() {
            let autostart = wf.autostart;
            let id = wf.id.clone();
            sim.command(OperatorCommand::DefineWorkflow { workflow: wf }, "scenario")?;
            if autostart {
                sim.command(OperatorCommand::StartMission { workflow: id }, "scenario")?;
            }
        }
        sim.log_telemetry()?;
        Ok(sim)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn fms(&self) -> &Fms {
        &self.fms
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn time(&self) -> f64 {
        self.world.time()
    }

    pub fn violations(&self) -> &[(f64, Violation)] {
        &self.violations
    }

    pub fn finished(&self) -> bool {
        self.finished
    }

    /// Applies an operator command at the current tick boundary. The command
    /// is logged with its originator before it takes effect.
    pub fn command(&mut self, cmd: OperatorCommand, operator: &str) -> Result<CommandResult, EngineError> {
        let now = self.time();
        let name = cmd.name();
        self.log.append(
            now,
            "operator",
            "operator_command",
            json!({ "operator": operator, "command": serde_json::to_value(&cmd).expect("command serializes") }),
        )?;
        let result = self.fms.command(now, cmd);
        self.log.append(
            now,
            "fms",
            "command_result",
            json!({ "operator": operator, "command": name, "result": serde_json::to_value(&result).expect("result serializes") }),
        )?;
        self.flush_fms_events()?;
        Ok(result)
    }

    /// Presses the remote-stop radio.
    pub fn press_stop(&mut self, target: StopTarget, operator: &str) -> Result<(), EngineError> {
        let now = self.time();
        let ids: Vec<String> = self.agents.iter().map(|a| a.id().to_string()).collect();
        let (at, reached) = self.stop.press(&target, &ids, now);
        self.log.append(
            now,
            "stop_radio",
            "stop_press",
            json!({ "operator": operator, "target": target, "reached": reached, "deliver_at": at, "noop": reached.is_empty() }),
        )?;
        Ok(())
    }

    pub fn inject_fault(&mut self, vehicle: &str, fault: FaultKind) -> Result<(), EngineError> {
        let now = self.time();
        let i = self.world.vehicle_index(vehicle)?;
        self.log
            .append(now, "sim", "fault_injected", json!({ "vehicle": vehicle, "fault": fault }))?;
        self.agents[i].inject_fault(now, fault);
        self.flush_agent_events(i)?;
        Ok(())
    }

    fn push_alert(&mut self, time: f64, vehicle: Option<String>, message: String) {
        if self.alerts.len() == ALERTS_KEPT {
            self.alerts.pop_front();
        }
        self.alerts.push_back(Alert { time, vehicle, message });
    }

    fn flush_agent_events(&mut self, i: usize) -> Result<(), EngineError> {
        let id = self.agents[i].id().to_string();
        for (t, e) in self.agents[i].take_events() {
            if let AgentEvent::GoalReached { goal, .. } = &e {
                self.last_goal.insert(id.clone(), *goal);
            }
            if let AgentEvent::FaultRaised { fault } = &e {
                self.push_alert(t, Some(id.clone()), format!("fault {fault:?}"));
            }
            let (kind, mut m) = tagged(serde_json::to_value(&e).expect("event serializes"), "event");
            m.insert("vehicle".into(), Value::String(id.clone()));
            self.log.append(t, &id, &kind, Value::Object(m))?;
        }
        Ok(())
    }

    fn flush_fms_events(&mut self) -> Result<(), EngineError> {
        for (t, e) in self.fms.take_events() {
            if let FmsEvent::Alert { vehicle, message } = &e {
                self.push_alert(t, vehicle.clone(), message.clone());
            }
            let (kind, m) = tagged(serde_json::to_value(&e).expect("event serializes"), "event");
            self.log.append(t, "fms", &kind, Value::Object(m))?;
        }
        Ok(())
    }

    fn send_downlink(&mut self, out: Vec<crate::fms::Outgoing>) -> Result<(), EngineError> {
        let now = self.time();
        let ids: Vec<String> = self.agents.iter().map(|a| a.id().to_string()).collect();
        for o in out {
            let mut payload = message_payload(&o.vehicle, &o.message);
            let outcome = self.down.send(&o.vehicle, o.message, now);
            payload["outcome"] = serde_json::to_value(outcome).expect("outcome serializes");
            let kind = if outcome == SendOutcome::Dropped { "dropped" } else { "sent" };
            self.log.append(now, "net", kind, payload)?;
            if o.mirror_stop {
                let (at, reached) = self.stop.press(&StopTarget::Vehicle(o.vehicle.clone()), &ids, now);
                self.log.append(
                    now,
                    "stop_radio",
                    "stop_press",
                    json!({ "operator": "fms", "target": StopTarget::Vehicle(o.vehicle), "reached": reached, "deliver_at": at, "noop": reached.is_empty() }),
                )?;
            }
        }
        Ok(())
    }

    fn run_script(&mut self) -> Result<(), EngineError> {
        let now = self.time();
        while self.script_next < self.script.len() && self.script[self.script_next].0 <= now + 1e-9 {
            let action = self.script[self.script_next].1.clone();
            self.script_next += 1;
            match action {
                ScriptedAction::Operator { command } => {
                    self.command(command, "script")?;
                }
                ScriptedAction::StopPress { target } => self.press_stop(target, "script")?,
                ScriptedAction::InjectFault { vehicle, fault } => self.inject_fault(&vehicle, fault)?,
                ScriptedAction::LinkLoss { drop_prob } => {
                    self.log.append(now, "net", "link_loss", json!({ "drop_prob": drop_prob }))?;
                    self.down.set_drop_prob(drop_prob);
                    self.up.set_drop_prob(drop_prob);
                }
            }
        }
        Ok(())
    }

    fn stop_delivered(&mut self, i: usize, now: f64) {
        let id = self.agents[i].id().to_string();
        self.stop_watch.entry(id).or_insert(now);
    }

    /// Advances the whole system by one timestep.
    pub fn step(&mut self) -> Result<(), EngineError> {
        if self.finished {
            return Ok(());
        }
        let now = self.time();
        let dt = self.world.dt();
        let tick = self.world.tick();
        self.run_script()?;

        for (vehicle, msg) in self.down.deliver(now) {
            let i = self.world.vehicle_index(&vehicle)?;
            self.log.append(now, "net", "delivered", message_payload(&vehicle, &msg))?;
            let is_stop = msg == FmsMessage::RemoteStop;
            self.agents[i].handle_message(now, msg);
            if is_stop {
                self.stop_delivered(i, now);
            }
            self.flush_agent_events(i)?;
        }
        for vehicle in self.stop.deliver(now) {
            let i = self.world.vehicle_index(&vehicle)?;
            self.log
                .append(now, "stop_radio", "stop_delivered", json!({ "vehicle": vehicle }))?;
            self.agents[i].handle_message(now, FmsMessage::RemoteStop);
            self.stop_delivered(i, now);
            self.flush_agent_events(i)?;
        }

        for i in 0..self.agents.len() {
            let id = self.agents[i].id().to_string();
            let readings = self.world.emit_sensors(&id)?;
            self.agents[i].process_readings(now, &readings);
            let resolver = self.world.resolver_angle(&id)?;
            let cmd = self.agents[i].control(now, dt, resolver);
            self.world.apply_command(&id, cmd)?;
            self.world.set_estop(&id, self.agents[i].mode() == Mode::StoppedNonRecoverable)?;
            if self.agents[i].take_status_due() {
                let st = self.agents[i].status(now, resolver);
                let msg = Uplink::Status(st);
                let mut payload = uplink_payload(&id, &msg);
                let outcome = self.up.send(&id, msg, now);
                payload["outcome"] = serde_json::to_value(outcome).expect("outcome serializes");
                let kind = if outcome == SendOutcome::Dropped { "dropped" } else { "sent" };
                self.log.append(now, "net", kind, payload)?;
            }
            self.flush_agent_events(i)?;
        }

        if tick.is_multiple_of(self.world.gnss_stride()) {
            for k in 0..self.world.persons().len() {
                if let Some((x, y)) = self.world.person_fix(k) {
                    let person = self.world.persons()[k].id.clone();
                    let link = format!("person:{person}");
                    let msg = Uplink::PersonFix { person, stamp: now, x, y };
                    let mut payload = uplink_payload(&link, &msg);
                    let outcome = self.up.send(&link, msg, now);
                    payload["outcome"] = serde_json::to_value(outcome).expect("outcome serializes");
                    let kind = if outcome == SendOutcome::Dropped { "dropped" } else { "sent" };
                    self.log.append(now, "net", kind, payload)?;
                }
            }
        }

        for (link, msg) in self.up.deliver(now) {
            self.log.append(now, "net", "delivered", uplink_payload(&link, &msg))?;
            self.fms.receive(now, msg);
        }
        let out = self.fms.step(now);
        self.flush_fms_events()?;
        self.send_downlink(out)?;

        self.world.step();
        self.monitor()?;
        if self.world.tick().is_multiple_of(self.telemetry_stride) {
            self.log_telemetry()?;
        }
        if self.done() {
            self.finished = true;
        }
        Ok(())
    }

    fn log_telemetry(&mut self) -> Result<(), EngineError> {
        let now = self.time();
        let vehicles: Vec<Value> = self
            .agents
            .iter()
            .zip(self.world.vehicles())
            .map(|(a, b)| {
                json!({
                    "id": a.id(),
                    "mode": a.mode(),
                    "true_pose": b.state.pose,
                    "estimate": a.estimator().pose(),
                    "speed": b.state.v,
                    "upper_angle": b.state.upper_angle,
                    "trace": a.estimator().trace(),
                })
            })
            .collect();
        let persons: Vec<Value> = self
            .world
            .persons()
            .iter()
            .map(|p| {
                let (x, y) = p.position_at(now);
                json!({ "id": p.id, "x": x, "y": y })
            })
            .collect();
        self.log.append(
            now,
            "sim",
            "telemetry",
            json!({ "vehicles": vehicles, "persons": persons }),
        )?;
        Ok(())
    }

    /// Safety invariants evaluated on the freshly stepped state.
    fn monitor(&mut self) -> Result<(), EngineError> {
        let now = self.time();
        let mut found = Vec::new();

        for (id, &t0) in self.stop_watch.clone().iter() {
            let v = self.world.vehicle(id)?.state.v;
            if v.abs() < 1e-6 {
                self.stop_watch.remove(id);
                self.log.append(
                    now,
                    "sim",
                    "vehicle_halted",
                    json!({ "vehicle": id, "delivered_at": t0, "elapsed": now - t0 }),
                )?;
            } else if now - t0 > STOP_DEADLINE + 1e-9 {
                self.stop_watch.remove(id);
                found.push(Violation::MissedStop {
                    vehicle: id.clone(),
                    delivered_at: t0,
                });
            }
        }

        let margin = self.cfg.fms.safety_margin;
        let bodies = self.world.vehicles();
        let n = bodies.len();
        for i in 0..n {
            for j in i + 1..n {
                let both = self.agents[i].mode() == Mode::Executing && self.agents[j].mode() == Mode::Executing;
                let d = bodies[i].state.pose.distance_to(&bodies[j].state.pose);
                let reach = bodies[i].spec.footprint_radius + bodies[j].spec.footprint_radius + 2.0 * margin;
                if both && d < reach {
                    if self.overlapping.insert((i, j)) {
                        found.push(Violation::Overlap {
                            a: bodies[i].id.clone(),
                            b: bodies[j].id.clone(),
                            distance: d,
                        });
                    }
                } else {
                    self.overlapping.remove(&(i, j));
                }
            }
        }

        let mut breaches = BTreeSet::new();
        for p in self.world.persons() {
            let (x, y) = p.position_at(now);
            for z in self.fms.zones() {
                if !z.contains_strict(x, y) {
                    continue;
                }
                for (i, r) in self.fms.records().iter().enumerate() {
                    let bound = r
                        .run
                        .as_ref()
                        .filter(|run| !run.finished)
                        .and_then(|run| self.fms.workflows().get(&run.workflow))
                        .is_some_and(|w| w.zones.contains(&z.id));
                    if bound && self.agents[i].mode() == Mode::Executing {
                        breaches.insert((z.id.clone(), p.id.clone(), r.id.clone()));
                    }
                }
            }
        }
        for b in &breaches {
            if !self.breaches.contains(b) {
                found.push(Violation::IntrusionBreach {
                    zone: b.0.clone(),
                    person: b.1.clone(),
                    vehicle: b.2.clone(),
                });
            }
        }
        self.breaches = breaches;

        for v in found {
            self.log.append(
                now,
                "sim",
                "safety_violation",
                serde_json::to_value(&v).expect("violation serializes"),
            )?;
            self.push_alert(now, None, format!("safety violation: {v:?}"));
            self.violations.push((now, v));
        }
        Ok(())
    }

    fn done(&self) -> bool {
        let now = self.time();
        if now + 1e-9 >= self.cfg.duration {
            return true;
        }
        if !self.cfg.end_when_idle || self.script_next < self.script.len() {
            return false;
        }
        let records = self.fms.records();
        let dispatched = records.iter().any(|r| r.run.is_some());
        let all_done = records.iter().all(|r| r.run.as_ref().is_none_or(|run| run.finished));
        let at_rest = self.world.vehicles().iter().all(|b| b.state.v.abs() < 1e-3);
        dispatched && all_done && at_rest && self.stop_watch.is_empty()
    }

    /// Runs until the duration elapses or the scenario completes.
    pub fn run(&mut self) -> Result<(), EngineError> {
        while !self.finished {
            self.step()?;
        }
        Ok(())
    }

    pub fn exit_code(&self) -> i32 {
        if self.violations.is_empty() {
            0
        } else {
            EXIT_VIOLATION
        }
    }

    pub fn goal_errors(&self) -> BTreeMap<String, f64> {
        self.last_goal
            .iter()
            .filter_map(|(id, g)| {
                let b = self.world.vehicle(id).ok()?;
                Some((id.clone(), b.state.pose.distance_to(g)))
            })
            .collect()
    }

    /// Writes the end record and returns the run summary.
    pub fn finish(mut self) -> Result<(RunSummary, EventLog), EngineError> {
        let now = self.time();
        let digest = self.log.state().digest();
        let exit_code = self.exit_code();
        let goal_errors = self.goal_errors();
        self.log.append(
            now,
            "sim",
            "end",
            json!({
                "digest": digest,
                "exit_code": exit_code,
                "violations": self.violations.len(),
                "ticks": self.world.tick(),
            }),
        )?;
        self.log.flush()?;
        let summary = RunSummary {
            seed: self.seed,
            exit_code,
            digest,
            ticks: self.world.tick(),
            sim_time: now,
            violations: self.violations.clone(),
            goal_errors,
            records: self.log.next_seq(),
        };
        Ok((summary, self.log))
    }

    pub fn snapshot(&self) -> Snapshot {
        let now = self.time();
        let vehicles = self
            .agents
            .iter()
            .zip(self.world.vehicles())
            .zip(self.fms.records())
            .map(|((a, b), r)| VehicleSnapshot {
                id: a.id().to_string(),
                mode: a.mode(),
                fault: a.fault(),
                latched: r.stop_latched,
                holds: r.holds.iter().cloned().collect(),
                pose: b.state.pose,
                estimate: a.estimator().pose(),
                speed: b.state.v,
                upper_angle: b.state.upper_angle,
                workflow: r.run.as_ref().filter(|x| !x.finished).map(|x| x.workflow.clone()),
                mission_id: a.mission().map(|m| m.mission_id.clone()),
                action_index: a.action_index(),
                path: remaining_path(a),
            })
            .collect();
        let persons = self
            .world
            .persons()
            .iter()
            .map(|p| {
                let (x, y) = p.position_at(now);
                PersonSnapshot { id: p.id.clone(), x, y }
            })
            .collect();
        let zones = self
            .fms
            .zones()
            .iter()
            .map(|z| {
                let st = self.fms.zone_states().get(&z.id);
                ZoneSnapshot {
                    id: z.id.clone(),
                    kind: z.kind,
                    polygon: z.polygon.clone(),
                    intruded: st.is_some_and(|s| s.intruded),
                    intruders: st.map(|s| s.intruders.iter().cloned().collect()).unwrap_or_default(),
                }
            })
            .collect();
        let conflicts = self
            .fms
            .conflicts()
            .iter()
            .map(|((a, b), (yielder, rule, time))| ConflictSnapshot {
                a: a.clone(),
                b: b.clone(),
                yielder: yielder.clone(),
                rule: *rule,
                time: *time,
            })
            .collect();
        Snapshot {
            sim_time: now,
            tick: self.world.tick(),
            finished: self.finished,
            vehicles,
            persons,
            circles: self.fms.safety_circles(now),
            zones,
            conflicts,
            alerts: self.alerts.iter().cloned().collect(),
            workflows: self.fms.workflows().keys().cloned().collect(),
        }
    }
}

fn remaining_path(a: &Agent) -> Vec<[f64; 2]> {
    let Some(m) = a.mission() else { return Vec::new() };
    if a.mission_complete() {
        return Vec::new();
    }
    let done = a.path_progress();
    m.actions
        .iter()
        .enumerate()
        .skip(a.action_index())
        .filter_map(|(i, act)| match act {
            Action::FollowPath { path, .. } => {
                let from = if i == a.action_index() { done } else { 0.0 };
                path.sample(0.5).ok().map(|ss| ss.into_iter().filter(move |s| s.s >= from))
            }
            _ => None,
        })
        .flatten()
        .map(|s| [s.pose.x, s.pose.y])
        .collect()
}

/// Runs one scenario headless to completion.
pub fn run_headless(cfg: &ScenarioConfig, seed: u64, log: LogOptions) -> Result<(RunSummary, EventLog), EngineError> {
    let mut sim = Sim::new(cfg, seed, log)?;
    sim.run()?;
    sim.finish()
}
