use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::interference::{check_interference, choose_yielder, first_conflict, Contender, SafetyCircle, Track, YieldRule};
use super::supervise::{check_zone_intrusion, dispatch, supervise_heartbeats};
use super::workflow::{compile_route, Workflow};
use super::zone::{Zone, ZoneKind};
use super::{FmsParams, PREDICTION_STEP};
use crate::acs::{Action, Mission, Mode};
use crate::geom::Pose2D;
use crate::proto::{AgentStatus, CommandResult, FmsMessage, OperatorCommand, Uplink};
use crate::world::ActorKind;

const PATH_SAMPLE_STEP: f64 = 0.5;
/// How much of a vehicle's remaining route is checked for blockage.
const PATH_CHECK_LENGTH: f64 = 60.0;

/// Static facts about a vehicle known to the fleet manager.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleInfo {
    pub id: String,
    pub footprint_radius: f64,
    pub r_min: f64,
    pub v_max: f64,
    pub initial_pose: Pose2D,
}

/// Why the fleet manager wants a vehicle paused.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "hold", content = "zone", rename_all = "snake_case")]
pub enum Hold {
    Operator,
    Interference,
    Intrusion(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveRun {
    pub workflow: String,
    pub mission_id: String,
    pub started: f64,
    pub dispatched_at: f64,
    pub finished: bool,
    pub laps: u32,
}

/// Everything the fleet manager tracks per vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: String,
    pub last_heartbeat: f64,
    pub status: Option<AgentStatus>,
    pub stop_latched: bool,
    pub holds: BTreeSet<Hold>,
    pub run: Option<ActiveRun>,
    #[serde(skip)]
    missions: BTreeMap<String, Mission>,
    #[serde(skip)]
    samples: BTreeMap<String, Vec<Vec<(f64, f64)>>>,
    #[serde(skip)]
    interference_clear_since: Option<f64>,
    #[serde(skip)]
    last_control: Option<(bool, f64)>,
    #[serde(skip)]
    queue: VecDeque<FmsMessage>,
    /// Restart sent; the vehicle has not yet reported leaving the stopped mode.
    #[serde(skip)]
    restarting: bool,
}

impl AgentRecord {
    pub fn new(id: impl Into<String>, now: f64) -> Self {
        Self {
            id: id.into(),
            last_heartbeat: now,
            status: None,
            stop_latched: false,
            holds: BTreeSet::new(),
            run: None,
            missions: BTreeMap::new(),
            samples: BTreeMap::new(),
            interference_clear_since: None,
            last_control: None,
            restarting: false,
            queue: VecDeque::new(),
        }
    }

    pub fn mode(&self) -> Option<Mode> {
        self.status.as_ref().map(|s| s.mode)
    }

    fn remember(&mut self, m: &Mission) {
        let samples = m
            .actions
            .iter()
            .map(|a| match a {
                Action::FollowPath { path, .. } => path
                    .sample(PATH_SAMPLE_STEP)
                    .map(|ps| ps.iter().map(|p| (p.pose.x, p.pose.y)).collect())
                    .unwrap_or_default(),
                _ => Vec::new(),
            })
            .collect();
        self.samples.insert(m.mission_id.clone(), samples);
        self.missions.insert(m.mission_id.clone(), m.clone());
    }

    fn running(&self) -> bool {
        self.run.as_ref().is_some_and(|r| !r.finished)
    }

    /// Wants to drive: running a mission, and either executing or held
    /// only because of traffic.
    fn mobile(&self) -> bool {
        let Some(st) = &self.status else { return false };
        if self.stop_latched || !self.running() || st.fault.is_some() {
            return false;
        }
        match st.mode {
            Mode::Executing => self.holds.iter().all(|h| *h == Hold::Interference),
            Mode::PausedRecoverable => self.holds.iter().all(|h| *h == Hold::Interference) && st.held_by_fault.is_none(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonTrack {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub stamp: f64,
    pub vx: f64,
    pub vy: f64,
}

impl PersonTrack {
    pub fn predict(&self, t: f64) -> (f64, f64) {
        let dt = t - self.stamp;
        (self.x + self.vx * dt, self.y + self.vy * dt)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZoneState {
    pub intruded: bool,
    pub intruders: BTreeSet<String>,
    pub clear_since: Option<f64>,
}

/// A message leaving the fleet manager.
#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub vehicle: String,
    pub message: FmsMessage,
    /// Also send over the stop radio.
    pub mirror_stop: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum FmsEvent {
    WorkflowDefined { workflow: String },
    MissionDispatched { vehicle: String, mission_id: String, workflow: String },
    TransitionDispatched { vehicle: String, mission_id: String, workflow: String },
    MissionFinished { vehicle: String, mission_id: String },
    PlanningFailed { vehicle: String, reason: String },
    HoldAdded { vehicle: String, hold: Hold },
    HoldReleased { vehicle: String, hold: Hold },
    PauseSent { vehicle: String, holds: Vec<Hold> },
    ResumeSent { vehicle: String },
    ConflictDetected { a: String, b: String, time: f64, yielder: String, winner: String, rule: YieldRule },
    ConflictCleared { a: String, b: String },
    IntrusionDetected { zone: String, intruders: Vec<String>, vehicles: Vec<String> },
    ZoneCleared { zone: String },
    HeartbeatLost { vehicle: String, age: f64 },
    StopLatched { vehicle: String, cause: String },
    LatchCleared { vehicle: String },
    Alert { vehicle: Option<String>, message: String },
}

/// The fleet manager reactor.
#[derive(Debug, Clone)]
pub struct Fms {
    params: FmsParams,
    vehicles: Vec<VehicleInfo>,
    records: Vec<AgentRecord>,
    zones: Vec<Zone>,
    workflows: BTreeMap<String, Workflow>,
    persons: BTreeMap<String, PersonTrack>,
    zone_states: BTreeMap<String, ZoneState>,
    conflicts: BTreeMap<(String, String), (String, YieldRule, f64)>,
    next_ping: f64,
    events: Vec<(f64, FmsEvent)>,
}

fn rejected(reason: impl Into<String>) -> CommandResult {
    CommandResult::Rejected { reason: reason.into() }
}

impl Fms {
    pub fn new(params: FmsParams, vehicles: Vec<VehicleInfo>, zones: Vec<Zone>, now: f64) -> Self {
        let records = vehicles.iter().map(|v| AgentRecord::new(v.id.clone(), now)).collect();
        let zone_states = zones
            .iter()
            .filter(|z| z.kind == ZoneKind::Operational)
            .map(|z| (z.id.clone(), ZoneState::default()))
            .collect();
        Self {
            params,
            vehicles,
            records,
            zones,
            workflows: BTreeMap::new(),
            persons: BTreeMap::new(),
            zone_states,
            conflicts: BTreeMap::new(),
            next_ping: now,
            events: Vec::new(),
        }
    }

    pub fn params(&self) -> &FmsParams {
        &self.params
    }

    pub fn records(&self) -> &[AgentRecord] {
        &self.records
    }

    pub fn record(&self, id: &str) -> Option<&AgentRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn zone_states(&self) -> &BTreeMap<String, ZoneState> {
        &self.zone_states
    }

    pub fn workflows(&self) -> &BTreeMap<String, Workflow> {
        &self.workflows
    }

    pub fn persons(&self) -> &BTreeMap<String, PersonTrack> {
        &self.persons
    }

    /// Active conflicts keyed by pair, with the yielding side.
    pub fn conflicts(&self) -> &BTreeMap<(String, String), (String, YieldRule, f64)> {
        &self.conflicts
    }

    pub fn take_events(&mut self) -> Vec<(f64, FmsEvent)> {
        std::mem::take(&mut self.events)
    }

    fn idx(&self, id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.id == id)
    }

    fn info(&self, id: &str) -> Option<&VehicleInfo> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    fn emit(&mut self, now: f64, e: FmsEvent) {
        self.events.push((now, e));
    }

    fn add_hold(&mut self, now: f64, i: usize, hold: Hold) {
        if self.records[i].holds.insert(hold.clone()) {
            let vehicle = self.records[i].id.clone();
            self.emit(now, FmsEvent::HoldAdded { vehicle, hold });
        }
    }

    fn release_hold(&mut self, now: f64, i: usize, hold: &Hold) {
        if self.records[i].holds.remove(hold) {
            let vehicle = self.records[i].id.clone();
            self.emit(
                now,
                FmsEvent::HoldReleased {
                    vehicle,
                    hold: hold.clone(),
                },
            );
        }
    }

    fn latch(&mut self, now: f64, i: usize, cause: &str, send_stop: bool) {
        let r = &mut self.records[i];
        r.stop_latched = true;
        r.restarting = false;
        if send_stop {
            r.queue.push_back(FmsMessage::RemoteStop);
        }
        let vehicle = r.id.clone();
        self.emit(
            now,
            FmsEvent::StopLatched {
                vehicle: vehicle.clone(),
                cause: cause.to_string(),
            },
        );
        self.emit(
            now,
            FmsEvent::Alert {
                vehicle: Some(vehicle),
                message: format!("remote stop latched: {cause}"),
            },
        );
    }

    fn current_pose(&self, i: usize) -> Pose2D {
        match &self.records[i].status {
            Some(s) => s.pose,
            None => self.vehicles[i].initial_pose,
        }
    }

    pub fn define_workflow(&mut self, now: f64, wf: Workflow) -> CommandResult {
        let mut v_max = f64::INFINITY;
        for v in wf.vehicles() {
            match self.info(v) {
                Some(info) => v_max = v_max.min(info.v_max),
                None => return rejected(format!("unknown_vehicle: {v}")),
            }
        }
        if let Err(e) = wf.validate(&self.zones, v_max) {
            return rejected(format!("invalid_workflow: {e}"));
        }
        let id = wf.id.clone();
        self.workflows.insert(id.clone(), wf);
        self.emit(now, FmsEvent::WorkflowDefined { workflow: id });
        CommandResult::Ack
    }

    fn compile_for(&self, wf: &Workflow, i: usize, start: Pose2D, lap: u32) -> Result<Mission, String> {
        let v = &self.vehicles[i];
        let id = if lap == 0 {
            format!("{}/{}", wf.id, v.id)
        } else {
            format!("{}/{}/{}", wf.id, v.id, lap)
        };
        compile_route(wf, &v.id, start, v.r_min, &self.zones, id).map_err(|e| e.to_string())
    }

    fn start_workflow(&mut self, now: f64, name: &str) -> CommandResult {
        let Some(wf) = self.workflows.get(name).cloned() else {
            return rejected(format!("unknown_workflow: {name}"));
        };
        let mut compiled = Vec::new();
        for v in wf.vehicles() {
            let Some(i) = self.idx(v) else {
                return rejected(format!("unknown_vehicle: {v}"));
            };
            let r = &self.records[i];
            if r.stop_latched {
                return rejected(format!("latched: {v}"));
            }
            if r.running() || r.mode().is_some_and(|m| m != Mode::Idle) {
                return rejected(format!("busy: {v}"));
            }
            match self.compile_for(&wf, i, self.current_pose(i), 0) {
                Ok(m) => compiled.push((i, m)),
                Err(e) => return rejected(format!("planning: {e}")),
            }
        }
        for (i, m) in compiled {
            self.assign(now, i, &wf.id, m, 0, now);
        }
        CommandResult::Ack
    }

    fn assign(&mut self, now: f64, i: usize, workflow: &str, m: Mission, laps: u32, started: f64) {
        let r = &mut self.records[i];
        r.run = Some(ActiveRun {
            workflow: workflow.to_string(),
            mission_id: m.mission_id.clone(),
            started,
            dispatched_at: now,
            finished: false,
            laps,
        });
        r.remember(&m);
        let event = FmsEvent::MissionDispatched {
            vehicle: r.id.clone(),
            mission_id: m.mission_id.clone(),
            workflow: workflow.to_string(),
        };
        r.queue.push_back(FmsMessage::AssignMission(m));
        self.emit(now, event);
    }

    /// Applies an operator command at a tick boundary.
    pub fn command(&mut self, now: f64, cmd: OperatorCommand) -> CommandResult {
        match cmd {
            OperatorCommand::DefineWorkflow { workflow } => self.define_workflow(now, workflow),
            OperatorCommand::StartMission { workflow } => self.start_workflow(now, &workflow),
            OperatorCommand::Pause { vehicle } => {
                let targets: Vec<usize> = match vehicle {
                    Some(v) => match self.idx(&v) {
                        None => return rejected(format!("unknown_vehicle: {v}")),
                        Some(i) if self.records[i].stop_latched => return rejected("latched"),
                        Some(i) => vec![i],
                    },
                    None => (0..self.records.len()).filter(|&i| !self.records[i].stop_latched).collect(),
                };
                for i in targets {
                    self.add_hold(now, i, Hold::Operator);
                }
                CommandResult::Ack
            }
            OperatorCommand::Resume { vehicle } => {
                let Some(i) = self.idx(&vehicle) else {
                    return rejected(format!("unknown_vehicle: {vehicle}"));
                };
                let r = &self.records[i];
                if r.stop_latched || r.mode() == Some(Mode::StoppedNonRecoverable) {
                    return rejected("latched");
                }
                if r.holds.iter().any(|h| matches!(h, Hold::Intrusion(_))) {
                    return rejected("intrusion_active");
                }
                if !r.holds.contains(&Hold::Operator) && r.mode() != Some(Mode::PausedRecoverable) {
                    return rejected("not_paused");
                }
                self.release_hold(now, i, &Hold::Operator);
                self.records[i].last_control = None;
                CommandResult::Ack
            }
            OperatorCommand::Restart { vehicle } => {
                let Some(i) = self.idx(&vehicle) else {
                    return rejected(format!("unknown_vehicle: {vehicle}"));
                };
                let r = &mut self.records[i];
                if !r.stop_latched && r.mode() != Some(Mode::StoppedNonRecoverable) {
                    return rejected("not_latched");
                }
                r.stop_latched = false;
                r.run = None;
                r.holds.retain(|h| matches!(h, Hold::Intrusion(_)));
                r.last_heartbeat = now;
                r.last_control = None;
                r.interference_clear_since = None;
                r.queue.push_back(FmsMessage::Restart);
                r.restarting = true;
                self.emit(now, FmsEvent::LatchCleared { vehicle });
                CommandResult::Ack
            }
            OperatorCommand::RemoteStop { vehicle } => {
                let targets: Vec<usize> = match vehicle {
                    Some(v) => match self.idx(&v) {
                        None => return rejected(format!("unknown_vehicle: {v}")),
                        Some(i) if self.records[i].stop_latched => return rejected("latched"),
                        Some(i) => vec![i],
                    },
                    None => (0..self.records.len()).filter(|&i| !self.records[i].stop_latched).collect(),
                };
                for i in targets {
                    self.latch(now, i, "operator", true);
                }
                CommandResult::Ack
            }
            OperatorCommand::TransitionRoute { vehicle, workflow } => self.transition(now, &vehicle, &workflow),
        }
    }

    fn transition(&mut self, now: f64, vehicle: &str, workflow: &str) -> CommandResult {
        let Some(i) = self.idx(vehicle) else {
            return rejected(format!("unknown_vehicle: {vehicle}"));
        };
        let Some(wf) = self.workflows.get(workflow).cloned() else {
            return rejected(format!("unknown_workflow: {workflow}"));
        };
        if wf.route(vehicle).is_none() {
            return rejected(format!("no_route: {vehicle}"));
        }
        let r = &self.records[i];
        if r.stop_latched {
            return rejected("latched");
        }
        let Some(st) = r.status.as_ref().filter(|_| r.running()) else {
            return rejected("not_running");
        };
        if !matches!(st.mode, Mode::Executing | Mode::PausedRecoverable) {
            return rejected("not_running");
        }
        // the swap happens when the current action ends, so plan from there
        let mission = st.mission_id.as_ref().and_then(|id| r.missions.get(id));
        let start = mission
            .and_then(|m| {
                m.actions[..(st.action_index + 1).min(m.actions.len())]
                    .iter()
                    .rev()
                    .find_map(|a| match a {
                        Action::FollowPath { path, .. } => Some(path.goal()),
                        _ => None,
                    })
            })
            .unwrap_or(st.pose);
        let lap = r.run.as_ref().map_or(0, |r| r.laps + 1);
        let m = match self.compile_for(&wf, i, start, lap) {
            Ok(m) => m,
            Err(e) => return rejected(format!("planning: {e}")),
        };
        let r = &mut self.records[i];
        let started = r.run.as_ref().map_or(now, |run| run.started);
        r.run = Some(ActiveRun {
            workflow: wf.id.clone(),
            mission_id: m.mission_id.clone(),
            started,
            dispatched_at: now,
            finished: false,
            laps: lap,
        });
        r.remember(&m);
        let event = FmsEvent::TransitionDispatched {
            vehicle: vehicle.to_string(),
            mission_id: m.mission_id.clone(),
            workflow: wf.id.clone(),
        };
        r.queue.push_back(FmsMessage::Transition(m));
        self.emit(now, event);
        CommandResult::Ack
    }

    pub fn receive(&mut self, now: f64, msg: Uplink) {
        match msg {
            Uplink::Status(st) => {
                if let Some(i) = self.idx(&st.vehicle) {
                    let r = &mut self.records[i];
                    r.last_heartbeat = now;
                    r.restarting &= st.mode == Mode::StoppedNonRecoverable;
                    r.status = Some(st);
                }
            }
            Uplink::PersonFix { person, stamp, x, y } => {
                let (vx, vy) = match self.persons.get(&person) {
                    Some(p) if stamp > p.stamp => ((x - p.x) / (stamp - p.stamp), (y - p.y) / (stamp - p.stamp)),
                    Some(p) => (p.vx, p.vy),
                    None => (0.0, 0.0),
                };
                self.persons.insert(
                    person.clone(),
                    PersonTrack {
                        id: person,
                        x,
                        y,
                        stamp,
                        vx,
                        vy,
                    },
                );
            }
        }
    }

    /// One supervision cycle; returns the messages to put on the wire.
    pub fn step(&mut self, now: f64) -> Vec<Outgoing> {
        if now + 1e-9 >= self.next_ping {
            for r in &mut self.records {
                r.queue.push_back(FmsMessage::Ping);
            }
            self.next_ping += self.params.heartbeat_period;
        }
        self.supervise(now);
        self.track_missions(now);
        self.check_intrusions(now);
        self.check_traffic(now);
        self.reconcile(now);
        let mut out = Vec::new();
        for r in &mut self.records {
            for (message, mirror_stop) in dispatch(&mut r.queue) {
                out.push(Outgoing {
                    vehicle: r.id.clone(),
                    message,
                    mirror_stop,
                });
            }
        }
        out
    }

    fn supervise(&mut self, now: f64) {
        let before: Vec<f64> = self.records.iter().map(|r| r.last_heartbeat).collect();
        let lost = supervise_heartbeats(&mut self.records, now, self.params.heartbeat_timeout);
        for id in lost {
            let i = self.idx(&id).expect("record");
            self.emit(
                now,
                FmsEvent::HeartbeatLost {
                    vehicle: id,
                    age: now - before[i],
                },
            );
            self.latch(now, i, "heartbeat_lost", true);
        }
        for i in 0..self.records.len() {
            let r = &self.records[i];
            if !r.stop_latched && !r.restarting && r.mode() == Some(Mode::StoppedNonRecoverable) {
                self.latch(now, i, "vehicle_stopped", false);
            }
        }
    }

    fn track_missions(&mut self, now: f64) {
        for i in 0..self.records.len() {
            let r = &self.records[i];
            let (Some(st), Some(run)) = (&r.status, &r.run) else {
                continue;
            };
            if run.finished || r.stop_latched {
                continue;
            }
            if st.mission_complete && st.mission_id.as_deref() == Some(&run.mission_id) && st.mode == Mode::Idle {
                let (vehicle, mission_id) = (r.id.clone(), run.mission_id.clone());
                let looping = self.workflows.get(&run.workflow).filter(|w| w.looping).cloned();
                let (laps, pose) = (run.laps + 1, st.pose);
                self.emit(
                    now,
                    FmsEvent::MissionFinished {
                        vehicle: vehicle.clone(),
                        mission_id,
                    },
                );
                if let Some(wf) = looping {
                    match self.compile_for(&wf, i, pose, laps) {
                        Ok(m) => self.assign(now, i, &wf.id, m, laps, now),
                        Err(reason) => {
                            self.emit(now, FmsEvent::PlanningFailed { vehicle, reason });
                            if let Some(run) = self.records[i].run.as_mut() {
                                run.finished = true;
                            }
                        }
                    }
                } else if let Some(run) = self.records[i].run.as_mut() {
                    run.finished = true;
                }
            } else if st.mode == Mode::Idle
                && st.mission_id.as_deref() != Some(&run.mission_id)
                && now - run.dispatched_at > 4.0 * self.params.command_retry
            {
                // the assignment was lost on the way
                let id = run.mission_id.clone();
                let m = r.missions.get(&id).cloned();
                let r = &mut self.records[i];
                if let (Some(m), Some(run)) = (m, r.run.as_mut()) {
                    run.dispatched_at = now;
                    r.queue.push_back(FmsMessage::AssignMission(m));
                }
            }
        }
    }

    /// Vehicles currently bound to each operational zone.
    fn zone_vehicles(&self, zone: &str) -> Vec<usize> {
        (0..self.records.len())
            .filter(|&i| {
                let r = &self.records[i];
                r.running()
                    && r.run
                        .as_ref()
                        .and_then(|run| self.workflows.get(&run.workflow))
                        .is_some_and(|w| w.zones.iter().any(|z| z == zone))
            })
            .collect()
    }

    fn check_intrusions(&mut self, now: f64) {
        let mut positions = Vec::new();
        for p in self.persons.values() {
            positions.push((p.id.clone(), p.predict(now)));
            if self.params.intrusion_lookahead > 0.0 {
                positions.push((p.id.clone(), p.predict(now + self.params.intrusion_lookahead)));
            }
        }
        let zone_ids: Vec<String> = self.zone_states.keys().cloned().collect();
        for zid in zone_ids {
            let vehicles = self.zone_vehicles(&zid);
            let zone = self.zones.iter().find(|z| z.id == zid).expect("zone");
            let intruders: BTreeSet<String> = if vehicles.is_empty() {
                BTreeSet::new()
            } else {
                check_zone_intrusion(&[zone], &positions)
                    .into_iter()
                    .map(|(_, who)| who)
                    .collect()
            };
            let hold = Hold::Intrusion(zid.clone());
            let state = self.zone_states.get_mut(&zid).expect("zone state");
            if !intruders.is_empty() {
                let fresh = !state.intruded;
                state.intruded = true;
                state.clear_since = None;
                state.intruders = intruders.clone();
                if fresh {
                    let names = vehicles.iter().map(|&i| self.records[i].id.clone()).collect();
                    self.emit(
                        now,
                        FmsEvent::IntrusionDetected {
                            zone: zid.clone(),
                            intruders: intruders.into_iter().collect(),
                            vehicles: names,
                        },
                    );
                    self.emit(
                        now,
                        FmsEvent::Alert {
                            vehicle: None,
                            message: format!("intrusion in zone {zid}"),
                        },
                    );
                }
                for &i in &vehicles {
                    self.add_hold(now, i, hold.clone());
                }
            } else if state.intruded {
                state.intruders.clear();
                let since = *state.clear_since.get_or_insert(now);
                if now - since + 1e-9 >= self.params.intrusion_clear_hold {
                    state.intruded = false;
                    state.clear_since = None;
                    self.emit(now, FmsEvent::ZoneCleared { zone: zid.clone() });
                    // resuming after an intrusion is the operator's call
                    for i in 0..self.records.len() {
                        if self.records[i].holds.contains(&hold) {
                            self.release_hold(now, i, &hold);
                            self.add_hold(now, i, Hold::Operator);
                        }
                    }
                }
            }
        }
    }

    /// Safety circle of a vehicle, extrapolated over report staleness.
    fn vehicle_track(&self, i: usize, now: f64) -> Option<(Track, Contender)> {
        let r = &self.records[i];
        let st = r.status.as_ref()?;
        let age = (now - st.stamp).max(0.0);
        let center = (st.pose.x + st.velocity.0 * age, st.pose.y + st.velocity.1 * age);
        let mobile = r.mobile();
        let velocity = if mobile { st.intent } else { st.velocity };
        let info = &self.vehicles[i];
        Some((
            Track {
                circle: SafetyCircle {
                    actor_id: r.id.clone(),
                    center,
                    radius: info.footprint_radius + self.params.safety_margin,
                },
                velocity,
            },
            Contender {
                id: r.id.clone(),
                kind: ActorKind::Vehicle,
                mobile,
                mission_start: r.run.as_ref().map_or(f64::INFINITY, |run| run.started),
            },
        ))
    }

    /// Current safety circles of all known actors.
    pub fn safety_circles(&self, now: f64) -> Vec<SafetyCircle> {
        let mut out: Vec<SafetyCircle> = (0..self.records.len())
            .filter_map(|i| self.vehicle_track(i, now).map(|t| t.0.circle))
            .collect();
        for p in self.persons.values() {
            out.push(SafetyCircle {
                actor_id: p.id.clone(),
                center: p.predict(now),
                radius: self.params.person_radius + self.params.safety_margin,
            });
        }
        out
    }

    /// Planned positions still ahead of a vehicle that wants to drive.
    fn remaining_path(&self, i: usize) -> Option<Vec<(f64, f64)>> {
        let r = &self.records[i];
        if !r.mobile() {
            return None;
        }
        let st = r.status.as_ref()?;
        let samples = r.samples.get(st.mission_id.as_ref()?)?;
        let max = (PATH_CHECK_LENGTH / PATH_SAMPLE_STEP) as usize;
        let mut out = Vec::with_capacity(max);
        for (k, action) in samples.iter().enumerate().skip(st.action_index) {
            let from = if k == st.action_index {
                let d = |p: &(f64, f64)| (p.0 - st.pose.x).hypot(p.1 - st.pose.y);
                (0..action.len()).min_by(|&a, &b| d(&action[a]).total_cmp(&d(&action[b]))).unwrap_or(0)
            } else {
                0
            };
            out.extend(action[from..].iter().take(max - out.len()));
            if out.len() >= max {
                break;
            }
        }
        Some(out)
    }

    /// Where a vehicle will come to rest if told to stop now.
    fn stop_point(&self, i: usize, track: &Track) -> (f64, f64) {
        let Some(st) = self.records[i].status.as_ref() else {
            return track.circle.center;
        };
        let (vx, vy) = st.velocity;
        let v = vx.hypot(vy);
        if v < 1e-6 {
            return track.circle.center;
        }
        let d = v * self.params.stop_latency + v * v / (2.0 * self.params.assumed_decel);
        (track.circle.center.0 + vx / v * d, track.circle.center.1 + vy / v * d)
    }

    /// Whether `a` driving on would run into `b` once `b` has stopped.
    fn blocked(&self, a: (&Track, Option<usize>), b: (&Track, Option<usize>), shrink: f64) -> bool {
        let reach = a.0.circle.radius + b.0.circle.radius - 2.0 * shrink;
        let stop = b.1.map_or(b.0.circle.center, |j| self.stop_point(j, b.0));
        let hit = |p: &(f64, f64)| (p.0 - stop.0).hypot(p.1 - stop.1) < reach;
        match a.1.and_then(|i| self.remaining_path(i)) {
            Some(path) => hit(&a.0.circle.center) || path.iter().any(hit),
            None => {
                let mut at = a.0.clone();
                at.circle.radius -= shrink;
                let parked = Track {
                    circle: SafetyCircle {
                        actor_id: b.0.circle.actor_id.clone(),
                        center: stop,
                        radius: b.0.circle.radius - shrink,
                    },
                    velocity: (0.0, 0.0),
                };
                first_conflict(&at, &parked, self.params.horizon, PREDICTION_STEP).is_some()
            }
        }
    }

    /// Which side may drive on: `Some(false)` keeps the winner, `Some(true)`
    /// lets the yielder go first because the winner's path is blocked, and
    /// `None` means neither can move without contact.
    fn pass_order(&self, winner: (&Track, Option<usize>), yielder: (&Track, Option<usize>)) -> Option<bool> {
        let m = self.params.safety_margin;
        if !self.blocked(winner, yielder, 0.0) {
            Some(false)
        } else if !self.blocked(yielder, winner, 0.0) {
            Some(true)
        } else if !self.blocked(winner, yielder, m) {
            Some(false)
        } else if !self.blocked(yielder, winner, m) {
            Some(true)
        } else {
            None
        }
    }

    fn check_traffic(&mut self, now: f64) {
        let mut tracks = Vec::new();
        let mut who = Vec::new();
        for i in 0..self.records.len() {
            if let Some((t, c)) = self.vehicle_track(i, now) {
                tracks.push(t);
                who.push((Some(i), c));
            }
        }
        for p in self.persons.values() {
            tracks.push(Track {
                circle: SafetyCircle {
                    actor_id: p.id.clone(),
                    center: p.predict(now),
                    radius: self.params.person_radius + self.params.safety_margin,
                },
                velocity: (p.vx, p.vy),
            });
            who.push((
                None,
                Contender {
                    id: p.id.clone(),
                    kind: ActorKind::Person,
                    mobile: true,
                    mission_start: f64::NEG_INFINITY,
                },
            ));
        }
        let pos = |id: &str| tracks.iter().position(|t| t.circle.actor_id == id).expect("track");
        let mut held: BTreeSet<usize> = BTreeSet::new();
        let mut active = BTreeMap::new();
        for c in check_interference(&tracks, self.params.horizon, PREDICTION_STEP) {
            let (ia, ib) = (pos(&c.a), pos(&c.b));
            let Some((y, mut rule)) = choose_yielder(&who[ia].1, &who[ib].1) else {
                continue;
            };
            let (mut yi, mut wi) = if y == 0 { (ia, ib) } else { (ib, ia) };
            let mut both = false;
            if matches!(rule, YieldRule::MissionOrder | YieldRule::IdOrder) {
                match self.pass_order((&tracks[wi], who[wi].0), (&tracks[yi], who[yi].0)) {
                    Some(false) => {}
                    Some(true) => {
                        std::mem::swap(&mut yi, &mut wi);
                        rule = YieldRule::Blocked;
                    }
                    None => both = true,
                }
            }
            if both && !self.conflicts.contains_key(&(c.a.clone(), c.b.clone())) {
                self.emit(
                    now,
                    FmsEvent::Alert {
                        vehicle: None,
                        message: format!("{} and {} block each other; operator action required", c.a, c.b),
                    },
                );
            }
            for k in if both { vec![yi, wi] } else { vec![yi] } {
                if let Some(i) = who[k].0 {
                    held.insert(i);
                }
            }
            active.insert(
                (c.a.clone(), c.b.clone()),
                (who[yi].1.id.clone(), who[wi].1.id.clone(), rule, c.time),
            );
        }
        let gone: Vec<(String, String)> = self
            .conflicts
            .keys()
            .filter(|k| !active.contains_key(*k))
            .cloned()
            .collect();
        for (a, b) in gone {
            self.conflicts.remove(&(a.clone(), b.clone()));
            self.emit(now, FmsEvent::ConflictCleared { a, b });
        }
        for ((a, b), (yielder, winner, rule, time)) in active {
            let key = (a.clone(), b.clone());
            let changed = self.conflicts.get(&key).is_none_or(|prev| prev.0 != yielder);
            self.conflicts.insert(key, (yielder.clone(), rule, time));
            if changed {
                self.emit(
                    now,
                    FmsEvent::ConflictDetected {
                        a,
                        b,
                        time,
                        yielder,
                        winner,
                        rule,
                    },
                );
            }
        }
        for i in 0..self.records.len() {
            if held.contains(&i) {
                self.records[i].interference_clear_since = None;
                self.add_hold(now, i, Hold::Interference);
            } else if self.records[i].holds.contains(&Hold::Interference) {
                let since = *self.records[i].interference_clear_since.get_or_insert(now);
                if now - since + 1e-9 >= self.params.interference_clear_hold {
                    self.records[i].interference_clear_since = None;
                    self.release_hold(now, i, &Hold::Interference);
                }
            }
        }
    }

    fn reconcile(&mut self, now: f64) {
        for i in 0..self.records.len() {
            let r = &self.records[i];
            if r.stop_latched {
                continue;
            }
            let Some(st) = &r.status else { continue };
            if st.held_by_fault.is_some() && !r.holds.contains(&Hold::Operator) {
                let fault = st.held_by_fault;
                self.add_hold(now, i, Hold::Operator);
                let vehicle = Some(self.records[i].id.clone());
                self.emit(
                    now,
                    FmsEvent::Alert {
                        vehicle,
                        message: format!("paused by {fault:?}; operator resume required"),
                    },
                );
            }
            let r = &self.records[i];
            let st = r.status.as_ref().expect("status");
            let want_pause = !r.holds.is_empty();
            let due = |pause: bool| match r.last_control {
                Some((p, t)) if p == pause => now - t + 1e-9 >= self.params.command_retry,
                _ => true,
            };
            let send = if want_pause && st.mode == Mode::Executing && due(true) {
                Some(true)
            } else if !want_pause
                && st.mode == Mode::PausedRecoverable
                && st.fault.is_none()
                && st.held_by_fault.is_none()
                && r.running()
                && due(false)
            {
                Some(false)
            } else {
                None
            };
            if let Some(pause) = send {
                let holds: Vec<Hold> = r.holds.iter().cloned().collect();
                let r = &mut self.records[i];
                r.last_control = Some((pause, now));
                let vehicle = r.id.clone();
                if pause {
                    r.queue.push_back(FmsMessage::Pause);
                    self.emit(now, FmsEvent::PauseSent { vehicle, holds });
                } else {
                    r.queue.push_back(FmsMessage::Resume);
                    self.emit(now, FmsEvent::ResumeSent { vehicle });
                }
            }
        }
    }
}
