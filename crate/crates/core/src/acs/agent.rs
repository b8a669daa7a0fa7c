use serde::{Deserialize, Serialize};

use super::control::{longitudinal_control, pure_pursuit, upper_body_pid, ControlParams, PidState};
use super::ekf::{EstimatorParams, EstimatorState, GnssOutcome};
use super::faults::{detect_faults, FaultParams};
use super::fsm::{on_fault, on_message, FaultKind, Mode, Outcome, RejectReason};
use super::mission::{Action, Mission};
use crate::geom::{DirectionRun, Pose2D};
use crate::proto::{AgentStatus, FmsMessage};
use crate::world::{Command, SensorReading, VehicleSpec};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentParams {
    pub control: ControlParams,
    pub faults: FaultParams,
}

/// Things the on-board stack reports for the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AgentEvent {
    ModeChanged { from: Mode, to: Mode, cause: String },
    Rejected { message: String, reason: RejectReason },
    MissionAccepted { mission_id: String },
    TransitionQueued { mission_id: String },
    MissionSwapped { mission_id: String },
    FaultRaised { fault: FaultKind },
    FaultCleared { fault: FaultKind },
    GnssGated { nis: f64 },
    GnssReanchored { nis: f64 },
    GoalReached { action: usize, goal: Pose2D },
    ActionCompleted { action: usize },
    MissionCompleted { mission_id: String },
}

/// One control-cycle record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub stamp: f64,
    pub vehicle: String,
    pub mode: Mode,
    pub pose: Pose2D,
    pub speed: f64,
    pub trace: f64,
    pub action_index: usize,
    pub command: Command,
}

#[derive(Debug, Clone, Default)]
struct Progress {
    s: f64,
    run: usize,
    runs: Vec<DirectionRun>,
    stopping: bool,
    pid: PidState,
    elapsed: f64,
}

/// The per-vehicle autonomous control stack.
#[derive(Debug, Clone)]
pub struct Agent {
    id: String,
    spec: VehicleSpec,
    params: AgentParams,
    est_params: EstimatorParams,
    est: EstimatorState,
    mode: Mode,
    mission: Option<Mission>,
    action_index: usize,
    progress: Progress,
    pending: Option<Mission>,
    mission_complete: bool,
    fault: Option<FaultKind>,
    clear_since: Option<f64>,
    operator_hold: bool,
    fault_hold: Option<FaultKind>,
    last_msg: f64,
    last_imu: f64,
    last_gnss: f64,
    last_cmd: Command,
    status_due: bool,
    events: Vec<(f64, AgentEvent)>,
}

impl Agent {
    pub fn new(
        id: impl Into<String>,
        spec: VehicleSpec,
        params: AgentParams,
        est_params: EstimatorParams,
        est: EstimatorState,
        now: f64,
    ) -> Self {
        Self {
            id: id.into(),
            spec,
            params,
            est_params,
            est,
            mode: Mode::Idle,
            mission: None,
            action_index: 0,
            progress: Progress::default(),
            pending: None,
            mission_complete: false,
            fault: None,
            clear_since: None,
            operator_hold: false,
            fault_hold: None,
            last_msg: now,
            last_imu: now,
            last_gnss: now,
            last_cmd: Command::ZERO,
            status_due: false,
            events: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn fault(&self) -> Option<FaultKind> {
        self.fault
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.est
    }

    pub fn mission(&self) -> Option<&Mission> {
        self.mission.as_ref()
    }

    pub fn action_index(&self) -> usize {
        self.action_index
    }

    /// Arc length already covered on the current path action.
    pub fn path_progress(&self) -> f64 {
        self.progress.s
    }

    pub fn mission_complete(&self) -> bool {
        self.mission_complete
    }

    /// True while the drive train must be held by the stop latch.
    pub fn latched(&self) -> bool {
        self.mode == Mode::StoppedNonRecoverable
    }

    pub fn take_events(&mut self) -> Vec<(f64, AgentEvent)> {
        std::mem::take(&mut self.events)
    }

    /// Whether a heartbeat reply is owed; clears the flag.
    pub fn take_status_due(&mut self) -> bool {
        std::mem::take(&mut self.status_due)
    }

    fn set_mode(&mut self, now: f64, to: Mode, cause: &str) {
        if to != self.mode {
            self.events.push((
                now,
                AgentEvent::ModeChanged {
                    from: self.mode,
                    to,
                    cause: cause.to_string(),
                },
            ));
            self.mode = to;
        }
    }

    fn start_mission(&mut self, mission: Mission) {
        self.mission = Some(mission);
        self.action_index = 0;
        self.progress = Progress::default();
        self.mission_complete = false;
    }

    pub fn handle_message(&mut self, now: f64, msg: FmsMessage) {
        self.last_msg = now;
        let kind = match &msg {
            FmsMessage::Ping => {
                self.status_due = true;
                return;
            }
            FmsMessage::Transition(m) => {
                if matches!(self.mode, Mode::Executing | Mode::PausedRecoverable) {
                    self.events.push((
                        now,
                        AgentEvent::TransitionQueued {
                            mission_id: m.mission_id.clone(),
                        },
                    ));
                    self.pending = Some(m.clone());
                } else {
                    let reason = if self.latched() {
                        RejectReason::Latched
                    } else {
                        RejectReason::InvalidInMode
                    };
                    self.events.push((
                        now,
                        AgentEvent::Rejected {
                            message: msg.name().into(),
                            reason,
                        },
                    ));
                }
                return;
            }
            other => other.kind().expect("fsm message"),
        };
        // a delivered message is proof the link is back
        if self.fault == Some(FaultKind::ConnectionLoss) {
            self.clear_fault(now);
        }
        match on_message(self.mode, kind, self.fault) {
            Outcome::Rejected(reason) => self.events.push((
                now,
                AgentEvent::Rejected {
                    message: msg.name().into(),
                    reason,
                },
            )),
            Outcome::Accepted(to) => {
                let name = msg.name();
                match msg {
                    FmsMessage::AssignMission(m) => {
                        self.events.push((
                            now,
                            AgentEvent::MissionAccepted {
                                mission_id: m.mission_id.clone(),
                            },
                        ));
                        self.start_mission(m);
                    }
                    FmsMessage::Pause => self.operator_hold = true,
                    FmsMessage::Resume => {
                        self.operator_hold = false;
                        self.fault_hold = None;
                        self.progress.pid.prev_error = None;
                    }
                    FmsMessage::Restart => {
                        self.mission = None;
                        self.pending = None;
                        self.action_index = 0;
                        self.progress = Progress::default();
                        self.mission_complete = false;
                        self.fault = None;
                        self.clear_since = None;
                        self.operator_hold = false;
                        self.fault_hold = None;
                    }
                    _ => {}
                }
                self.set_mode(now, to, name);
            }
        }
    }

    /// Raises a fault reported by the vehicle hardware.
    pub fn inject_fault(&mut self, now: f64, fault: FaultKind) {
        self.raise(now, fault);
    }

    fn raise(&mut self, now: f64, fault: FaultKind) {
        if self.fault == Some(fault) {
            return;
        }
        self.events.push((now, AgentEvent::FaultRaised { fault }));
        self.fault = Some(fault);
        self.clear_since = None;
        let to = on_fault(self.mode, fault);
        if to == Mode::PausedRecoverable && !fault.auto_resume() {
            self.operator_hold = true;
            self.fault_hold = Some(fault);
        }
        self.set_mode(now, to, "fault");
    }

    fn clear_fault(&mut self, now: f64) {
        if let Some(fault) = self.fault.take() {
            self.events.push((now, AgentEvent::FaultCleared { fault }));
            self.clear_since = None;
            if self.mode == Mode::PausedRecoverable && !self.operator_hold {
                self.set_mode(now, Mode::Executing, "fault_cleared");
            }
        }
    }

    /// Feeds sensor readings in stamp order to the estimator.
    pub fn process_readings(&mut self, now: f64, readings: &[SensorReading]) {
        for r in readings {
            match r {
                SensorReading::ImuSample(s) => {
                    let dt = s.stamp - self.est.last_imu_stamp;
                    if dt > 0.0 {
                        self.est.predict(s, dt, &self.est_params);
                    }
                    self.last_imu = s.stamp;
                }
                SensorReading::GnssFix(f) => {
                    self.last_gnss = f.stamp;
                    match self.est.update_gnss(f, &self.est_params) {
                        GnssOutcome::Gated { nis } => self.events.push((now, AgentEvent::GnssGated { nis })),
                        GnssOutcome::Reanchored { nis } => self.events.push((now, AgentEvent::GnssReanchored { nis })),
                        _ => {}
                    }
                }
            }
        }
    }

    fn supervise(&mut self, now: f64) {
        let cond = detect_faults(
            &self.params.faults,
            now - self.last_msg,
            &[now - self.last_imu, now - self.last_gnss],
            &self.est,
        );
        match (self.fault, cond) {
            (_, Some(f)) if !f.recoverable() => self.raise(now, f),
            (Some(f), _) if !f.recoverable() => {}
            (None, Some(f)) => self.raise(now, f),
            (Some(f), Some(g)) if f != g => self.raise(now, g),
            (Some(_), Some(_)) => self.clear_since = None,
            (Some(f), None) => {
                let since = *self.clear_since.get_or_insert(now);
                let hold = if f.auto_resume() {
                    self.params.faults.resume_hold
                } else {
                    0.0
                };
                if now - since + 1e-9 >= hold {
                    self.clear_fault(now);
                }
            }
            (None, None) => {}
        }
    }

    /// One control cycle: fault supervision, then the active action.
    pub fn control(&mut self, now: f64, dt: f64, resolver_angle: f64) -> Command {
        self.supervise(now);
        let cmd = if self.mode == Mode::Executing {
            self.execute(now, dt, resolver_angle)
        } else {
            Command::ZERO
        };
        self.last_cmd = cmd;
        cmd
    }

    fn execute(&mut self, now: f64, dt: f64, resolver_angle: f64) -> Command {
        let Some(mission) = self.mission.as_ref() else {
            return Command::ZERO;
        };
        let Some(action) = mission.actions.get(self.action_index).cloned() else {
            self.finish_action(now);
            return Command::ZERO;
        };
        let c = self.params.control.clone();
        let pose = self.est.pose();
        let v_est = self.est.speed();
        let mut done = false;
        let mut cmd = Command::ZERO;
        match action {
            Action::FollowPath { path, cruise_speed } => {
                let p = &mut self.progress;
                if p.runs.is_empty() && p.run == 0 {
                    p.runs = path.direction_runs();
                }
                match p.runs.get(p.run).copied() {
                    None => done = true,
                    Some(run) => {
                        p.s = path.nearest_within(&pose, p.s.max(run.start_s), run.end_s);
                        if !p.stopping {
                            let lon = longitudinal_control(&run, p.s, cruise_speed, &c);
                            if lon.goal_reached {
                                p.stopping = true;
                                if p.run + 1 == p.runs.len() {
                                    self.events.push((
                                        now,
                                        AgentEvent::GoalReached {
                                            action: self.action_index,
                                            goal: path.goal(),
                                        },
                                    ));
                                }
                            } else {
                                cmd.v_ref = lon.v_ref;
                                cmd.omega_ref = pure_pursuit(
                                    &pose,
                                    &path,
                                    &run,
                                    p.s,
                                    lon.v_ref,
                                    c.lookahead,
                                    self.spec.omega_max,
                                );
                            }
                        }
                        if p.stopping && v_est.abs() < c.standstill_speed {
                            p.stopping = false;
                            p.run += 1;
                            if p.run >= p.runs.len() {
                                done = true;
                            } else {
                                p.s = p.runs[p.run].start_s;
                            }
                        }
                    }
                }
            }
            Action::RotateUpper { target_angle } => {
                let (rate, settled) = upper_body_pid(
                    resolver_angle,
                    target_angle,
                    dt,
                    &mut self.progress.pid,
                    &c.pid,
                    self.spec.upper_rate_max,
                    &c,
                );
                if settled {
                    done = true;
                } else {
                    cmd.upper_rate_ref = rate;
                }
            }
            Action::Dwell { duration } => {
                self.progress.elapsed += dt;
                done = self.progress.elapsed + 1e-9 >= duration;
            }
        }
        if done {
            self.finish_action(now);
        }
        cmd
    }

    fn finish_action(&mut self, now: f64) {
        let Some(mission) = self.mission.as_ref() else {
            return;
        };
        if self.action_index < mission.actions.len() {
            self.events.push((
                now,
                AgentEvent::ActionCompleted {
                    action: self.action_index,
                },
            ));
        }
        if let Some(next) = self.pending.take() {
            self.events.push((
                now,
                AgentEvent::MissionSwapped {
                    mission_id: next.mission_id.clone(),
                },
            ));
            self.start_mission(next);
            return;
        }
        self.action_index += 1;
        self.progress = Progress::default();
        if self.action_index >= mission.actions.len() {
            let mission_id = mission.mission_id.clone();
            self.mission_complete = true;
            self.events.push((now, AgentEvent::MissionCompleted { mission_id }));
            self.set_mode(now, Mode::Idle, "mission_complete");
        }
    }

    /// Velocity along the current path that the controller is aiming for.
    fn intent(&self) -> (f64, f64) {
        if !matches!(self.mode, Mode::Executing | Mode::PausedRecoverable) || self.progress.stopping {
            return (0.0, 0.0);
        }
        let Some(Action::FollowPath { path, cruise_speed }) =
            self.mission.as_ref().and_then(|m| m.actions.get(self.action_index))
        else {
            return (0.0, 0.0);
        };
        let run = match self.progress.runs.get(self.progress.run) {
            Some(r) => *r,
            None => match path.direction_runs().first() {
                Some(r) if self.progress.runs.is_empty() => *r,
                _ => return (0.0, 0.0),
            },
        };
        let c = &self.params.control;
        let s = self.progress.s.clamp(run.start_s, run.end_s);
        let lon = longitudinal_control(&run, s, *cruise_speed, c);
        let heading = path.pose_along(s).map(|p| p.0.theta).unwrap_or(0.0);
        (lon.v_ref * heading.cos(), lon.v_ref * heading.sin())
    }

    pub fn status(&self, now: f64, upper_angle: f64) -> AgentStatus {
        AgentStatus {
            vehicle: self.id.clone(),
            stamp: now,
            mode: self.mode,
            fault: self.fault,
            pose: self.est.pose(),
            speed: self.est.speed(),
            velocity: {
                let th = self.est.pose().theta;
                (self.est.speed() * th.cos(), self.est.speed() * th.sin())
            },
            intent: self.intent(),
            upper_angle,
            mission_id: self.mission.as_ref().map(|m| m.mission_id.clone()),
            action_index: self.action_index,
            mission_complete: self.mission_complete,
            held_by_fault: self.fault_hold.filter(|_| self.mode == Mode::PausedRecoverable),
            position_trace: self.est.position_trace(),
        }
    }

    pub fn telemetry(&self, now: f64) -> Telemetry {
        Telemetry {
            stamp: now,
            vehicle: self.id.clone(),
            mode: self.mode,
            pose: self.est.pose(),
            speed: self.est.speed(),
            trace: self.est.trace(),
            action_index: self.action_index,
            command: self.last_cmd,
        }
    }
}
