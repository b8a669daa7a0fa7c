use std::f64::consts::FRAC_PI_2;

use fleetsim_core::acs::{
    Action, Agent, AgentParams, ControlParams, EstimatorParams, EstimatorState, Mission, Mode,
};
use fleetsim_core::geom::{plan_rs_path, Pose2D};
use fleetsim_core::proto::FmsMessage;
use fleetsim_core::world::{SensorConfig, VehicleBody, VehicleSpec, VehicleState, World};

struct Rig {
    world: World,
    agent: Agent,
}

impl Rig {
    fn new(start: Pose2D, sensors: SensorConfig, seed: u64, payload: f64) -> Self {
        let spec = VehicleSpec::default();
        let mut state = VehicleState::at_rest(start);
        state.payload_mass = payload;
        let body = VehicleBody::new("cc1", spec.clone(), state);
        let est_params = EstimatorParams::matching(&sensors);
        let est = EstimatorState::new(start, 0.0, est_params.initial_covariance(), 0.0);
        let world = World::new(0.02, sensors, seed, vec![body], vec![]).unwrap();
        let agent = Agent::new("cc1", spec, AgentParams::default(), est_params, est, 0.0);
        Self { world, agent }
    }

    fn step(&mut self) {
        let now = self.world.time();
        let readings = self.world.emit_sensors("cc1").unwrap();
        self.agent.process_readings(now, &readings);
        // keep the link alive
        if self.world.tick().is_multiple_of(10) {
            self.agent.handle_message(now, FmsMessage::Ping);
        }
        let resolver = self.world.resolver_angle("cc1").unwrap();
        let cmd = self.agent.control(now, self.world.dt(), resolver);
        self.world.apply_command("cc1", cmd).unwrap();
        self.world.step();
    }

    fn run_until_idle(&mut self, limit: f64) -> bool {
        while self.world.time() < limit {
            self.step();
            if self.agent.mode() == Mode::Idle && self.agent.mission_complete() {
                // let the vehicle settle
                for _ in 0..50 {
                    self.step();
                }
                return true;
            }
        }
        false
    }
}

fn drive(start: Pose2D, goal: Pose2D, sensors: SensorConfig, seed: u64, payload: f64) -> (f64, Rig) {
    let path = plan_rs_path(&start, &goal, VehicleSpec::default().r_min).unwrap();
    let mut rig = Rig::new(start, sensors, seed, payload);
    let mission = Mission::new(
        "m",
        vec![Action::FollowPath {
            path,
            cruise_speed: 2.0,
        }],
    );
    rig.agent.handle_message(0.0, FmsMessage::AssignMission(mission));
    assert!(rig.run_until_idle(200.0), "mission did not finish");
    let p = rig.world.vehicle("cc1").unwrap().state.pose;
    ((p.x - goal.x).hypot(p.y - goal.y), rig)
}

#[test]
fn straight_drive_stops_at_goal() {
    let (err, _) = drive(
        Pose2D::origin(),
        Pose2D::new(30.0, 0.0, 0.0),
        SensorConfig::default(),
        1,
        0.0,
    );
    assert!(err < 0.5, "error {err}");
}

#[test]
fn maneuver_with_cusp_stops_at_goal() {
    for (i, goal) in [
        Pose2D::new(5.0, 12.0, FRAC_PI_2),
        Pose2D::new(-10.0, 4.0, 3.0),
        Pose2D::new(20.0, -15.0, -1.0),
    ]
    .into_iter()
    .enumerate()
    {
        let (err, _) = drive(Pose2D::origin(), goal, SensorConfig::default(), i as u64, 5000.0);
        assert!(err < 0.5, "goal {goal:?} error {err}");
    }
}

#[test]
fn rotate_upper_settles_without_overshoot() {
    let mut rig = Rig::new(Pose2D::origin(), SensorConfig::ideal(), 1, 0.0);
    let mission = Mission::new("r", vec![Action::RotateUpper { target_angle: FRAC_PI_2 }]);
    rig.agent.handle_message(0.0, FmsMessage::AssignMission(mission));
    let mut peak: f64 = 0.0;
    let mut settled_at = None;
    let tol = ControlParams::default().angle_tol;
    while rig.world.time() < 10.0 {
        rig.step();
        let a = rig.world.vehicle("cc1").unwrap().state.upper_angle;
        peak = peak.max(a);
        if (a - FRAC_PI_2).abs() < 0.02 * FRAC_PI_2 {
            settled_at.get_or_insert(rig.world.time());
        } else {
            settled_at = None;
        }
    }
    let settled_at = settled_at.expect("never settled");
    assert!(settled_at < 5.0, "settled at {settled_at}");
    assert!(peak < FRAC_PI_2 * 1.1, "peak {peak}");
    assert!(rig.agent.mission_complete());
    let final_err = (rig.world.vehicle("cc1").unwrap().state.upper_angle - FRAC_PI_2).abs();
    assert!(final_err < tol);
}
