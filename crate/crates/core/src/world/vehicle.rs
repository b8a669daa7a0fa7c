use serde::{Deserialize, Serialize};

use crate::geom::{normalize_angle, Pose2D};

/// Physical parameters of a crawler carrier.
///
/// Defaults follow the 6.0 x 2.88 x 3.2 m CD110R-3 with its 10 km/h top speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSpec {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub a_dec: f64,
    pub omega_max: f64,
    pub upper_rate_max: f64,
    pub r_min: f64,
    pub footprint_radius: f64,
    /// First-order lag of the track and swing actuators.
    pub actuator_tau: f64,
    pub rated_payload: f64,
    /// Fractional loss of acceleration at rated payload.
    pub payload_accel_sensitivity: f64,
}

impl Default for VehicleSpec {
    fn default() -> Self {
        Self {
            length: 6.0,
            width: 2.88,
            height: 3.2,
            v_max: 10.0 / 3.6,
            a_max: 4.0,
            a_dec: 4.0,
            omega_max: 0.5,
            upper_rate_max: 0.6,
            r_min: 7.0,
            footprint_radius: 3.4,
            actuator_tau: 0.3,
            rated_payload: 11_000.0,
            payload_accel_sensitivity: 0.5,
        }
    }
}

impl VehicleSpec {
    pub fn half_diagonal(&self) -> f64 {
        self.length.hypot(self.width) / 2.0
    }

    /// Braking used while a remote stop is latched; reaches standstill from
    /// `v_max` within one actuator time constant.
    pub fn estop_decel(&self) -> f64 {
        self.v_max / self.actuator_tau
    }

    /// Acceleration scale for a given payload (heavier loads are slower).
    pub fn payload_scale(&self, payload_mass: f64) -> f64 {
        if self.rated_payload <= 0.0 {
            return 1.0;
        }
        1.0 / (1.0 + self.payload_accel_sensitivity * payload_mass.max(0.0) / self.rated_payload)
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("length", self.length),
            ("width", self.width),
            ("height", self.height),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("a_dec", self.a_dec),
            ("omega_max", self.omega_max),
            ("upper_rate_max", self.upper_rate_max),
            ("r_min", self.r_min),
            ("footprint_radius", self.footprint_radius),
            ("actuator_tau", self.actuator_tau),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.footprint_radius + 1e-9 < self.half_diagonal() {
            return Err("footprint_radius must cover half the body diagonal".into());
        }
        if self.rated_payload < 0.0 || self.payload_accel_sensitivity < 0.0 {
            return Err("payload parameters must be non-negative".into());
        }
        Ok(())
    }
}

/// Ground-truth state of one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub pose: Pose2D,
    pub v: f64,
    pub omega: f64,
    pub upper_angle: f64,
    pub upper_rate: f64,
    pub payload_mass: f64,
}

impl VehicleState {
    pub fn at_rest(pose: Pose2D) -> Self {
        Self {
            pose,
            v: 0.0,
            omega: 0.0,
            upper_angle: 0.0,
            upper_rate: 0.0,
            payload_mass: 0.0,
        }
    }
}

/// Actuation references sent by the on-board controller.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub v_ref: f64,
    pub omega_ref: f64,
    pub upper_rate_ref: f64,
}

impl Command {
    pub const ZERO: Command = Command {
        v_ref: 0.0,
        omega_ref: 0.0,
        upper_rate_ref: 0.0,
    };

    pub fn is_zero(&self) -> bool {
        self.v_ref == 0.0 && self.omega_ref == 0.0 && self.upper_rate_ref == 0.0
    }
}

/// Plant: references go through a first-order lag, then acceleration limits.
#[derive(Debug, Clone)]
pub struct VehicleBody {
    pub id: String,
    pub spec: VehicleSpec,
    pub state: VehicleState,
    pub reference: Command,
    pub estop: bool,
}

/// Rates seen during one integration substep, used by the IMU model.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepKinematics {
    pub yaw_rate: f64,
    pub accel: f64,
}

fn lag(current: f64, target: f64, h: f64, tau: f64) -> f64 {
    current + (target - current) * (1.0 - (-h / tau).exp())
}

impl VehicleBody {
    pub fn new(id: impl Into<String>, spec: VehicleSpec, state: VehicleState) -> Self {
        Self {
            id: id.into(),
            spec,
            state,
            reference: Command::ZERO,
            estop: false,
        }
    }

    /// Stores clamped references; ignored while the remote stop is latched.
    pub fn apply_command(&mut self, cmd: Command) {
        if self.estop {
            self.reference = Command::ZERO;
            return;
        }
        let s = &self.spec;
        self.reference = Command {
            v_ref: cmd.v_ref.clamp(-s.v_max, s.v_max),
            omega_ref: cmd.omega_ref.clamp(-s.omega_max, s.omega_max),
            upper_rate_ref: cmd.upper_rate_ref.clamp(-s.upper_rate_max, s.upper_rate_max),
        };
    }

    pub fn set_estop(&mut self, on: bool) {
        self.estop = on;
        if on {
            self.reference = Command::ZERO;
        }
    }

    pub(crate) fn integrate(&mut self, h: f64) -> StepKinematics {
        let spec = &self.spec;
        let st = &mut self.state;
        let v_old = st.v;
        if self.estop {
            let dv = spec.estop_decel() * h;
            st.v = if st.v.abs() <= dv * (1.0 + 1e-9) { 0.0 } else { st.v - dv * st.v.signum() };
            st.omega = 0.0;
            st.upper_rate = 0.0;
        } else {
            let scale = spec.payload_scale(st.payload_mass);
            let lagged = lag(st.v, self.reference.v_ref, h, spec.actuator_tau);
            let dv = lagged - st.v;
            // speeding up is limited by a_max, slowing down by a_dec
            let speeding_up = dv * st.v > 0.0 || st.v == 0.0;
            let limit = if speeding_up { spec.a_max } else { spec.a_dec } * scale * h;
            st.v = (st.v + dv.clamp(-limit, limit)).clamp(-spec.v_max, spec.v_max);
            st.omega = lag(st.omega, self.reference.omega_ref, h, spec.actuator_tau)
                .clamp(-spec.omega_max, spec.omega_max);
            st.upper_rate = lag(st.upper_rate, self.reference.upper_rate_ref, h, spec.actuator_tau)
                .clamp(-spec.upper_rate_max, spec.upper_rate_max);
        }
        st.pose = unicycle(&st.pose, st.v, st.omega, h);
        st.upper_angle = normalize_angle(st.upper_angle + st.upper_rate * h);
        StepKinematics {
            yaw_rate: st.omega,
            accel: (st.v - v_old) / h,
        }
    }
}

/// Exact unicycle motion with constant speed and yaw rate over `h`.
pub fn unicycle(pose: &Pose2D, v: f64, omega: f64, h: f64) -> Pose2D {
    if omega.abs() < 1e-12 {
        return Pose2D::new(
            pose.x + v * h * pose.theta.cos(),
            pose.y + v * h * pose.theta.sin(),
            pose.theta + omega * h,
        );
    }
    let th1 = pose.theta + omega * h;
    let r = v / omega;
    Pose2D::new(
        pose.x + r * (th1.sin() - pose.theta.sin()),
        pose.y - r * (th1.cos() - pose.theta.cos()),
        th1,
    )
}
