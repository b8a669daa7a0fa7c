//! Fixed-timestep ground truth: vehicle plants, walking personnel and the
//! sensor models that observe them.

mod sensors;
mod vehicle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use sensors::{
    GnssFix, GnssQuality, ImuSample, SensorConfig, SensorDropout, SensorKind, SensorReading, Window,
};
pub use vehicle::{unicycle, Command, VehicleBody, VehicleSpec, VehicleState};

use crate::geom::normalize_angle;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("unknown actor {0}")]
    UnknownActor(String),
    #[error("timestep must be positive, got {0}")]
    InvalidTimestep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorKind {
    Vehicle,
    Person,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// A person walking a piecewise-linear timed script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Person {
    pub id: String,
    pub gnss_tag: bool,
    pub script: Vec<TimedPoint>,
}

impl Person {
    pub fn position_at(&self, t: f64) -> (f64, f64) {
        let pts = &self.script;
        match pts.len() {
            0 => (f64::NAN, f64::NAN),
            _ if t <= pts[0].t => (pts[0].x, pts[0].y),
            _ => {
                for w in pts.windows(2) {
                    if t <= w[1].t {
                        let span = w[1].t - w[0].t;
                        let a = if span > 0.0 { (t - w[0].t) / span } else { 1.0 };
                        return (w[0].x + a * (w[1].x - w[0].x), w[0].y + a * (w[1].y - w[0].y));
                    }
                }
                let last = pts[pts.len() - 1];
                (last.x, last.y)
            }
        }
    }
}

struct SensorSuite {
    rng: ChaCha8Rng,
    yaw_rate_bias: f64,
    accel_bias: f64,
    pending: Vec<SensorReading>,
}

impl SensorSuite {
    fn new(seed: u64, stream: u64, cfg: &SensorConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let yaw_rate_bias = gauss(&mut rng, cfg.imu_yaw_rate_bias_sigma);
        let accel_bias = gauss(&mut rng, cfg.imu_accel_bias_sigma);
        Self {
            rng,
            yaw_rate_bias,
            accel_bias,
            pending: Vec::new(),
        }
    }
}

fn gauss(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * sigma
}

/// Deterministic world state advanced by a single owner.
pub struct World {
    dt: f64,
    tick: u64,
    substeps: u32,
    imu_stride: u64,
    gnss_stride: u64,
    sensors: SensorConfig,
    vehicles: Vec<VehicleBody>,
    suites: Vec<SensorSuite>,
    persons: Vec<Person>,
    person_rng: ChaCha8Rng,
}

impl World {
    pub fn new(
        dt: f64,
        sensors: SensorConfig,
        seed: u64,
        vehicles: Vec<VehicleBody>,
        persons: Vec<Person>,
    ) -> Result<Self, WorldError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(WorldError::InvalidTimestep(dt));
        }
        let per_tick = sensors.imu_rate * dt;
        let substeps = per_tick.round().max(1.0) as u32;
        let imu_stride = if per_tick < 1.0 {
            (1.0 / per_tick).round().max(1.0) as u64
        } else {
            1
        };
        let gnss_stride = (1.0 / (sensors.gnss_rate * dt)).round().max(1.0) as u64;
        let suites = (0..vehicles.len())
            .map(|i| SensorSuite::new(seed, 1 + i as u64, &sensors))
            .collect();
        let mut person_rng = ChaCha8Rng::seed_from_u64(seed);
        person_rng.set_stream(1_000_000);
        Ok(Self {
            dt,
            tick: 0,
            substeps,
            imu_stride,
            gnss_stride,
            sensors,
            vehicles,
            suites,
            persons,
            person_rng,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn vehicles(&self) -> &[VehicleBody] {
        &self.vehicles
    }

    pub fn persons(&self) -> &[Person] {
        &self.persons
    }

    pub fn sensor_config(&self) -> &SensorConfig {
        &self.sensors
    }

    pub fn vehicle_index(&self, id: &str) -> Result<usize, WorldError> {
        self.vehicles
            .iter()
            .position(|v| v.id == id)
            .ok_or_else(|| WorldError::UnknownActor(id.to_string()))
    }

    pub fn vehicle(&self, id: &str) -> Result<&VehicleBody, WorldError> {
        Ok(&self.vehicles[self.vehicle_index(id)?])
    }

    pub fn vehicle_mut(&mut self, id: &str) -> Result<&mut VehicleBody, WorldError> {
        let i = self.vehicle_index(id)?;
        Ok(&mut self.vehicles[i])
    }

    pub fn apply_command(&mut self, id: &str, cmd: Command) -> Result<(), WorldError> {
        self.vehicle_mut(id)?.apply_command(cmd);
        Ok(())
    }

    pub fn set_estop(&mut self, id: &str, on: bool) -> Result<(), WorldError> {
        self.vehicle_mut(id)?.set_estop(on);
        Ok(())
    }

    /// Upper-body angle as seen by the swing resolver (truth plus a fixed bias).
    pub fn resolver_angle(&self, id: &str) -> Result<f64, WorldError> {
        let v = self.vehicle(id)?;
        Ok(normalize_angle(v.state.upper_angle + self.sensors.resolver_bias))
    }

    /// Readings produced since the previous call, in stamp order.
    pub fn emit_sensors(&mut self, id: &str) -> Result<Vec<SensorReading>, WorldError> {
        let i = self.vehicle_index(id)?;
        Ok(std::mem::take(&mut self.suites[i].pending))
    }

    /// Advances every actor by one fixed timestep.
    pub fn step(&mut self) {
        let h = self.dt / self.substeps as f64;
        let t0 = self.time();
        let imu_due = (self.tick + 1).is_multiple_of(self.imu_stride);
        let gnss_due = (self.tick + 1).is_multiple_of(self.gnss_stride);
        for (body, suite) in self.vehicles.iter_mut().zip(self.suites.iter_mut()) {
            for k in 0..self.substeps {
                let kin = body.integrate(h);
                let stamp = t0 + (k + 1) as f64 * h;
                if imu_due && !self.sensors.silent(&body.id, SensorKind::Imu, stamp)
                {
                    let yaw_rate =
                        kin.yaw_rate + suite.yaw_rate_bias + gauss(&mut suite.rng, self.sensors.imu_yaw_rate_sigma);
                    let accel = kin.accel + suite.accel_bias + gauss(&mut suite.rng, self.sensors.imu_accel_sigma);
                    suite.pending.push(SensorReading::ImuSample(ImuSample {
                        stamp,
                        yaw_rate,
                        accel,
                    }));
                }
            }
            let stamp = t0 + self.dt;
            if gnss_due && !self.sensors.silent(&body.id, SensorKind::Gnss, stamp) {
                let quality = self.sensors.gnss_quality_at(stamp);
                let position = match quality {
                    GnssQuality::None => None,
                    q => {
                        let sigma = self.sensors.sigma_for(q);
                        let p = body.state.pose;
                        let nx = gauss(&mut suite.rng, sigma);
                        let ny = gauss(&mut suite.rng, sigma);
                        Some((p.x + nx, p.y + ny))
                    }
                };
                suite.pending.push(SensorReading::GnssFix(GnssFix {
                    stamp,
                    quality,
                    position,
                }));
            }
        }
        self.tick += 1;
    }

    /// Noisy GNSS position of a tagged person at the current time.
    pub fn person_fix(&mut self, idx: usize) -> Option<(f64, f64)> {
        let t = self.time();
        let p = self.persons.get(idx)?;
        if !p.gnss_tag {
            return None;
        }
        let (x, y) = p.position_at(t);
        let s = self.sensors.person_gnss_sigma;
        let nx = gauss(&mut self.person_rng, s);
        let ny = gauss(&mut self.person_rng, s);
        Some((x + nx, y + ny))
    }

    pub fn gnss_stride(&self) -> u64 {
        self.gnss_stride
    }
}
