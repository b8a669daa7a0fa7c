//! Monte Carlo consistency runs for the on-board estimator against the
//! simulated plant and sensors.

use fleetsim_core::acs::{EstimatorParams, EstimatorState};
use fleetsim_core::geom::Pose2D;
use fleetsim_core::par;
use fleetsim_core::world::{Command, SensorConfig, SensorReading, VehicleBody, VehicleSpec, VehicleState, Window, World};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const DURATION: f64 = 20.0;
pub const CHECK_EVERY: f64 = 0.5;

/// Sensors whose noise the filter models exactly: white noise, no bias.
pub fn unbiased_sensors() -> SensorConfig {
    SensorConfig {
        imu_yaw_rate_bias_sigma: 0.0,
        imu_accel_bias_sigma: 0.0,
        ..SensorConfig::default()
    }
}

fn command(t: f64) -> Command {
    Command {
        v_ref: if t < 12.0 { 2.0 } else { 1.0 },
        omega_ref: 0.15 * (0.3 * t).sin(),
        upper_rate_ref: 0.0,
    }
}

pub struct Trace {
    /// NEES at each checkpoint.
    pub nees: Vec<f64>,
    /// Covariance trace after every tick, with the tick time.
    pub traces: Vec<(f64, f64)>,
}

/// One run from an initial error drawn from the filter's own prior.
pub fn run(seed: u64, sensors: &SensorConfig) -> Trace {
    let params = EstimatorParams::matching(sensors);
    let p0 = params.initial_covariance();
    let truth0 = Pose2D::origin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(9);
    let mut draw = |var: f64| {
        let z: f64 = StandardNormal.sample(&mut rng);
        var.sqrt() * z
    };
    let start = Pose2D::new(draw(p0[(0, 0)]), draw(p0[(1, 1)]), draw(p0[(2, 2)]));
    let v0 = draw(p0[(3, 3)]);
    let mut est = EstimatorState::new(start, v0, p0, 0.0);
    let body = VehicleBody::new("cc1", VehicleSpec::default(), VehicleState::at_rest(truth0));
    let mut world = World::new(0.02, sensors.clone(), seed, vec![body], vec![]).unwrap();
    let checkpoints = (DURATION / CHECK_EVERY).round() as u64;
    let stride = (CHECK_EVERY / world.dt()).round() as u64;
    let mut out = Trace {
        nees: Vec::with_capacity(checkpoints as usize),
        traces: Vec::new(),
    };
    while world.tick() < checkpoints * stride {
        world.apply_command("cc1", command(world.time())).unwrap();
        world.step();
        for r in world.emit_sensors("cc1").unwrap() {
            match r {
                SensorReading::ImuSample(s) => {
                    let dt = s.stamp - est.last_imu_stamp;
                    if dt > 0.0 {
                        est.predict(&s, dt, &params);
                    }
                }
                SensorReading::GnssFix(f) => {
                    est.update_gnss(&f, &params);
                }
            }
        }
        out.traces.push((world.time(), est.trace()));
        if world.tick().is_multiple_of(stride) {
            let s = &world.vehicle("cc1").unwrap().state;
            out.nees.push(est.nees(&s.pose, s.v));
        }
    }
    out
}

pub struct Consistency {
    pub runs: usize,
    pub lower: f64,
    pub upper: f64,
    /// Average NEES across runs at each checkpoint.
    pub anees: Vec<f64>,
    pub inside: usize,
}

impl Consistency {
    pub fn fraction_inside(&self) -> f64 {
        self.inside as f64 / self.anees.len() as f64
    }

    pub fn overall(&self) -> f64 {
        self.anees.iter().sum::<f64>() / self.anees.len() as f64
    }
}

/// Two-sided 95% envelope for the run-averaged NEES of a 4-state filter.
pub fn envelope(runs: usize) -> (f64, f64) {
    let dof = 4.0 * runs as f64;
    let chi = ChiSquared::new(dof).unwrap();
    (chi.inverse_cdf(0.025) / runs as f64, chi.inverse_cdf(0.975) / runs as f64)
}

pub fn monte_carlo(runs: usize) -> Consistency {
    let sensors = unbiased_sensors();
    let seeds: Vec<u64> = (0..runs as u64).collect();
    let traces = par::map(&seeds, |&s| run(s, &sensors));
    let k = traces[0].nees.len();
    let anees: Vec<f64> = (0..k)
        .map(|i| traces.iter().map(|t| t.nees[i]).sum::<f64>() / runs as f64)
        .collect();
    let (lower, upper) = envelope(runs);
    let inside = anees.iter().filter(|&&a| a >= lower && a <= upper).count();
    Consistency {
        runs,
        lower,
        upper,
        anees,
        inside,
    }
}

/// Largest drop of the covariance trace between consecutive ticks inside
/// a GNSS outage window.
pub fn outage_trace_drop(seed: u64, window: Window) -> f64 {
    let sensors = SensorConfig {
        gnss_outages: vec![window],
        ..SensorConfig::default()
    };
    let t = run(seed, &sensors);
    t.traces
        .windows(2)
        .filter(|w| w[0].0 >= window.start && w[1].0 < window.end)
        .map(|w| w[0].1 - w[1].1)
        .fold(f64::NEG_INFINITY, f64::max)
}
