use serde::{Deserialize, Serialize};

/// Closed time interval `[start, end]` in seconds of simulation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start - 1e-9 && t <= self.end + 1e-9
    }
}

pub(crate) fn in_any(windows: &[Window], t: f64) -> bool {
    windows.iter().any(|w| w.contains(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GnssQuality {
    RtkFixed,
    Float,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnssFix {
    pub stamp: f64,
    pub quality: GnssQuality,
    /// Absent when `quality` is `None`.
    pub position: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub stamp: f64,
    pub yaw_rate: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SensorReading {
    GnssFix(GnssFix),
    ImuSample(ImuSample),
}

impl SensorReading {
    pub fn stamp(&self) -> f64 {
        match self {
            SensorReading::GnssFix(f) => f.stamp,
            SensorReading::ImuSample(s) => s.stamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Gnss,
    Imu,
}

/// A window in which a sensor falls completely silent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorDropout {
    pub vehicle: String,
    pub sensor: SensorKind,
    pub window: Window,
}

/// Noise, rate and outage model for the on-board sensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub gnss_rate: f64,
    pub gnss_sigma_fixed: f64,
    pub gnss_sigma_float: f64,
    /// Windows with no position solution (quality `None`).
    pub gnss_outages: Vec<Window>,
    /// Windows with a float (degraded) solution.
    pub gnss_float_windows: Vec<Window>,
    pub imu_rate: f64,
    pub imu_yaw_rate_sigma: f64,
    pub imu_accel_sigma: f64,
    /// Standard deviation of the per-run constant IMU biases.
    pub imu_yaw_rate_bias_sigma: f64,
    pub imu_accel_bias_sigma: f64,
    /// Constant offset of the upper-body angle resolver.
    pub resolver_bias: f64,
    pub person_gnss_sigma: f64,
    pub dropouts: Vec<SensorDropout>,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            gnss_rate: 5.0,
            gnss_sigma_fixed: 0.02,
            gnss_sigma_float: 0.5,
            gnss_outages: Vec::new(),
            gnss_float_windows: Vec::new(),
            imu_rate: 100.0,
            imu_yaw_rate_sigma: 0.005,
            imu_accel_sigma: 0.05,
            imu_yaw_rate_bias_sigma: 0.0005,
            imu_accel_bias_sigma: 0.005,
            resolver_bias: 0.0,
            person_gnss_sigma: 0.05,
            dropouts: Vec::new(),
        }
    }
}

impl SensorConfig {
    /// No noise, no bias.
    pub fn ideal() -> Self {
        Self {
            gnss_sigma_fixed: 0.0,
            gnss_sigma_float: 0.0,
            imu_yaw_rate_sigma: 0.0,
            imu_accel_sigma: 0.0,
            imu_yaw_rate_bias_sigma: 0.0,
            imu_accel_bias_sigma: 0.0,
            person_gnss_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn gnss_quality_at(&self, t: f64) -> GnssQuality {
        if in_any(&self.gnss_outages, t) {
            GnssQuality::None
        } else if in_any(&self.gnss_float_windows, t) {
            GnssQuality::Float
        } else {
            GnssQuality::RtkFixed
        }
    }

    pub fn sigma_for(&self, q: GnssQuality) -> f64 {
        match q {
            GnssQuality::RtkFixed => self.gnss_sigma_fixed,
            GnssQuality::Float => self.gnss_sigma_float,
            GnssQuality::None => f64::INFINITY,
        }
    }

    pub(crate) fn silent(&self, vehicle: &str, sensor: SensorKind, t: f64) -> bool {
        self.dropouts
            .iter()
            .any(|d| d.vehicle == vehicle && d.sensor == sensor && d.window.contains(t))
    }
}
