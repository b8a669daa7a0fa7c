use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::geom::{normalize_angle, Pose2D};
use crate::world::{unicycle, GnssFix, GnssQuality, ImuSample, SensorConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorParams {
    pub imu_yaw_rate_sigma: f64,
    pub imu_accel_sigma: f64,
    /// Small position random walk that keeps the covariance well conditioned.
    pub position_walk_sigma: f64,
    pub gnss_sigma_fixed: f64,
    pub gnss_sigma_float: f64,
    /// Normalized innovation squared above which a fix is discarded.
    pub gate: f64,
    pub init_position_sigma: f64,
    pub init_heading_sigma: f64,
    pub init_speed_sigma: f64,
    /// Consecutive gated fixes after which the filter re-anchors on the next
    /// one; zero disables re-anchoring.
    pub reanchor_after: u32,
    /// Heading uncertainty assumed after re-anchoring.
    pub reanchor_heading_sigma: f64,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self::matching(&SensorConfig::default())
    }
}

impl EstimatorParams {
    /// Noise model matching a sensor configuration.
    pub fn matching(s: &SensorConfig) -> Self {
        Self {
            imu_yaw_rate_sigma: s.imu_yaw_rate_sigma.hypot(s.imu_yaw_rate_bias_sigma),
            imu_accel_sigma: s.imu_accel_sigma.hypot(s.imu_accel_bias_sigma),
            position_walk_sigma: 1e-4,
            gnss_sigma_fixed: s.gnss_sigma_fixed,
            gnss_sigma_float: s.gnss_sigma_float,
            gate: 13.8,
            init_position_sigma: 0.05,
            init_heading_sigma: 0.01,
            init_speed_sigma: 0.01,
            reanchor_after: 3,
            reanchor_heading_sigma: 0.05,
        }
    }

    pub fn initial_covariance(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::new(
            self.init_position_sigma.powi(2),
            self.init_position_sigma.powi(2),
            self.init_heading_sigma.powi(2),
            self.init_speed_sigma.powi(2),
        ))
    }
}

/// Result of feeding one GNSS fix to the filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GnssOutcome {
    Applied { nis: f64 },
    Gated { nis: f64 },
    /// Persistent disagreement: position reset to the fix, covariance widened.
    Reanchored { nis: f64 },
    NoSolution,
}

/// Extended Kalman filter over `(x, y, theta, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub last_gnss_stamp: f64,
    pub last_imu_stamp: f64,
    pub last_nis: f64,
    pub gated_streak: u32,
}

fn symmetrize(p: &mut Matrix4<f64>) {
    *p = (*p + p.transpose()) * 0.5;
}

impl EstimatorState {
    pub fn new(pose: Pose2D, v: f64, covariance: Matrix4<f64>, stamp: f64) -> Self {
        Self {
            mean: Vector4::new(pose.x, pose.y, pose.theta, v),
            covariance,
            last_gnss_stamp: stamp,
            last_imu_stamp: stamp,
            last_nis: 0.0,
            gated_streak: 0,
        }
    }

    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.mean[0], self.mean[1], self.mean[2])
    }

    pub fn speed(&self) -> f64 {
        self.mean[3]
    }

    pub fn position_trace(&self) -> f64 {
        self.covariance[(0, 0)] + self.covariance[(1, 1)]
    }

    pub fn trace(&self) -> f64 {
        self.covariance.trace()
    }

    /// Propagates with one IMU sample held over `dt`.
    pub fn predict(&mut self, imu: &ImuSample, dt: f64, params: &EstimatorParams) {
        let (x, y, th, v) = (self.mean[0], self.mean[1], self.mean[2], self.mean[3]);
        let w = imu.yaw_rate;
        let v1 = v + imu.accel * dt;
        let p1 = unicycle(&Pose2D { x, y, theta: th }, v1, w, dt);
        let (dx, dy) = (p1.x - x, p1.y - y);
        // displacement per unit speed along the arc
        let (ux, uy) = if w.abs() < 1e-9 {
            (dt * th.cos(), dt * th.sin())
        } else {
            (((th + w * dt).sin() - th.sin()) / w, (th.cos() - (th + w * dt).cos()) / w)
        };
        let mut f = Matrix4::identity();
        f[(0, 2)] = -dy;
        f[(1, 2)] = dx;
        f[(0, 3)] = ux;
        f[(1, 3)] = uy;
        let mid = th + 0.5 * w * dt;
        let mut g = Matrix4x2::zeros();
        g[(0, 0)] = -0.5 * v1 * dt * dt * mid.sin();
        g[(1, 0)] = 0.5 * v1 * dt * dt * mid.cos();
        g[(2, 0)] = dt;
        g[(0, 1)] = ux * dt;
        g[(1, 1)] = uy * dt;
        g[(3, 1)] = dt;
        let q_in = Matrix2::from_diagonal(&Vector2::new(
            params.imu_yaw_rate_sigma.powi(2),
            params.imu_accel_sigma.powi(2),
        ));
        let walk = params.position_walk_sigma.powi(2) * dt;
        let mut q = g * q_in * g.transpose();
        q[(0, 0)] += walk;
        q[(1, 1)] += walk;
        self.mean = Vector4::new(p1.x, p1.y, p1.theta, v1);
        self.covariance = f * self.covariance * f.transpose() + q;
        symmetrize(&mut self.covariance);
        self.last_imu_stamp = imu.stamp;
    }

    /// Linear position update, gated on the normalized innovation squared.
    pub fn update_gnss(&mut self, fix: &GnssFix, params: &EstimatorParams) -> GnssOutcome {
        let (Some((zx, zy)), sigma) = (
            fix.position,
            match fix.quality {
                GnssQuality::RtkFixed => params.gnss_sigma_fixed,
                GnssQuality::Float => params.gnss_sigma_float,
                GnssQuality::None => return GnssOutcome::NoSolution,
            },
        ) else {
            return GnssOutcome::NoSolution;
        };
        let h = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let r = Matrix2::identity() * sigma.max(1e-6).powi(2);
        let innov = Vector2::new(zx - self.mean[0], zy - self.mean[1]);
        let s = h * self.covariance * h.transpose() + r;
        let Some(s_inv) = s.try_inverse() else {
            return GnssOutcome::Gated { nis: f64::INFINITY };
        };
        let nis = (innov.transpose() * s_inv * innov)[(0, 0)];
        self.last_nis = nis;
        if nis > params.gate {
            self.gated_streak += 1;
            if params.reanchor_after == 0 || self.gated_streak <= params.reanchor_after {
                return GnssOutcome::Gated { nis };
            }
            self.reanchor(zx, zy, sigma, params);
            self.last_gnss_stamp = fix.stamp;
            return GnssOutcome::Reanchored { nis };
        }
        self.gated_streak = 0;
        let k = self.covariance * h.transpose() * s_inv;
        self.mean += k * innov;
        self.mean[2] = normalize_angle(self.mean[2]);
        let ikh = Matrix4::identity() - k * h;
        self.covariance = ikh * self.covariance * ikh.transpose() + k * r * k.transpose();
        symmetrize(&mut self.covariance);
        self.last_gnss_stamp = fix.stamp;
        GnssOutcome::Applied { nis }
    }

    fn reanchor(&mut self, zx: f64, zy: f64, sigma: f64, params: &EstimatorParams) {
        self.mean[0] = zx;
        self.mean[1] = zy;
        let pos = sigma.powi(2) + params.init_position_sigma.powi(2);
        let heading = self.covariance[(2, 2)].max(params.reanchor_heading_sigma.powi(2));
        let speed = self.covariance[(3, 3)];
        self.covariance = Matrix4::from_diagonal(&Vector4::new(pos, pos, heading, speed));
        self.gated_streak = 0;
    }

    /// Error vector against a true state, heading wrapped.
    pub fn error(&self, truth: &Pose2D, v: f64) -> Vector4<f64> {
        Vector4::new(
            self.mean[0] - truth.x,
            self.mean[1] - truth.y,
            normalize_angle(self.mean[2] - truth.theta),
            self.mean[3] - v,
        )
    }

    /// Normalized estimation error squared for a known truth.
    pub fn nees(&self, truth: &Pose2D, v: f64) -> f64 {
        let e = self.error(truth, v);
        match self.covariance.try_inverse() {
            Some(inv) => (e.transpose() * inv * e)[(0, 0)],
            None => f64::INFINITY,
        }
    }
}
