use serde::{Deserialize, Serialize};

use super::ekf::EstimatorState;
use super::fsm::FaultKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultParams {
    pub conn_timeout: f64,
    pub sensor_timeout: f64,
    /// Position covariance trace (m^2) treated as lost localization.
    pub div_threshold: f64,
    /// Condition-free time before an automatic resume.
    pub resume_hold: f64,
}

impl Default for FaultParams {
    fn default() -> Self {
        Self {
            conn_timeout: 1.0,
            sensor_timeout: 0.5,
            div_threshold: 4.0,
            resume_hold: 1.0,
        }
    }
}

/// Most severe fault condition currently present.
pub fn detect_faults(
    params: &FaultParams,
    last_msg_age: f64,
    sensor_ages: &[f64],
    est: &EstimatorState,
) -> Option<FaultKind> {
    if est.position_trace() > params.div_threshold || !est.mean.iter().all(|v| v.is_finite()) {
        Some(FaultKind::LocalizationDivergence)
    } else if last_msg_age > params.conn_timeout {
        Some(FaultKind::ConnectionLoss)
    } else if sensor_ages.iter().any(|&a| a > params.sensor_timeout) {
        Some(FaultKind::SensorTimeout)
    } else {
        None
    }
}
