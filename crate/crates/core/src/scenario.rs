//! Declarative scenario description loaded from TOML.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::acs::{AgentParams, EstimatorParams, FaultKind};
use crate::fms::{FmsParams, VehicleInfo, Workflow, Zone};
use crate::geom::Pose2D;
use crate::net::{ChannelConfig, StopTarget};
use crate::proto::OperatorCommand;
use crate::world::{SensorConfig, TimedPoint, VehicleSpec};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config at {path}: {reason}")]
    ConfigInvalid { path: String, reason: String },
}

impl ScenarioError {
    fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ScenarioError::ConfigInvalid {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub id: String,
    pub pose: Pose2D,
    #[serde(default)]
    pub payload: f64,
    #[serde(default)]
    pub upper_angle: f64,
    #[serde(default)]
    pub spec: VehicleSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonConfig {
    pub id: String,
    #[serde(default = "yes")]
    pub gnss_tag: bool,
    pub script: Vec<TimedPoint>,
}

fn yes() -> bool {
    true
}

/// Something that happens at a fixed simulation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptedAction {
    /// An operator command, as if issued from the console.
    Operator { command: OperatorCommand },
    /// A press of the remote-stop radio.
    StopPress { target: StopTarget },
    /// A fault forced onto one vehicle's on-board stack.
    InjectFault { vehicle: String, fault: FaultKind },
    /// Changes the main channel's loss probability from now on.
    LinkLoss { drop_prob: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedEvent {
    pub at: f64,
    pub action: ScriptedAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_timestep")]
    pub timestep: f64,
    pub duration: f64,
    /// Finish early once every dispatched mission has completed.
    #[serde(default = "yes")]
    pub end_when_idle: bool,
    pub vehicles: Vec<VehicleConfig>,
    #[serde(default)]
    pub persons: Vec<PersonConfig>,
    #[serde(default)]
    pub zones: Vec<Zone>,
    #[serde(default)]
    pub workflows: Vec<Workflow>,
    #[serde(default)]
    pub events: Vec<ScriptedEvent>,
    #[serde(default)]
    pub network: ChannelConfig,
    #[serde(default)]
    pub sensors: SensorConfig,
    #[serde(default)]
    pub fms: FmsParams,
    #[serde(default)]
    pub agent: AgentParams,
    /// Defaults to the values matching `sensors`.
    #[serde(default)]
    pub estimator: Option<EstimatorParams>,
    /// Seconds between telemetry records in the log.
    #[serde(default = "default_telemetry_period")]
    pub telemetry_period: f64,
}

fn default_timestep() -> f64 {
    0.02
}

fn default_telemetry_period() -> f64 {
    0.1
}

/// Path into a config for a validation message that starts with a field name.
fn field_path(prefix: &str, reason: &str) -> String {
    match reason.split_once(' ') {
        Some((head, rest))
            if rest.starts_with("must") && head.chars().all(|c| c.is_ascii_lowercase() || c == '_') =>
        {
            format!("{prefix}.{head}")
        }
        _ => prefix.to_string(),
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| ScenarioError::invalid("", e.to_string()))?;
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ScenarioError::invalid(path, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Copy with every optional section filled in.
    pub fn materialized(&self) -> Self {
        let mut c = self.clone();
        c.estimator = Some(self.estimator_params());
        c
    }

    pub fn estimator_params(&self) -> EstimatorParams {
        self.estimator
            .clone()
            .unwrap_or_else(|| EstimatorParams::matching(&self.sensors))
    }

    pub fn vehicle_infos(&self) -> Vec<VehicleInfo> {
        self.vehicles
            .iter()
            .map(|v| VehicleInfo {
                id: v.id.clone(),
                footprint_radius: v.spec.footprint_radius,
                r_min: v.spec.r_min,
                v_max: v.spec.v_max,
                initial_pose: v.pose,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        fn inv(path: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
            ScenarioError::invalid(path, reason)
        }
        if !(self.timestep > 0.0) || !self.timestep.is_finite() {
            return Err(inv("timestep", "must be positive"));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(inv("duration", "must be positive"));
        }
        if !(self.telemetry_period > 0.0) {
            return Err(inv("telemetry_period", "must be positive"));
        }
        if self.vehicles.is_empty() {
            return Err(inv("vehicles", "at least one vehicle is required"));
        }
        let mut ids = BTreeSet::new();
        for (i, v) in self.vehicles.iter().enumerate() {
            if v.id.is_empty() || !ids.insert(v.id.clone()) {
                return Err(inv(format!("vehicles[{i}].id"), "ids must be unique and non-empty"));
            }
            if let Err(e) = v.spec.validate() {
                return Err(inv(field_path(&format!("vehicles[{i}].spec"), &e), e));
            }
            if !v.pose.is_finite() {
                return Err(inv(format!("vehicles[{i}].pose"), "must be finite"));
            }
            if !(v.payload >= 0.0) {
                return Err(inv(format!("vehicles[{i}].payload"), "must be non-negative"));
            }
        }
        for (i, p) in self.persons.iter().enumerate() {
            if p.id.is_empty() || !ids.insert(p.id.clone()) {
                return Err(inv(format!("persons[{i}].id"), "ids must be unique and non-empty"));
            }
            if p.script.is_empty() {
                return Err(inv(format!("persons[{i}].script"), "needs at least one point"));
            }
            if p.script.windows(2).any(|w| !(w[1].t > w[0].t)) {
                return Err(inv(format!("persons[{i}].script"), "times must increase"));
            }
        }
        let mut zone_ids = BTreeSet::new();
        for (i, z) in self.zones.iter().enumerate() {
            if !zone_ids.insert(z.id.clone()) {
                return Err(inv(format!("zones[{i}].id"), "ids must be unique"));
            }
            if let Err(e) = z.validate() {
                return Err(inv(format!("zones[{i}].polygon"), e));
            }
        }
        let mut wf_ids = BTreeSet::new();
        for (i, wf) in self.workflows.iter().enumerate() {
            if !wf_ids.insert(wf.id.clone()) {
                return Err(inv(format!("workflows[{i}].id"), "ids must be unique"));
            }
            let mut v_max = f64::INFINITY;
            for (k, r) in wf.routes.iter().enumerate() {
                match self.vehicles.iter().find(|v| v.id == r.vehicle) {
                    Some(v) => v_max = v_max.min(v.spec.v_max),
                    None => {
                        return Err(inv(
                            format!("workflows[{i}].routes[{k}].vehicle"),
                            format!("unknown vehicle {}", r.vehicle),
                        ))
                    }
                }
            }
            if let Err(e) = wf.validate(&self.zones, v_max) {
                return Err(inv(format!("workflows[{i}]"), e.to_string()));
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            if !(e.at >= 0.0) || !e.at.is_finite() {
                return Err(inv(format!("events[{i}].at"), "must be non-negative"));
            }
            match &e.action {
                ScriptedAction::InjectFault { vehicle, .. } if !ids.contains(vehicle) => {
                    return Err(inv(format!("events[{i}].action.vehicle"), format!("unknown vehicle {vehicle}")));
                }
                ScriptedAction::LinkLoss { drop_prob } if !(0.0..=1.0).contains(drop_prob) => {
                    return Err(inv(format!("events[{i}].action.drop_prob"), "must be within [0, 1]"));
                }
                _ => {}
            }
        }
        if let Err(e) = self.network.validate() {
            return Err(inv(field_path("network", &e), e));
        }
        if let Err(e) = self.fms.validate() {
            return Err(inv(field_path("fms", &e), e));
        }
        Ok(())
    }
}
