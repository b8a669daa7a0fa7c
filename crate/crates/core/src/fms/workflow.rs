use serde::{Deserialize, Serialize};

use super::zone::{Zone, ZoneKind};
use super::FmsError;
use crate::acs::{Action, Mission};
use crate::geom::{plan_rs_path, Pose2D};

/// Spacing used when checking planned paths against zones.
pub const ZONE_CHECK_STEP: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    /// Upper-body angle to rotate to after arriving.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotate_upper: Option<f64>,
    /// Seconds to wait after arriving.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell: Option<f64>,
}

impl Waypoint {
    pub fn pose(&self) -> Pose2D {
        Pose2D::new(self.x, self.y, self.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    pub vehicle: String,
    pub waypoints: Vec<Waypoint>,
}

/// A transport job: which vehicles drive where, inside which zones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workflow {
    pub id: String,
    pub routes: Vec<Route>,
    pub zones: Vec<String>,
    pub cruise_speed: f64,
    #[serde(default, rename = "loop")]
    pub looping: bool,
    /// Start as soon as the run begins.
    #[serde(default)]
    pub autostart: bool,
}

impl Workflow {
    pub fn vehicles(&self) -> impl Iterator<Item = &str> {
        self.routes.iter().map(|r| r.vehicle.as_str())
    }

    pub fn route(&self, vehicle: &str) -> Option<&Route> {
        self.routes.iter().find(|r| r.vehicle == vehicle)
    }

    fn permitted<'a>(&self, zones: &'a [Zone]) -> Result<Vec<&'a Zone>, FmsError> {
        self.zones
            .iter()
            .map(|id| {
                zones
                    .iter()
                    .find(|z| &z.id == id && z.kind == ZoneKind::Operational)
                    .ok_or_else(|| FmsError::UnknownZone(id.clone()))
            })
            .collect()
    }

    pub fn validate(&self, zones: &[Zone], v_max: f64) -> Result<(), FmsError> {
        let invalid = |m: String| FmsError::InvalidWorkflow {
            workflow: self.id.clone(),
            reason: m,
        };
        if self.routes.is_empty() {
            return Err(invalid("no routes".into()));
        }
        if !(self.cruise_speed > 0.0) || self.cruise_speed > v_max + 1e-9 {
            return Err(invalid(format!("cruise_speed must be in (0, {v_max:.3}]")));
        }
        let permitted = self.permitted(zones)?;
        if permitted.is_empty() {
            return Err(invalid("no permitted zones".into()));
        }
        for (i, r) in self.routes.iter().enumerate() {
            if self.routes[..i].iter().any(|o| o.vehicle == r.vehicle) {
                return Err(invalid(format!("vehicle {} has two routes", r.vehicle)));
            }
            if r.waypoints.is_empty() {
                return Err(invalid(format!("route for {} has no waypoints", r.vehicle)));
            }
            for (k, w) in r.waypoints.iter().enumerate() {
                if !w.pose().is_finite() {
                    return Err(invalid(format!("waypoint {k} of {} is not finite", r.vehicle)));
                }
                if !permitted.iter().any(|z| z.contains_closed(w.x, w.y)) {
                    return Err(invalid(format!("waypoint {k} of {} lies outside the permitted zones", r.vehicle)));
                }
                if w.dwell.is_some_and(|d| !(d >= 0.0)) {
                    return Err(invalid(format!("waypoint {k} of {} has a negative dwell", r.vehicle)));
                }
            }
        }
        Ok(())
    }
}

fn path_allowed(x: f64, y: f64, permitted: &[&Zone], zones: &[Zone]) -> bool {
    permitted.iter().any(|z| z.contains_closed(x, y))
        && !zones
            .iter()
            .any(|z| z.kind == ZoneKind::Forbidden && z.contains_strict(x, y))
}

/// Plans one vehicle's route from `start` into a mission.
pub fn compile_route(
    wf: &Workflow,
    vehicle: &str,
    start: Pose2D,
    r_min: f64,
    zones: &[Zone],
    mission_id: impl Into<String>,
) -> Result<Mission, FmsError> {
    let route = wf.route(vehicle).ok_or_else(|| FmsError::UnknownVehicle(vehicle.to_string()))?;
    let permitted = wf.permitted(zones)?;
    let mut actions = Vec::new();
    let mut from = start;
    for (leg, w) in route.waypoints.iter().enumerate() {
        let to = w.pose();
        let path = plan_rs_path(&from, &to, r_min).map_err(|e| FmsError::PlanningFailed {
            vehicle: vehicle.to_string(),
            leg,
            reason: e.to_string(),
        })?;
        let samples = path.sample(ZONE_CHECK_STEP).map_err(|e| FmsError::PlanningFailed {
            vehicle: vehicle.to_string(),
            leg,
            reason: e.to_string(),
        })?;
        if let Some(bad) = samples
            .iter()
            .find(|p| !path_allowed(p.pose.x, p.pose.y, &permitted, zones))
        {
            return Err(FmsError::ZoneViolation {
                vehicle: vehicle.to_string(),
                leg,
                s: bad.s,
            });
        }
        if !path.segments.is_empty() {
            actions.push(Action::FollowPath {
                path,
                cruise_speed: wf.cruise_speed,
            });
        }
        if let Some(a) = w.rotate_upper {
            actions.push(Action::RotateUpper { target_angle: a });
        }
        if let Some(d) = w.dwell {
            actions.push(Action::Dwell { duration: d });
        }
        from = to;
    }
    Ok(Mission::new(mission_id, actions))
}

/// Compiles every route of a workflow, each from its vehicle's start pose.
pub fn compile_workflow(
    wf: &Workflow,
    starts: &dyn Fn(&str) -> Option<(Pose2D, f64)>,
    zones: &[Zone],
) -> Result<Vec<(String, Mission)>, FmsError> {
    wf.routes
        .iter()
        .map(|r| {
            let (start, r_min) = starts(&r.vehicle).ok_or_else(|| FmsError::UnknownVehicle(r.vehicle.clone()))?;
            let id = format!("{}/{}", wf.id, r.vehicle);
            compile_route(wf, &r.vehicle, start, r_min, zones, id).map(|m| (r.vehicle.clone(), m))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::geom::Steer;

    fn yard() -> Vec<Zone> {
        vec![Zone::new(
            "yard",
            vec![(-5.0, -5.0), (40.0, -5.0), (40.0, 5.0), (-5.0, 5.0)],
            ZoneKind::Operational,
        )]
    }

    fn wf(waypoints: Vec<Waypoint>) -> Workflow {
        Workflow {
            id: "w".into(),
            routes: vec![Route {
                vehicle: "cc1".into(),
                waypoints,
            }],
            zones: vec!["yard".into()],
            cruise_speed: 2.0,
            looping: false,
            autostart: false,
        }
    }

    fn wp(x: f64, y: f64, theta: f64) -> Waypoint {
        Waypoint {
            x,
            y,
            theta,
            rotate_upper: None,
            dwell: None,
        }
    }

    fn start(_: &str) -> Option<(Pose2D, f64)> {
        Some((Pose2D::origin(), 7.0))
    }

    #[test]
    fn collinear_leg_is_one_straight() {
        let w = wf(vec![wp(20.0, 0.0, 0.0)]);
        w.validate(&yard(), 2.78).unwrap();
        let out = compile_workflow(&w, &start, &yard()).unwrap();
        assert_eq!(out.len(), 1);
        match &out[0].1.actions[..] {
            [Action::FollowPath { path, .. }] => {
                assert_eq!(path.segments.len(), 1);
                assert_eq!(path.segments[0].steer, Steer::Straight);
                assert!((path.total_length - 20.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rotate_annotation_follows_arrival() {
        let mut w = wp(20.0, 0.0, 0.0);
        w.rotate_upper = Some(FRAC_PI_2);
        let out = compile_workflow(&wf(vec![w]), &start, &yard()).unwrap();
        let acts = &out[0].1.actions;
        assert!(matches!(acts[0], Action::FollowPath { .. }));
        assert_eq!(acts[1], Action::RotateUpper { target_angle: FRAC_PI_2 });
    }

    #[test]
    fn path_leaving_zone_is_rejected() {
        // turning around inside a 10 m wide strip needs more room than r_min 7 allows
        let w = wf(vec![wp(10.0, 0.0, std::f64::consts::PI)]);
        match compile_workflow(&w, &start, &yard()) {
            Err(FmsError::ZoneViolation { leg: 0, s, .. }) => {
                // first sample outside the strip, within one sampling step
                let out = compile_workflow(&w, &|_| Some((Pose2D::origin(), 7.0)), &[Zone::new(
                    "yard",
                    vec![(-50.0, -50.0), (50.0, -50.0), (50.0, 50.0), (-50.0, 50.0)],
                    ZoneKind::Operational,
                )])
                .unwrap();
                let Action::FollowPath { path, .. } = &out[0].1.actions[0] else {
                    panic!()
                };
                let samples = path.sample(ZONE_CHECK_STEP).unwrap();
                let strip = &yard()[0];
                let first_out = samples
                    .iter()
                    .find(|p| !strip.contains_closed(p.pose.x, p.pose.y))
                    .unwrap();
                assert_eq!(first_out.s, s);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn waypoint_outside_zone_is_invalid() {
        let w = wf(vec![wp(60.0, 0.0, 0.0)]);
        assert!(matches!(w.validate(&yard(), 2.78), Err(FmsError::InvalidWorkflow { .. })));
    }
}
