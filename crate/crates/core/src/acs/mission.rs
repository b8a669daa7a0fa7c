use serde::{Deserialize, Serialize};

use crate::geom::RSPath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    FollowPath { path: RSPath, cruise_speed: f64 },
    RotateUpper { target_angle: f64 },
    Dwell { duration: f64 },
}

/// Ordered action list executed by one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub mission_id: String,
    pub actions: Vec<Action>,
}

impl Mission {
    pub fn new(mission_id: impl Into<String>, actions: Vec<Action>) -> Self {
        Self {
            mission_id: mission_id.into(),
            actions,
        }
    }

    pub fn goal(&self) -> Option<crate::geom::Pose2D> {
        self.actions.iter().rev().find_map(|a| match a {
            Action::FollowPath { path, .. } => Some(path.goal()),
            _ => None,
        })
    }
}
