//! Append-only NDJSON event log, the fleet-state reducer and replay.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const LOG_FORMAT: &str = "fleetsim-log/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub seq: u64,
    pub sim_time: f64,
    pub source: String,
    pub kind: String,
    pub payload: Value,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("log truncated after seq {last_good_seq:?}")]
    TruncatedLog { last_good_seq: Option<u64> },
    #[error("malformed record at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("log io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VehicleView {
    pub mode: String,
    pub pose: (f64, f64, f64),
    pub speed: f64,
    pub mission_id: Option<String>,
    pub fault: Option<String>,
    pub latched: bool,
    pub holds: BTreeSet<String>,
    pub goals_reached: u64,
    pub missions_completed: u64,
}

/// Fleet state rebuilt from the log alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FleetState {
    pub last_seq: Option<u64>,
    pub sim_time: f64,
    pub vehicles: BTreeMap<String, VehicleView>,
    pub intruded_zones: BTreeSet<String>,
    pub conflicts: BTreeSet<(String, String)>,
    pub counts: BTreeMap<String, u64>,
}

fn text(v: &Value, key: &str) -> Option<String> {
    v.get(key).and_then(Value::as_str).map(str::to_string)
}

fn hold_name(v: &Value) -> String {
    match (v.get("hold").and_then(Value::as_str), v.get("zone").and_then(Value::as_str)) {
        (Some(h), Some(z)) => format!("{h}:{z}"),
        (Some(h), None) => h.to_string(),
        _ => v.to_string(),
    }
}

impl FleetState {
    /// Folds one record into the state.
    pub fn apply(&mut self, r: &Record) {
        self.last_seq = Some(r.seq);
        self.sim_time = r.sim_time;
        *self.counts.entry(r.kind.clone()).or_default() += 1;
        let p = &r.payload;
        match r.kind.as_str() {
            "header" => {
                if let Some(vs) = p.pointer("/config/vehicles").and_then(Value::as_array) {
                    for v in vs {
                        let id = text(v, "id").unwrap_or_default();
                        let pose = &v["pose"];
                        let view = VehicleView {
                            mode: "idle".into(),
                            pose: (
                                pose["x"].as_f64().unwrap_or(0.0),
                                pose["y"].as_f64().unwrap_or(0.0),
                                pose["theta"].as_f64().unwrap_or(0.0),
                            ),
                            ..Default::default()
                        };
                        self.vehicles.insert(id, view);
                    }
                }
            }
            "telemetry" => {
                if let Some(vs) = p.get("vehicles").and_then(Value::as_array) {
                    for v in vs {
                        let Some(view) = text(v, "id").and_then(|id| self.vehicles.get_mut(&id)) else {
                            continue;
                        };
                        let t = &v["true_pose"];
                        view.pose = (
                            t["x"].as_f64().unwrap_or(0.0),
                            t["y"].as_f64().unwrap_or(0.0),
                            t["theta"].as_f64().unwrap_or(0.0),
                        );
                        view.speed = v["speed"].as_f64().unwrap_or(0.0);
                    }
                }
            }
            _ => {
                let vehicle = text(p, "vehicle").unwrap_or_else(|| r.source.clone());
                let view = self.vehicles.get_mut(&vehicle);
                match (r.kind.as_str(), view) {
                    ("mode_changed", Some(v)) => v.mode = text(p, "to").unwrap_or_default(),
                    ("mission_accepted" | "mission_swapped", Some(v)) => v.mission_id = text(p, "mission_id"),
                    ("fault_raised", Some(v)) => v.fault = text(p, "fault"),
                    ("fault_cleared", Some(v)) => v.fault = None,
                    ("goal_reached", Some(v)) => v.goals_reached += 1,
                    ("mission_completed", Some(v)) => v.missions_completed += 1,
                    ("stop_latched", Some(v)) => v.latched = true,
                    ("latch_cleared", Some(v)) => v.latched = false,
                    ("hold_added", Some(v)) => {
                        v.holds.insert(hold_name(&p["hold"]));
                    }
                    ("hold_released", Some(v)) => {
                        v.holds.remove(&hold_name(&p["hold"]));
                    }
                    ("conflict_detected", _) => {
                        if let (Some(a), Some(b)) = (text(p, "a"), text(p, "b")) {
                            self.conflicts.insert((a, b));
                        }
                    }
                    ("conflict_cleared", _) => {
                        if let (Some(a), Some(b)) = (text(p, "a"), text(p, "b")) {
                            self.conflicts.remove(&(a, b));
                        }
                    }
                    ("intrusion_detected", _) => {
                        if let Some(z) = text(p, "zone") {
                            self.intruded_zones.insert(z);
                        }
                    }
                    ("zone_cleared", _) => {
                        if let Some(z) = text(p, "zone") {
                            self.intruded_zones.remove(&z);
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("fleet state serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Record sink that numbers records and keeps the reducer in step.
pub struct EventLog {
    seq: u64,
    state: FleetState,
    records: Option<Vec<Record>>,
    writer: Option<Box<dyn Write + Send>>,
    lines: Option<Vec<String>>,
}

impl std::fmt::Debug for EventLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventLog").field("seq", &self.seq).finish_non_exhaustive()
    }
}

impl EventLog {
    /// `keep_records` retains parsed records; `keep_lines` retains the
    /// serialized text.
    pub fn new(keep_records: bool, keep_lines: bool, writer: Option<Box<dyn Write + Send>>) -> Self {
        Self {
            seq: 0,
            state: FleetState::default(),
            records: keep_records.then(Vec::new),
            writer,
            lines: keep_lines.then(Vec::new),
        }
    }

    pub fn state(&self) -> &FleetState {
        &self.state
    }

    pub fn records(&self) -> &[Record] {
        self.records.as_deref().unwrap_or(&[])
    }

    pub fn lines(&self) -> &[String] {
        self.lines.as_deref().unwrap_or(&[])
    }

    pub fn next_seq(&self) -> u64 {
        self.seq
    }

    pub fn append(&mut self, sim_time: f64, source: &str, kind: &str, payload: Value) -> std::io::Result<u64> {
        let r = Record {
            seq: self.seq,
            sim_time,
            source: source.to_string(),
            kind: kind.to_string(),
            payload,
        };
        self.seq += 1;
        if kind != "end" {
            self.state.apply(&r);
        }
        if self.writer.is_some() || self.lines.is_some() {
            let line = serde_json::to_string(&r).expect("record serializes");
            if let Some(w) = self.writer.as_mut() {
                w.write_all(line.as_bytes())?;
                w.write_all(b"\n")?;
            }
            if let Some(lines) = self.lines.as_mut() {
                lines.push(line);
            }
        }
        if let Some(rs) = self.records.as_mut() {
            rs.push(r);
        }
        Ok(self.seq - 1)
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        match self.writer.as_mut() {
            Some(w) => w.flush(),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub state: FleetState,
    pub digest: String,
    /// Digest stored in the end record, if the log was closed.
    pub recorded_digest: Option<String>,
}

impl Replay {
    pub fn matches(&self) -> bool {
        self.recorded_digest.as_deref() == Some(self.digest.as_str())
    }
}

/// Pure fold over a log. An empty input yields the initial state; a log
/// that stops before its end record is reported as truncated.
pub fn replay<R: BufRead>(input: R) -> Result<Replay, LogError> {
    let mut state = FleetState::default();
    let mut recorded = None;
    let mut last_good: Option<u64> = None;
    let mut seen_any = false;
    let mut ended = false;
    let mut content = String::new();
    let mut reader = input;
    let mut line_no = 0;
    loop {
        content.clear();
        let n = reader.read_line(&mut content)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if ended {
            return Err(LogError::Malformed {
                line: line_no,
                reason: "record after end".into(),
            });
        }
        if !content.ends_with('\n') {
            return Err(LogError::TruncatedLog { last_good_seq: last_good });
        }
        let rec: Record = match serde_json::from_str(content.trim_end()) {
            Ok(r) => r,
            Err(e) if e.is_eof() => return Err(LogError::TruncatedLog { last_good_seq: last_good }),
            Err(e) => {
                return Err(LogError::Malformed {
                    line: line_no,
                    reason: e.to_string(),
                })
            }
        };
        let expected = last_good.map_or(0, |s| s + 1);
        if rec.seq != expected {
            return Err(LogError::Malformed {
                line: line_no,
                reason: format!("expected seq {expected}, found {}", rec.seq),
            });
        }
        seen_any = true;
        last_good = Some(rec.seq);
        if rec.kind == "end" {
            recorded = text(&rec.payload, "digest");
            ended = true;
        } else {
            state.apply(&rec);
        }
    }
    if seen_any && !ended {
        return Err(LogError::TruncatedLog { last_good_seq: last_good });
    }
    let digest = state.digest();
    Ok(Replay {
        state,
        digest,
        recorded_digest: recorded,
    })
}
