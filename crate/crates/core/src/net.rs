//! Simulated transport with latency, jitter, loss and outages, plus the
//! dedicated remote-stop radio.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::world::Window;

/// Latency of the stop radio; deliberately not configurable.
pub const STOP_LATENCY: f64 = 0.05;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub latency_mean: f64,
    pub jitter: f64,
    pub drop_prob: f64,
    pub outages: Vec<Window>,
    pub fifo: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            latency_mean: 0.05,
            jitter: 0.01,
            drop_prob: 0.0,
            outages: Vec::new(),
            fifo: true,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.latency_mean >= 0.0) || !self.latency_mean.is_finite() {
            return Err("latency_mean must be non-negative".into());
        }
        if !(self.jitter >= 0.0) || self.jitter > self.latency_mean {
            return Err("jitter must be within [0, latency_mean]".into());
        }
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err("drop_prob must be within [0, 1]".into());
        }
        if self.outages.iter().any(|w| !(w.end >= w.start)) {
            return Err("outage windows must have end >= start".into());
        }
        Ok(())
    }

    /// First time at or after `t` that is outside every outage.
    pub fn available_from(&self, mut t: f64) -> f64 {
        loop {
            match self.outages.iter().find(|w| t >= w.start - EPS && t < w.end) {
                Some(w) => t = w.end,
                None => return t,
            }
        }
    }

    pub fn in_outage(&self, t: f64) -> bool {
        self.available_from(t) != t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SendOutcome {
    Dropped,
    Scheduled { deliver_at: f64 },
}

#[derive(Debug, Clone)]
struct InFlight<T> {
    deliver_at: f64,
    seq: u64,
    link: String,
    msg: T,
}

/// One logical medium carrying messages on named links.
#[derive(Debug, Clone)]
pub struct Channel<T> {
    cfg: ChannelConfig,
    rng: ChaCha8Rng,
    seq: u64,
    queue: Vec<InFlight<T>>,
    last_delivery: BTreeMap<String, f64>,
}

impl<T> Channel<T> {
    pub fn new(cfg: ChannelConfig, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            cfg,
            rng,
            seq: 0,
            queue: Vec::new(),
            last_delivery: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn set_drop_prob(&mut self, p: f64) {
        self.cfg.drop_prob = p;
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    pub fn send(&mut self, link: &str, msg: T, now: f64) -> SendOutcome {
        // both draws happen for every message so the stream stays aligned
        let drop_draw: f64 = self.rng.random();
        let jitter_draw: f64 = self.rng.random_range(-1.0..=1.0);
        if drop_draw < self.cfg.drop_prob {
            return SendOutcome::Dropped;
        }
        let latency = (self.cfg.latency_mean + self.cfg.jitter * jitter_draw).max(0.0);
        let mut at = self.cfg.available_from(self.cfg.available_from(now) + latency);
        if self.cfg.fifo {
            if let Some(&prev) = self.last_delivery.get(link) {
                at = at.max(prev);
            }
            self.last_delivery.insert(link.to_string(), at);
        }
        self.queue.push(InFlight {
            deliver_at: at,
            seq: self.seq,
            link: link.to_string(),
            msg,
        });
        self.seq += 1;
        SendOutcome::Scheduled { deliver_at: at }
    }

    /// Messages due by `now`, ordered by delivery time then send order.
    pub fn deliver(&mut self, now: f64) -> Vec<(String, T)> {
        let (due, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.queue)
            .into_iter()
            .partition(|m| m.deliver_at <= now + EPS);
        self.queue = rest;
        let mut due = due;
        due.sort_by(|a, b| a.deliver_at.total_cmp(&b.deliver_at).then(a.seq.cmp(&b.seq)));
        due.into_iter().map(|m| (m.link, m.msg)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scope", content = "vehicle", rename_all = "snake_case")]
pub enum StopTarget {
    All,
    Vehicle(String),
}

/// The always-available remote-stop radio.
#[derive(Debug, Clone, Default)]
pub struct StopChannel {
    pending: Vec<(f64, u64, String)>,
    seq: u64,
}

impl StopChannel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Schedules a stop for the addressed vehicles; returns the delivery time
    /// and the vehicles reached.
    pub fn press(&mut self, target: &StopTarget, vehicles: &[String], now: f64) -> (f64, Vec<String>) {
        let at = now + STOP_LATENCY;
        let reached: Vec<String> = match target {
            StopTarget::All => vehicles.to_vec(),
            StopTarget::Vehicle(id) => vehicles.iter().filter(|v| *v == id).cloned().collect(),
        };
        for v in &reached {
            self.pending.push((at, self.seq, v.clone()));
            self.seq += 1;
        }
        (at, reached)
    }

    pub fn deliver(&mut self, now: f64) -> Vec<String> {
        let mut due: Vec<_> = Vec::new();
        self.pending.retain(|p| {
            if p.0 <= now + EPS {
                due.push(p.clone());
                false
            } else {
                true
            }
        });
        due.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        due.into_iter().map(|p| p.2).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(latency: f64, jitter: f64, drop: f64) -> ChannelConfig {
        ChannelConfig {
            latency_mean: latency,
            jitter,
            drop_prob: drop,
            outages: Vec::new(),
            fifo: true,
        }
    }

    #[test]
    fn exact_latency_without_jitter() {
        let mut ch = Channel::new(cfg(0.1, 0.0, 0.0), 1, 0);
        assert_eq!(ch.send("a", 1, 3.0), SendOutcome::Scheduled { deliver_at: 3.1 });
        assert!(ch.deliver(3.09).is_empty());
        assert_eq!(ch.deliver(3.1), vec![("a".to_string(), 1)]);
    }

    #[test]
    fn certain_drop_never_delivers() {
        let mut ch = Channel::new(cfg(0.1, 0.0, 1.0), 1, 0);
        for k in 0..100 {
            assert_eq!(ch.send("a", k, k as f64), SendOutcome::Dropped);
        }
        assert!(ch.deliver(1e9).is_empty());
    }

    #[test]
    fn outage_defers_to_window_end() {
        let mut c = cfg(0.1, 0.0, 0.0);
        c.outages.push(Window { start: 10.0, end: 15.0 });
        let mut ch = Channel::new(c, 1, 0);
        match ch.send("a", (), 12.0) {
            SendOutcome::Scheduled { deliver_at } => assert!((deliver_at - 15.1).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        // in flight when the outage begins
        match ch.send("b", (), 9.95) {
            SendOutcome::Scheduled { deliver_at } => assert_eq!(deliver_at, 15.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fifo_under_jitter() {
        let mut ch = Channel::new(cfg(0.1, 0.09, 0.0), 4, 0);
        for k in 0..200 {
            ch.send("a", k, k as f64 * 0.001);
        }
        let got: Vec<i32> = ch.deliver(10.0).into_iter().map(|m| m.1).collect();
        assert_eq!(got, (0..200).collect::<Vec<_>>());
    }

    #[test]
    fn seeded_channels_agree() {
        let run = || {
            let mut ch = Channel::new(cfg(0.1, 0.05, 0.3), 9, 2);
            (0..50).map(|k| ch.send("a", k, k as f64)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn stop_press_reaches_targets() {
        let vehicles = vec!["a".to_string(), "b".to_string()];
        let mut sc = StopChannel::new();
        let (at, reached) = sc.press(&StopTarget::All, &vehicles, 2.0);
        assert_eq!(at, 2.05);
        assert_eq!(reached, vehicles);
        assert!(sc.deliver(2.04).is_empty());
        assert_eq!(sc.deliver(2.05), vehicles);
        let (_, none) = sc.press(&StopTarget::All, &[], 3.0);
        assert!(none.is_empty());
        assert!(sc.deliver(10.0).is_empty());
    }
}
