use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneKind {
    Operational,
    Forbidden,
}

/// A simple polygon on the site plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub id: String,
    pub polygon: Vec<(f64, f64)>,
    #[serde(default = "operational")]
    pub kind: ZoneKind,
}

fn operational() -> ZoneKind {
    ZoneKind::Operational
}

const BOUNDARY_EPS: f64 = 1e-9;

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64), eps: f64) -> bool {
    let len = (b.0 - a.0).hypot(b.1 - a.1);
    if len == 0.0 {
        return (p.0 - a.0).hypot(p.1 - a.1) <= eps;
    }
    cross(a, b, p).abs() / len <= eps
        && p.0 >= a.0.min(b.0) - eps
        && p.0 <= a.0.max(b.0) + eps
        && p.1 >= a.1.min(b.1) - eps
        && p.1 <= a.1.max(b.1) + eps
}

fn segments_touch(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(a, c, d, BOUNDARY_EPS)
        || on_segment(b, c, d, BOUNDARY_EPS)
        || on_segment(c, a, b, BOUNDARY_EPS)
        || on_segment(d, a, b, BOUNDARY_EPS)
}

impl Zone {
    pub fn new(id: impl Into<String>, polygon: Vec<(f64, f64)>, kind: ZoneKind) -> Self {
        Self {
            id: id.into(),
            polygon,
            kind,
        }
    }

    fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.polygon.len();
        (0..n).map(move |i| (self.polygon[i], self.polygon[(i + 1) % n]))
    }

    /// Signed shoelace area (positive when counter-clockwise).
    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a.0 * b.1 - b.0 * a.1).sum::<f64>() / 2.0
    }

    pub fn centroid(&self) -> (f64, f64) {
        let a = self.signed_area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.edges() {
            let w = p.0 * q.1 - q.0 * p.1;
            cx += (p.0 + q.0) * w;
            cy += (p.1 + q.1) * w;
        }
        (cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.polygon.len();
        if n < 3 {
            return Err("polygon needs at least 3 vertices".into());
        }
        if self.polygon.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err("polygon vertices must be finite".into());
        }
        if self.signed_area().abs() <= 1e-12 {
            return Err("polygon area must be positive".into());
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if segments_touch(a, b, c, d) {
                    return Err(format!("polygon edges {i} and {j} intersect"));
                }
            }
        }
        Ok(())
    }

    pub fn on_boundary(&self, x: f64, y: f64) -> bool {
        self.edges().any(|(a, b)| on_segment((x, y), a, b, BOUNDARY_EPS))
    }

    fn crossing_parity(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.1 > y) != (b.1 > y) {
                let xi = a.0 + (y - a.1) * (b.0 - a.0) / (b.1 - a.1);
                if x < xi {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Interior test that excludes the boundary.
    pub fn contains_strict(&self, x: f64, y: f64) -> bool {
        !self.on_boundary(x, y) && self.crossing_parity(x, y)
    }

    /// Interior test that includes the boundary.
    pub fn contains_closed(&self, x: f64, y: f64) -> bool {
        self.on_boundary(x, y) || self.crossing_parity(x, y)
    }
}
