//! Brute-force shortest-path oracle for curvature-bounded forward/reverse
//! motion.
//!
//! Every word structure that can be optimal (CSC, CCC, CC|CC with equal inner
//! arcs, CC(π/2)SC, CSC(π/2)C, CC(π/2)SC(π/2)C) is enumerated with all
//! steering and sign choices, and its three free parameters are solved
//! numerically with damped Newton iterations from a grid of starting points.
//! Any root is a feasible path, so the minimum over roots is an upper bound
//! on the optimum that becomes exact once the right root is found. Nothing
//! here shares code with the closed-form planner.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Turn {
    L,
    R,
    S,
}

impl Turn {
    fn kappa(self) -> f64 {
        match self {
            Turn::L => 1.0,
            Turn::R => -1.0,
            Turn::S => 0.0,
        }
    }
}

/// Signed length of a piece: `mult * params[idx]`, or a constant.
#[derive(Clone, Copy, Debug)]
enum Len {
    Free(usize, f64),
    Const(f64),
}

#[derive(Clone, Debug)]
struct Pattern {
    turns: Vec<Turn>,
    lens: Vec<Len>,
}

fn wrap(a: f64) -> f64 {
    let mut r = a % TAU;
    if r > PI {
        r -= TAU;
    } else if r <= -PI {
        r += TAU;
    }
    r
}

fn patterns() -> Vec<Pattern> {
    use Len::{Const, Free};
    use Turn::{L, R, S};
    let c = [L, R];
    let other = |t: Turn| if t == L { R } else { L };
    let mut out = Vec::new();
    // C S C
    for a in c {
        for b in c {
            out.push(Pattern {
                turns: vec![a, S, b],
                lens: vec![Free(0, 1.0), Free(1, 1.0), Free(2, 1.0)],
            });
        }
    }
    // C C C
    for a in c {
        out.push(Pattern {
            turns: vec![a, other(a), a],
            lens: vec![Free(0, 1.0), Free(1, 1.0), Free(2, 1.0)],
        });
    }
    // C Cu Cu C
    for a in c {
        for m in [1.0, -1.0] {
            out.push(Pattern {
                turns: vec![a, other(a), a, other(a)],
                lens: vec![Free(0, 1.0), Free(1, 1.0), Free(1, m), Free(2, 1.0)],
            });
        }
    }
    // C C(π/2) S C and C S C(π/2) C
    for a in c {
        for b in c {
            for h in [FRAC_PI_2, -FRAC_PI_2] {
                out.push(Pattern {
                    turns: vec![a, other(a), S, b],
                    lens: vec![Free(0, 1.0), Const(h), Free(1, 1.0), Free(2, 1.0)],
                });
                out.push(Pattern {
                    turns: vec![b, S, a, other(a)],
                    lens: vec![Free(0, 1.0), Free(1, 1.0), Const(h), Free(2, 1.0)],
                });
            }
        }
    }
    // C C(π/2) S C(π/2) C
    for a in c {
        for b in c {
            for h1 in [FRAC_PI_2, -FRAC_PI_2] {
                for h2 in [FRAC_PI_2, -FRAC_PI_2] {
                    out.push(Pattern {
                        turns: vec![a, other(a), S, b, other(b)],
                        lens: vec![Free(0, 1.0), Const(h1), Free(1, 1.0), Const(h2), Free(2, 1.0)],
                    });
                }
            }
        }
    }
    out
}

fn piece_lengths(p: &Pattern, params: &[f64; 3]) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (i, l) in p.lens.iter().enumerate() {
        out[i] = match *l {
            Len::Free(k, m) => m * params[k],
            Len::Const(c) => c,
        };
    }
    out
}

/// End pose from the origin plus the Jacobian of the end pose with respect
/// to the three free parameters.
fn forward(p: &Pattern, params: &[f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let lens = piece_lengths(p, params);
    let n = p.turns.len();
    let (mut x, mut y, mut th) = (0.0f64, 0.0f64, 0.0f64);
    // pose at the end of every piece
    let mut ends = [(0.0, 0.0, 0.0); 5];
    for i in 0..n {
        let k = p.turns[i].kappa();
        let d = lens[i];
        if k == 0.0 {
            x += d * th.cos();
            y += d * th.sin();
        } else {
            let th1 = th + k * d;
            x += (th1.sin() - th.sin()) / k;
            y -= (th1.cos() - th.cos()) / k;
            th = th1;
        }
        ends[i] = (x, y, th);
    }
    // lengthening piece i inserts a small motion at its end, which carries
    // the rest of the path rigidly along
    let mut jac = [[0.0; 3]; 3];
    for (i, &(xi, yi, thi)) in ends.iter().enumerate().take(n) {
        let k = p.turns[i].kappa();
        let col = [
            thi.cos() - k * (y - yi),
            thi.sin() + k * (x - xi),
            k,
        ];
        if let Len::Free(idx, m) = p.lens[i] {
            for r in 0..3 {
                jac[r][idx] += m * col[r];
            }
        }
    }
    ([x, y, th], jac)
}

fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-14 {
        return None;
    }
    let mut out = [0.0; 3];
    for col in 0..3 {
        let mut m = *a;
        for r in 0..3 {
            m[r][col] = b[r];
        }
        let d = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        out[col] = d / det;
    }
    Some(out)
}

fn residual(end: &[f64; 3], goal: &[f64; 3]) -> [f64; 3] {
    [end[0] - goal[0], end[1] - goal[1], wrap(end[2] - goal[2])]
}

fn norm(r: &[f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

fn newton(p: &Pattern, goal: &[f64; 3], mut q: [f64; 3]) -> Option<[f64; 3]> {
    let (end, mut jac) = forward(p, &q);
    let mut r = residual(&end, goal);
    let mut rn = norm(&r);
    for _ in 0..60 {
        if rn < 1e-13 {
            return Some(q);
        }
        let step = solve3(&jac, &r)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = [q[0] - lambda * step[0], q[1] - lambda * step[1], q[2] - lambda * step[2]];
            let (e, j) = forward(p, &cand);
            let rc = residual(&e, goal);
            let rcn = norm(&rc);
            if rcn < rn {
                q = cand;
                r = rc;
                rn = rcn;
                jac = j;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (rn < 1e-10).then_some(q)
}

fn cost(p: &Pattern, q: &[f64; 3]) -> f64 {
    piece_lengths(p, q)[..p.turns.len()].iter().map(|l| l.abs()).sum()
}

/// Shortest path length for a unit turning radius from the origin (heading
/// 0) to `(x, y, phi)`.
pub fn unit_shortest(x: f64, y: f64, phi: f64) -> f64 {
    let goal = [x, y, wrap(phi)];
    let d = x.hypot(y);
    let arcs = [-2.4, -0.8, 0.8, 2.4];
    let lines = [-d - 1.0, -0.3 * d, 0.3 * d, d + 1.0];
    let mut best = f64::INFINITY;
    for p in patterns() {
        let grid = |idx: usize| -> &[f64; 4] {
            // which piece owns the parameter decides its scale
            let owner = p
                .lens
                .iter()
                .position(|l| matches!(l, Len::Free(k, _) if *k == idx))
                .unwrap();
            if p.turns[owner] == Turn::S {
                &lines
            } else {
                &arcs
            }
        };
        let (g0, g1, g2) = (grid(0), grid(1), grid(2));
        for &a in g0 {
            for &b in g1 {
                for &c in g2 {
                    if let Some(q) = newton(&p, &goal, [a, b, c]) {
                        best = best.min(cost(&p, &q));
                    }
                }
            }
        }
    }
    // the straight segment alone is a root of CSC with zero arcs; also
    // cover the trivial identity
    if norm(&residual(&[0.0, 0.0, 0.0], &goal)) < 1e-12 {
        best = 0.0;
    }
    best
}

/// Shortest path length between two world poses with turning radius `r`.
pub fn shortest_length(start: (f64, f64, f64), goal: (f64, f64, f64), r: f64) -> f64 {
    let (s, c) = start.2.sin_cos();
    let dx = goal.0 - start.0;
    let dy = goal.1 - start.1;
    let x = (c * dx + s * dy) / r;
    let y = (-s * dx + c * dy) / r;
    unit_shortest(x, y, goal.2 - start.2) * r
}
