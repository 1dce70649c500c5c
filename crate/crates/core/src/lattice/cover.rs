//! Finite coverings `Cl(V1) ⊂ ∪ (y_i + V2)`, giving `‖u‖_{V1} <= m ‖u‖_{V2}`.

use serde::{Deserialize, Serialize};

use super::LatticeError;
use crate::shape::WindowShape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub m: usize,
    pub translates: Vec<Vec<f64>>,
}

/// Covers the closure of `v1` by translates of `v2` on a shift grid of pitch
/// `inradius(v2) / 2`.
///
/// In one dimension (and for box targets, axis by axis) the greedy sweep gives
/// the count, and the translates are then spread evenly over `Cl(V1)`. A ball
/// target in two dimensions uses greedy set cover of a `delta`-net of `Cl(V1)`
/// against `V2` shrunk by `delta`, so covering the net covers the closure.
pub fn covering_multiplicity(
    v1: &WindowShape,
    v2: &WindowShape,
    dim: usize,
) -> Result<Covering, LatticeError> {
    for (name, v) in [("V1", v1), ("V2", v2)] {
        if !v.is_valid(dim) {
            return Err(LatticeError::DegenerateShape(format!("{name} = {v:?}")));
        }
    }
    match (dim, v2) {
        (1, _) | (_, WindowShape::Box { .. }) => Ok(product_cover(v1, v2, dim)),
        (2, WindowShape::Ball { radius }) => Ok(net_cover(v1, *radius)),
        _ => Err(LatticeError::DegenerateShape(format!(
            "covering supports dimensions 1 and 2, got {dim}"
        ))),
    }
}

/// Greedy sweep of the closed interval `[a, b]` by open translates of `(c, d)`
/// with centres on a grid of pitch `(d - c) / 4`; returns the count.
fn sweep_count(a: f64, b: f64, c: f64, d: f64) -> usize {
    let pitch = 0.25 * (d - c);
    let mut x = a;
    let mut m = 0;
    loop {
        // largest grid shift y with y + c < x
        let y = pitch * (((x - c) / pitch).ceil() - 1.0);
        m += 1;
        x = y + d;
        if x > b {
            return m;
        }
    }
}

/// Evenly spread `m` translates; valid because `m (d - c) > b - a`.
fn spread(a: f64, b: f64, c: f64, d: f64, m: usize) -> Vec<f64> {
    let cell = (b - a) / m as f64;
    let centre = 0.5 * (c + d);
    (0..m)
        .map(|k| a + (k as f64 + 0.5) * cell - centre)
        .collect()
}

fn product_cover(v1: &WindowShape, v2: &WindowShape, dim: usize) -> Covering {
    let (lo1, hi1) = v1.bounds(dim);
    let (lo2, hi2) = v2.bounds(dim);
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            let m = sweep_count(lo1[k], hi1[k], lo2[k], hi2[k]);
            spread(lo1[k], hi1[k], lo2[k], hi2[k], m)
        })
        .collect();
    let mut translates: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        translates = translates
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&y| {
                    let mut t = prefix.clone();
                    t.push(y);
                    t
                })
            })
            .collect();
    }
    Covering {
        m: translates.len(),
        translates,
    }
}

fn net_cover(v1: &WindowShape, radius: f64) -> Covering {
    let spacing = radius / 16.0;
    let delta = spacing * std::f64::consts::SQRT_2 / 2.0;
    let reach = radius - delta;
    let (lo, hi) = v1.bounds(2);

    let dist_to_v1 = |p: [f64; 2]| -> f64 {
        match v1 {
            WindowShape::Ball { radius: r1 } => ((p[0] * p[0] + p[1] * p[1]).sqrt() - r1).max(0.0),
            WindowShape::Box { lo, hi } => {
                let dx = (lo[0] - p[0]).max(p[0] - hi[0]).max(0.0);
                let dy = (lo[1] - p[1]).max(p[1] - hi[1]).max(0.0);
                (dx * dx + dy * dy).sqrt()
            }
        }
    };

    let nx = ((hi[0] - lo[0]) / spacing).ceil() as i64;
    let ny = ((hi[1] - lo[1]) / spacing).ceil() as i64;
    let mut net: Vec<[f64; 2]> = Vec::new();
    for i in -1..=nx + 1 {
        for j in -1..=ny + 1 {
            let p = [lo[0] + i as f64 * spacing, lo[1] + j as f64 * spacing];
            if dist_to_v1(p) <= delta {
                net.push(p);
            }
        }
    }

    let pitch = radius / 2.0;
    let kx0 = ((lo[0] - radius) / pitch).floor() as i64;
    let kx1 = ((hi[0] + radius) / pitch).ceil() as i64;
    let ky0 = ((lo[1] - radius) / pitch).floor() as i64;
    let ky1 = ((hi[1] + radius) / pitch).ceil() as i64;
    let mut candidates: Vec<[f64; 2]> = Vec::new();
    for i in kx0..=kx1 {
        for j in ky0..=ky1 {
            candidates.push([i as f64 * pitch, j as f64 * pitch]);
        }
    }
    // ties go to the candidate nearest the origin, then lexicographic order
    candidates.sort_by(|a, b| {
        let na = a[0] * a[0] + a[1] * a[1];
        let nb = b[0] * b[0] + b[1] * b[1];
        na.total_cmp(&nb)
            .then(a[0].total_cmp(&b[0]))
            .then(a[1].total_cmp(&b[1]))
    });

    let covers = |y: &[f64; 2], p: &[f64; 2]| {
        let dx = p[0] - y[0];
        let dy = p[1] - y[1];
        dx * dx + dy * dy < reach * reach
    };

    let mut covered = vec![false; net.len()];
    let mut remaining = net.len();
    let mut translates = Vec::new();
    while remaining > 0 {
        let (best, gain) = candidates
            .iter()
            .enumerate()
            .map(|(ci, y)| {
                let gain = net
                    .iter()
                    .zip(&covered)
                    .filter(|(p, done)| !**done && covers(y, p))
                    .count();
                (ci, gain)
            })
            .fold((0usize, 0usize), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        assert!(gain > 0, "shift grid reaches every net point");
        let y = candidates[best];
        for (p, done) in net.iter().zip(covered.iter_mut()) {
            if !*done && covers(&y, p) {
                *done = true;
                remaining -= 1;
            }
        }
        translates.push(y.to_vec());
    }
    Covering {
        m: translates.len(),
        translates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: fewest open translates of width `w` covering a
    /// closed interval of length `len` is the least `m` with `m w > len`.
    fn interval_oracle(len: f64, w: f64) -> usize {
        (1..).find(|&m| m as f64 * w > len).unwrap()
    }

    #[test]
    fn one_dimensional_examples() {
        let unit = WindowShape::interval(-1.0, 1.0);
        let c = covering_multiplicity(&unit, &unit, 1).unwrap();
        assert_eq!(c.m, 2);
        assert_eq!(c.m, interval_oracle(2.0, 2.0));
        assert_eq!(c.translates, vec![vec![-0.5], vec![0.5]]);

        let wide = WindowShape::interval(-2.0, 2.0);
        let c = covering_multiplicity(&wide, &unit, 1).unwrap();
        assert_eq!(c.m, 3);
        assert_eq!(c.m, interval_oracle(4.0, 2.0));

        let narrow = WindowShape::interval(-0.5, 0.5);
        let c = covering_multiplicity(&narrow, &unit, 1).unwrap();
        assert_eq!(c.m, 1);
        assert_eq!(c.translates, vec![vec![0.0]]);

        let c = covering_multiplicity(&WindowShape::ball(1.0), &WindowShape::ball(1.0), 1).unwrap();
        assert_eq!(c.m, 2);
        let c = covering_multiplicity(&WindowShape::ball(2.0), &WindowShape::ball(1.0), 1).unwrap();
        assert_eq!(c.m, 3);
    }

    #[test]
    fn sweep_matches_oracle_over_ratios() {
        for k in 1..60 {
            let len = 0.173 * k as f64;
            let m = sweep_count(0.0, len, -1.0, 1.0);
            // grid snapping may cost at most a factor of two
            let best = interval_oracle(len, 2.0);
            assert!(m >= best && m <= 2 * best, "len {len}: {m} vs {best}");
        }
    }

    #[test]
    fn degenerate_shapes_rejected() {
        assert!(covering_multiplicity(&WindowShape::ball(0.0), &WindowShape::unit_ball(), 1).is_err());
        assert!(covering_multiplicity(&WindowShape::unit_ball(), &WindowShape::interval(1.0, 1.0), 1).is_err());
    }

    #[test]
    fn two_dimensional_ball_cover_is_valid() {
        let c = covering_multiplicity(&WindowShape::ball(2.0), &WindowShape::unit_ball(), 2).unwrap();
        // area bound: at least area ratio 4
        assert!(c.m >= 5);
        for i in 0..=200 {
            for j in 0..=200 {
                let p = [-2.0 + 0.02 * i as f64, -2.0 + 0.02 * j as f64];
                if p[0] * p[0] + p[1] * p[1] > 4.0 {
                    continue;
                }
                assert!(c.translates.iter().any(|y| {
                    let d = [p[0] - y[0], p[1] - y[1]];
                    d[0] * d[0] + d[1] * d[1] < 1.0
                }));
            }
        }
    }
}
