//! Piecewise-linear tabulation of grammar fluxes: a Lipschitz surrogate with
//! finite slopes, even for powers below one.

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::flux::FluxSpec;

/// Error samples per table interval.
const ERROR_SAMPLES: usize = 16;

/// One piecewise-linear function on shared nodes, with a bucket index for
/// segment lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeIndex {
    pub nodes: Vec<f64>,
    bucket_start: Vec<usize>,
    inv_width: f64,
}

impl NodeIndex {
    pub fn new(nodes: Vec<f64>) -> Self {
        assert!(nodes.len() >= 2 && nodes.windows(2).all(|w| w[0] < w[1]));
        let m = nodes.len();
        let (a, b) = (nodes[0], nodes[m - 1]);
        let buckets = m;
        let width = (b - a) / buckets as f64;
        let mut bucket_start = Vec::with_capacity(buckets + 1);
        let mut j = 0;
        for k in 0..=buckets {
            let edge = a + k as f64 * width;
            while j + 1 < m - 1 && nodes[j + 1] <= edge {
                j += 1;
            }
            bucket_start.push(j);
        }
        NodeIndex {
            nodes,
            bucket_start,
            inv_width: 1.0 / width,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn range(&self) -> [f64; 2] {
        [self.nodes[0], self.nodes[self.nodes.len() - 1]]
    }

    /// Largest `j <= m - 2` with `nodes[j] <= u` (or `0` below the table).
    /// Monotone in `u`: only exact comparisons decide the result.
    #[inline]
    pub fn segment(&self, u: f64) -> usize {
        let m = self.nodes.len();
        let k = ((u - self.nodes[0]) * self.inv_width).floor();
        let k = if k.is_nan() || k < 0.0 {
            0
        } else {
            (k as usize).min(self.bucket_start.len() - 1)
        };
        let mut j = self.bucket_start[k];
        while j + 1 < m - 1 && self.nodes[j + 1] <= u {
            j += 1;
        }
        while j > 0 && self.nodes[j] > u {
            j -= 1;
        }
        j
    }
}

/// Values at shared nodes with precomputed slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlValues {
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl PlValues {
    pub fn new(nodes: &[f64], values: Vec<f64>) -> Self {
        let slopes = nodes
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, v)| (v[1] - v[0]) / (x[1] - x[0]))
            .collect();
        PlValues { values, slopes }
    }

    #[inline]
    pub fn eval(&self, nodes: &[f64], j: usize, u: f64) -> f64 {
        self.values[j] + (u - nodes[j]) * self.slopes[j]
    }
}

/// A nondecreasing piecewise-linear function whose evaluation is monotone in
/// floating point: within a segment the affine formula is clamped to the
/// segment's end values, which are themselves nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonePl {
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotonePl {
    pub fn new(nodes: &[f64], raw: impl Iterator<Item = f64>) -> Self {
        let mut values: Vec<f64> = raw.collect();
        for j in 1..values.len() {
            if values[j] < values[j - 1] {
                values[j] = values[j - 1];
            }
        }
        let slopes = nodes
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, v)| ((v[1] - v[0]) / (x[1] - x[0])).max(0.0))
            .collect();
        MonotonePl { values, slopes }
    }

    #[inline]
    pub fn eval(&self, nodes: &[f64], j: usize, u: f64) -> f64 {
        let t = self.values[j] + (u - nodes[j]) * self.slopes[j];
        if u < nodes[j] {
            t.min(self.values[j])
        } else if u > nodes[j + 1] {
            t.max(self.values[j + 1])
        } else {
            t.max(self.values[j]).min(self.values[j + 1])
        }
    }
}

/// Tabulated flux vector on `[u_min, u_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxTable {
    pub index: NodeIndex,
    pub components: Vec<PlValues>,
    /// Largest `|phi - table|` over sampled points, over all components.
    pub max_error: f64,
}

impl FluxTable {
    pub fn nodes(&self) -> &[f64] {
        &self.index.nodes
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn range(&self) -> [f64; 2] {
        self.index.range()
    }

    pub fn eval(&self, component: usize, u: f64) -> f64 {
        let j = self.index.segment(u);
        self.components[component].eval(self.nodes(), j, u)
    }

    /// Largest absolute slope of one component.
    pub fn max_speed(&self, component: usize) -> f64 {
        self.components[component]
            .slopes
            .iter()
            .fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Smallest and largest slope of one component.
    pub fn speed_range(&self, component: usize) -> (f64, f64) {
        self.components[component]
            .slopes
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                (lo.min(s), hi.max(s))
            })
    }

    /// Slopes nondecreasing up to a relative tolerance.
    pub fn is_convex(&self, component: usize) -> bool {
        let s = &self.components[component].slopes;
        let scale = self.max_speed(component).max(1.0);
        s.windows(2).all(|w| w[1] >= w[0] - 1e-12 * scale)
    }
}

/// Widens a degenerate range so that the table has a positive extent.
fn widen(range: [f64; 2], limits: [f64; 2]) -> [f64; 2] {
    let [a, b] = range;
    if b > a {
        return range;
    }
    let w = 1e-6 * a.abs().max(1.0);
    let lo = (a - w).max(limits[0]);
    let hi = (b + w).min(limits[1]);
    if hi > lo {
        [lo, hi]
    } else {
        [a - w, b + w]
    }
}

/// Uniform nodes (`n_points` of them) across the range, merged with every
/// grammar breakpoint inside it.
pub fn tabulate_flux(phi: &FluxSpec, range: [f64; 2], n_points: usize) -> Result<FluxTable, SolverError> {
    let [lo, hi] = widen(range, phi.u_range);
    if !(lo.is_finite() && hi.is_finite()) || !phi.contains(lo) || !phi.contains(hi) {
        return Err(SolverError::TableRange {
            lo,
            hi,
            valid: phi.u_range,
        });
    }
    let n = n_points.max(2);
    let mut nodes: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    nodes.extend(phi.breakpoints().into_iter().filter(|&b| b > lo && b < hi));
    nodes.sort_by(f64::total_cmp);
    let tiny = 1e-12 * (hi - lo);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= tiny);
    // keep the exact range ends after de-duplication
    let last = nodes.len() - 1;
    nodes[0] = lo;
    nodes[last] = hi;

    let components: Vec<PlValues> = (0..phi.dim)
        .map(|c| {
            let values = nodes.iter().map(|&u| phi.components[c].eval(u)).collect();
            PlValues::new(&nodes, values)
        })
        .collect();

    let mut max_error = 0.0f64;
    for (c, pl) in components.iter().enumerate() {
        for j in 0..nodes.len() - 1 {
            for q in 1..ERROR_SAMPLES {
                let u = nodes[j] + (nodes[j + 1] - nodes[j]) * q as f64 / ERROR_SAMPLES as f64;
                let err = (phi.components[c].eval(u) - pl.eval(&nodes, j, u)).abs();
                max_error = max_error.max(err);
            }
        }
    }
    Ok(FluxTable {
        index: NodeIndex::new(nodes),
        components,
        max_error,
    })
}
