//! Exact-solution oracles: the Lax-Oleinik formula for convex 1D fluxes and
//! the traveling wave for affine fluxes.

use rayon::prelude::*;

use super::table::FluxTable;
use super::SolverError;
use crate::grid::GridFunction;

/// Lax-Oleinik minimisation for a convex tabulated flux `f` and piecewise
/// constant data:
///
/// `u(t, x) = (f*)'((x - y*) / t)`, `y* = argmin_y U0(y) + t f*((x - y) / t)`,
///
/// where `U0` is the primitive of `u0`. Both terms are piecewise linear in
/// `y`, so the minimum is attained at a kink: a cell edge of `u0` or a point
/// `x - t s_j` with `s_j` a table slope. All of them are tried.
#[derive(Debug, Clone)]
pub struct HopfLax {
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// Cell edges of the support of `u0`, and `U0` at each.
    edges: Vec<f64>,
    primitive: Vec<f64>,
    u0: GridFunction,
}

impl HopfLax {
    pub fn new(table: &FluxTable, u0: &GridFunction) -> Result<Self, SolverError> {
        if table.dim() != 1 || u0.dim() != 1 {
            return Err(SolverError::Config("Lax-Oleinik oracle is one-dimensional".into()));
        }
        if !table.is_convex(0) {
            return Err(SolverError::NotConvex);
        }
        let [lo, hi] = table.range();
        let (dmin, dmax) = u0.min_max();
        if dmin.min(0.0) < lo || dmax.max(0.0) > hi {
            return Err(SolverError::Config(format!(
                "data range [{dmin}, {dmax}] and 0 must lie in the table range [{lo}, {hi}]"
            )));
        }
        let (edges, primitive) = match u0.support_indices() {
            None => (vec![u0.origin[0]], vec![0.0]),
            Some((a, b)) => {
                let mut edges = Vec::with_capacity(b[0] - a[0] + 2);
                let mut prim = Vec::with_capacity(b[0] - a[0] + 2);
                let mut acc = 0.0;
                edges.push(u0.origin[0] + a[0] as f64 * u0.h);
                prim.push(0.0);
                for i in a[0]..=b[0] {
                    acc += u0.values[i] * u0.h;
                    edges.push(u0.origin[0] + (i + 1) as f64 * u0.h);
                    prim.push(acc);
                }
                (edges, prim)
            }
        };
        Ok(HopfLax {
            nodes: table.nodes().to_vec(),
            values: table.components[0].values.clone(),
            slopes: table.components[0].slopes.clone(),
            edges,
            primitive,
            u0: u0.clone(),
        })
    }

    /// `U0(y) = ∫_{-inf}^y u0`.
    fn big_u0(&self, y: f64) -> f64 {
        let n = self.edges.len();
        if y <= self.edges[0] {
            return 0.0;
        }
        if y >= self.edges[n - 1] {
            return self.primitive[n - 1];
        }
        let i = self.edges.partition_point(|&e| e <= y) - 1;
        self.primitive[i] + (y - self.edges[i]) * self.u0.value_at(&[y])
    }

    /// Index of the node maximising `q u_j - f_j`, i.e. `(f*)'(q)`.
    fn dual_node(&self, q: f64) -> usize {
        // slopes are nondecreasing; node j is optimal for slopes[j-1] <= q <= slopes[j]
        self.slopes.partition_point(|&s| s < q)
    }

    fn legendre(&self, q: f64) -> f64 {
        let j = self.dual_node(q);
        q * self.nodes[j] - self.values[j]
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        if t <= 0.0 {
            return self.u0.value_at(&[x]);
        }
        // (objective, y, kink index when y = x - t s_j)
        let mut best = (f64::INFINITY, 0.0, None::<usize>);
        for (j, &s) in self.slopes.iter().enumerate() {
            let y = x - t * s;
            let obj = self.big_u0(y) + t * self.legendre(s);
            if obj < best.0 {
                best = (obj, y, Some(j));
            }
        }
        for &y in &self.edges {
            let obj = self.big_u0(y) + t * self.legendre((x - y) / t);
            if obj < best.0 {
                best = (obj, y, None);
            }
        }
        match best.2 {
            Some(j) => {
                // on a run of segments sharing the slope s_j: any value
                // between the run's end nodes
                let s = self.slopes[j];
                let mut a = j;
                while a > 0 && self.slopes[a - 1] == s {
                    a -= 1;
                }
                let mut b = j;
                while b + 1 < self.slopes.len() && self.slopes[b + 1] == s {
                    b += 1;
                }
                let v = self.u0.value_at(&[best.1]);
                v.max(self.nodes[a]).min(self.nodes[b + 1])
            }
            None => self.nodes[self.dual_node((x - best.1) / t)],
        }
    }

    /// The oracle sampled at the cell centres of `grid`.
    pub fn on_grid(&self, t: f64, grid: &GridFunction) -> GridFunction {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|k| self.value(t, grid.center(k)[0]))
            .collect();
        GridFunction {
            values,
            ..grid.clone()
        }
    }
}

/// Single-point form of the oracle.
pub fn hopf_lax_1d(table: &FluxTable, u0: &GridFunction, t: f64, x: f64) -> Result<f64, SolverError> {
    Ok(HopfLax::new(table, u0)?.value(t, x))
}

/// `u(t, x) = u0(x - t c)`, carried exactly by moving the grid origin.
pub fn traveling_wave(u0: &GridFunction, c: &[f64], t: f64) -> GridFunction {
    let shift: Vec<f64> = c.iter().map(|ci| ci * t).collect();
    u0.translated(&shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{linear, FluxSpec};
    use crate::norms::{l1_over, x_norm};
    use crate::shape::WindowShape;
    use crate::solver::tabulate_flux;

    fn unit_box(h: f64) -> GridFunction {
        GridFunction::from_fn(vec![-1.0], h, vec![(3.0 / h) as usize], |x| {
            if (0.0..1.0).contains(&x[0]) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn affine_flux_transports() {
        let h = 1.0 / 64.0;
        let u0 = unit_box(h);
        let phi = FluxSpec::new(vec![linear(0.75)], [-2.0, 2.0]).unwrap();
        let table = tabulate_flux(&phi, [0.0, 1.0], 9).unwrap();
        let hl = HopfLax::new(&table, &u0).unwrap();
        for i in 0..200 {
            let x = -1.0 + (i as f64 + 0.3) * 0.021;
            assert_eq!(hl.value(2.0, x), u0.value_at(&[x - 1.5]), "x = {x}");
        }
    }

    #[test]
    fn burgers_shock_positions() {
        let h = 1.0 / 256.0;
        let u0 = unit_box(h);
        let table = tabulate_flux(&FluxSpec::burgers(2.0), [0.0, 1.0], 1025).unwrap();
        let hl = HopfLax::new(&table, &u0).unwrap();
        // rectangle phase (until the fan head x = t meets the shock at t = 2):
        // shock at 1 + t/2
        for t in [0.5, 1.0, 1.5] {
            let s = 1.0 + 0.5 * t;
            assert_eq!(hl.value(t, s - 0.01), 1.0);
            assert_eq!(hl.value(t, s + 0.01), 0.0);
        }
        // triangle phase at t = 8: shock at 4, peak 1/2
        assert!((hl.value(2.0, 1.99) - 0.995).abs() < 1e-3);
        let t = 8.0;
        assert!(hl.value(t, 3.99) > 0.49 && hl.value(t, 3.99) <= 0.5 + 1e-3);
        assert_eq!(hl.value(t, 4.01), 0.0);
        assert!((hl.value(t, 2.0) - 0.25).abs() < 2e-3);
    }

    #[test]
    fn nonconvex_rejected() {
        let phi = FluxSpec::new(vec![crate::flux::third_cube()], [-2.0, 2.0]).unwrap();
        let table = tabulate_flux(&phi, [-1.0, 1.0], 33).unwrap();
        assert!(matches!(HopfLax::new(&table, &unit_box(0.1)), Err(SolverError::NotConvex)));
    }

    #[test]
    fn traveling_wave_examples() {
        let h = 1.0 / 100.0;
        let u0 = unit_box(h);
        assert_eq!(traveling_wave(&u0, &[0.0], 3.0), u0);
        let moved = traveling_wave(&u0, &[2.0], 1.5);
        assert_eq!(moved.value_at(&[3.5]), 1.0);
        assert_eq!(moved.value_at(&[2.5]), 0.0);
        assert_eq!(l1_over(&moved, &WindowShape::unit_ball(), &[0.0]), 0.0);
        assert_eq!(x_norm(&moved), x_norm(&u0));
    }
}
