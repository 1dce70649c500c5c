//! The monotone update, written in incremental form
//!
//! `u_i' = C(u_i) + sum_a [ L_a(u_{i-e_a}) + R_a(u_{i+e_a}) ]`
//!
//! with every piece nondecreasing and evaluated monotonically, followed by a
//! clamp to the stencil range. The computed update is then nondecreasing in
//! each argument in floating point, which makes comparison and the maximum
//! principle exact rather than approximate.
//!
//! Lax-Friedrichs: `C = (1 - sum_a lambda_a alpha_a) u`,
//! `L_a = lambda_a (alpha_a u + f_a) / 2`, `R_a = lambda_a (alpha_a u - f_a) / 2`.
//!
//! Engquist-Osher, per axis: `C = u - sum_a lambda_a V_a(u)`, `L_a = lambda_a f_a+`,
//! `R_a = -lambda_a f_a-`, where `f_a+`/`f_a-` integrate the positive/negative
//! parts of `f_a'` and `V_a = f_a+ - f_a-`.

use rayon::prelude::*;

use super::table::{FluxTable, MonotonePl};
use super::{SchemeKind, SolverError};

/// A uniform grid with either outflow (copy) or periodic boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub periodic: bool,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Neighbour along `axis` in direction `dir` (`-1` or `+1`) of the cell at
    /// `(i0, i1)`, as a flat index.
    #[inline]
    fn neighbour(&self, i0: usize, i1: usize, axis: usize, dir: isize) -> usize {
        let n0 = self.shape[0];
        let (mut j0, mut j1) = (i0 as isize, i1 as isize);
        let n = self.shape[axis] as isize;
        let pos = if axis == 0 { &mut j0 } else { &mut j1 };
        *pos += dir;
        if *pos < 0 {
            *pos = if self.periodic { n - 1 } else { 0 };
        } else if *pos >= n {
            *pos = if self.periodic { 0 } else { n - 1 };
        }
        j0 as usize + n0 * j1 as usize
    }
}

/// Nondecreasing update pieces for one value of `dt`.
#[derive(Debug, Clone)]
pub struct Pieces {
    pub dt: f64,
    pub lambda: Vec<f64>,
    center: Center,
    left: Vec<MonotonePl>,
    right: Vec<MonotonePl>,
}

#[derive(Debug, Clone)]
enum Center {
    Linear(f64),
    Pl(MonotonePl),
}

/// Index range per axis (inclusive) of cells to update.
pub type Region = Vec<(usize, usize)>;

#[derive(Debug, Clone)]
pub struct Stepper {
    pub table: FluxTable,
    pub kind: SchemeKind,
    pub cfl: f64,
    pub mesh: Mesh,
    /// Per-axis speed bound `alpha_a >= max |f_a'|`.
    pub alpha: Vec<f64>,
    /// Full step size.
    pub dt: f64,
    /// Engquist-Osher splitting `f+`, `f-` at the nodes, per axis.
    eo_parts: Option<Vec<(Vec<f64>, Vec<f64>)>>,
}

impl Stepper {
    pub fn new(table: FluxTable, kind: SchemeKind, cfl: f64, mesh: Mesh) -> Result<Self, SolverError> {
        if !(cfl > 0.0 && cfl <= 0.5) {
            return Err(SolverError::Cfl(format!("CFL number {cfl} outside (0, 0.5]")));
        }
        if table.dim() != mesh.dim() {
            return Err(SolverError::Config(format!(
                "flux has {} components, mesh has dimension {}",
                table.dim(),
                mesh.dim()
            )));
        }
        let alpha: Vec<f64> = (0..mesh.dim()).map(|a| table.max_speed(a)).collect();
        let rate: f64 = alpha.iter().zip(&mesh.spacing).map(|(a, h)| a / h).sum();
        let dt = if rate > 0.0 { cfl / rate } else { f64::INFINITY };
        let eo_parts = (kind == SchemeKind::EngquistOsher).then(|| {
            table
                .components
                .iter()
                .map(|f| {
                    let mut plus = vec![f.values[0]];
                    let mut minus = vec![0.0];
                    for j in 0..f.values.len() - 1 {
                        let df = f.values[j + 1] - f.values[j];
                        plus.push(plus[j] + df.max(0.0));
                        minus.push(minus[j] + df.min(0.0));
                    }
                    (plus, minus)
                })
                .collect()
        });
        Ok(Stepper {
            table,
            kind,
            cfl,
            mesh,
            alpha,
            dt,
            eo_parts,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        self.table.nodes()
    }

    /// The pieces for a step of size `dt` (at most the full step).
    pub fn pieces(&self, dt: f64) -> Result<Pieces, SolverError> {
        let lambda: Vec<f64> = self.mesh.spacing.iter().map(|h| dt / h).collect();
        let courant: f64 = lambda.iter().zip(&self.alpha).map(|(l, a)| l * a).sum();
        if courant > 1.0 {
            return Err(SolverError::Cfl(format!(
                "step {dt} gives Courant number {courant} > 1"
            )));
        }
        let nodes = self.nodes();
        match self.kind {
            SchemeKind::LaxFriedrichs => {
                let mut left = Vec::new();
                let mut right = Vec::new();
                for (a, comp) in self.table.components.iter().enumerate() {
                    let (l, al) = (lambda[a], self.alpha[a]);
                    left.push(MonotonePl::new(
                        nodes,
                        nodes
                            .iter()
                            .zip(&comp.values)
                            .map(|(&u, &f)| 0.5 * l * (al * u + f)),
                    ));
                    right.push(MonotonePl::new(
                        nodes,
                        nodes
                            .iter()
                            .zip(&comp.values)
                            .map(|(&u, &f)| 0.5 * l * (al * u - f)),
                    ));
                }
                Ok(Pieces {
                    dt,
                    center: Center::Linear((1.0 - courant).max(0.0)),
                    lambda,
                    left,
                    right,
                })
            }
            SchemeKind::EngquistOsher => {
                // the centre is nondecreasing since its slope is 1 - sum lambda_a |f_a'|
                let parts = self.eo_parts.as_ref().expect("EO parts");
                let center = MonotonePl::new(
                    nodes,
                    (0..nodes.len()).map(|j| {
                        nodes[j]
                            - parts
                                .iter()
                                .zip(&lambda)
                                .map(|((p, m), l)| l * (p[j] - m[j]))
                                .sum::<f64>()
                    }),
                );
                let left = parts
                    .iter()
                    .zip(&lambda)
                    .map(|((p, _), &l)| MonotonePl::new(nodes, p.iter().map(|&v| l * v)))
                    .collect();
                let right = parts
                    .iter()
                    .zip(&lambda)
                    .map(|((_, m), &l)| MonotonePl::new(nodes, m.iter().map(|&v| -l * v)))
                    .collect();
                Ok(Pieces {
                    dt,
                    center: Center::Pl(center),
                    lambda,
                    left,
                    right,
                })
            }
        }
    }

    /// Fails when values leave the tabulated range.
    pub fn check_range(&self, values: &[f64]) -> Result<(), SolverError> {
        let [lo, hi] = self.table.range();
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, &v)| !(v >= lo && v <= hi)) {
            return Err(SolverError::OutsideTable { cell: i, value: v, lo, hi });
        }
        Ok(())
    }

    /// One step on `region` (all other cells of `next` are left untouched).
    pub fn step(&self, p: &Pieces, cur: &[f64], next: &mut [f64], region: &Region) {
        let nodes = self.nodes();
        let mesh = &self.mesh;
        let n0 = mesh.shape[0];
        let seg = |u: f64| self.table.index.segment(u);
        let update = |i0: usize, i1: usize| -> f64 {
            let k = i0 + n0 * i1;
            let u = cur[k];
            let mut lo = u;
            let mut hi = u;
            let mut v = match &p.center {
                Center::Linear(c) => c * u,
                Center::Pl(pl) => pl.eval(nodes, seg(u), u),
            };
            for a in 0..mesh.dim() {
                let ul = cur[mesh.neighbour(i0, i1, a, -1)];
                let ur = cur[mesh.neighbour(i0, i1, a, 1)];
                v += p.left[a].eval(nodes, seg(ul), ul);
                v += p.right[a].eval(nodes, seg(ur), ur);
                lo = lo.min(ul).min(ur);
                hi = hi.max(ul).max(ur);
            }
            v.max(lo).min(hi)
        };
        if mesh.dim() == 1 {
            let (a, b) = region[0];
            for (i0, out) in next[a..=b].iter_mut().enumerate() {
                *out = update(a + i0, 0);
            }
        } else {
            let (a0, b0) = region[0];
            let (a1, b1) = region[1];
            next.par_chunks_mut(n0)
                .enumerate()
                .filter(|(i1, _)| *i1 >= a1 && *i1 <= b1)
                .for_each(|(i1, row)| {
                    for (i0, out) in row[a0..=b0].iter_mut().enumerate() {
                        *out = update(a0 + i0, i1);
                    }
                });
        }
    }

    /// Flux-form numerical flux along `axis`: `F(a, b)`.
    pub fn numerical_flux(&self, axis: usize, a: f64, b: f64) -> f64 {
        match self.kind {
            SchemeKind::LaxFriedrichs => {
                let fa = self.table.eval(axis, a);
                let fb = self.table.eval(axis, b);
                0.5 * (fa + fb) - 0.5 * self.alpha[axis] * (b - a)
            }
            SchemeKind::EngquistOsher => {
                let (plus, minus) = &self.eo_parts.as_ref().expect("EO parts")[axis];
                let nodes = self.nodes();
                let interp = |vals: &[f64], u: f64| {
                    let j = self.table.index.segment(u);
                    vals[j] + (u - nodes[j]) * (vals[j + 1] - vals[j]) / (nodes[j + 1] - nodes[j])
                };
                interp(plus, a) + interp(minus, b)
            }
        }
    }

    pub fn full_region(&self) -> Region {
        self.mesh.shape.iter().map(|&n| (0, n - 1)).collect()
    }

    /// Cells adjacent (along axes) to `cell`, for residual evaluation.
    pub(crate) fn neighbours(&self, k: usize, axis: usize) -> (usize, usize) {
        let n0 = self.mesh.shape[0];
        let (i0, i1) = (k % n0, k / n0);
        (
            self.mesh.neighbour(i0, i1, axis, -1),
            self.mesh.neighbour(i0, i1, axis, 1),
        )
    }
}
