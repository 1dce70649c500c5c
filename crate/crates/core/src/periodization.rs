//! `rL`-periodic envelopes of compactly supported data and the shifted
//! periodic data that sandwich it.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flux::{select_b, AffineStructure, FluxError, Side, DEFAULT_EPS_FLOOR};
use crate::grid::GridFunction;
use crate::lattice::Lattice;
use crate::norms::{scan_max, subdivisions, RowPrefix};
use crate::shape::WindowShape;

/// Upper limit on `u0` evaluations during envelope construction.
pub const DEFAULT_SHIFT_CAP: usize = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PeriodizationError {
    #[error("scale r must be positive, got {0}")]
    Scale(f64),
    #[error("lattice dimension {lattice} does not match grid dimension {grid}")]
    Dimension { lattice: usize, grid: usize },
    #[error("shift enumeration needs {needed} evaluations, cap is {cap}; increase r")]
    ShiftCap { needed: usize, cap: usize },
    #[error(transparent)]
    Flux(#[from] FluxError),
}

/// Values on the unit torus `[0,1)^n`, read as the `rL`-periodic function
/// `x = r A (y - 1/2)`, so the torus is the half-open cell `P_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGridFunction {
    pub lattice: Lattice,
    pub r: f64,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub mean: f64,
}

/// Torus cells per axis so that every coordinate of a physical cell edge
/// `r a_k / N_k` is at most `h` in absolute value. Columns with unit sup norm
/// then give `N_k = r / h`, and the torus cells line up with the data grid.
pub fn torus_shape(lattice: &Lattice, r: f64, h: f64) -> Vec<usize> {
    lattice
        .columns()
        .iter()
        .map(|a| {
            let len = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            ((r * len / h) - 1e-9).ceil().max(1.0) as usize
        })
        .collect()
}

impl PeriodicGridFunction {
    pub fn new(lattice: Lattice, r: f64, shape: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), values.len());
        assert_eq!(shape.len(), lattice.dim());
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        PeriodicGridFunction {
            lattice,
            r,
            shape,
            values,
            mean,
        }
    }

    pub fn constant(lattice: Lattice, r: f64, shape: Vec<usize>, c: f64) -> Self {
        let n = shape.iter().product();
        PeriodicGridFunction::new(lattice, r, shape, vec![c; n])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        PeriodicGridFunction::new(self.lattice.clone(), self.r, self.shape.clone(), values)
    }

    /// `|P_r| = r^n |det A|`.
    pub fn period_volume(&self) -> f64 {
        self.r.powi(self.dim() as i32) * self.lattice.det().abs()
    }

    pub fn cell_volume(&self) -> f64 {
        self.period_volume() / self.values.len() as f64
    }

    /// Maps torus index offsets to physical offsets: `r A diag(1/N)`.
    pub fn index_map(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut t = self.lattice.basis() * self.r;
        for c in 0..n {
            for row in 0..n {
                t[(row, c)] /= self.shape[c] as f64;
            }
        }
        t
    }

    fn unflat(&self, k: usize) -> Vec<usize> {
        match self.dim() {
            1 => vec![k],
            _ => vec![k % self.shape[0], k / self.shape[0]],
        }
    }

    fn flat(&self, idx: &[usize]) -> usize {
        match idx.len() {
            1 => idx[0],
            _ => idx[0] + self.shape[0] * idx[1],
        }
    }

    /// Torus coordinates of the centre of cell `k`.
    pub fn torus_center(&self, k: usize) -> Vec<f64> {
        self.unflat(k)
            .iter()
            .zip(&self.shape)
            .map(|(&i, &n)| (i as f64 + 0.5) / n as f64)
            .collect()
    }

    /// Physical centre of cell `k`, inside `P_r`.
    pub fn physical_center(&self, k: usize) -> Vec<f64> {
        let z: Vec<f64> = self
            .torus_center(k)
            .iter()
            .map(|y| self.r * (y - 0.5))
            .collect();
        self.lattice.point(&z)
    }

    /// Flat index of the torus cell containing the physical point `x`.
    pub fn locate(&self, x: &[f64]) -> usize {
        let z = self.lattice.coords(x);
        let idx: Vec<usize> = z
            .iter()
            .zip(&self.shape)
            .map(|(&zi, &n)| {
                let y = zi / self.r + 0.5;
                let frac = y - y.floor();
                ((frac * n as f64).floor() as usize).min(n - 1)
            })
            .collect();
        self.flat(&idx)
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.values[self.locate(x)]
    }

    /// Samples at the cell centres of `grid` (nearest torus cell).
    pub fn sample_on(&self, grid: &GridFunction) -> GridFunction {
        let values = (0..grid.len())
            .map(|k| self.value_at(&grid.center(k)))
            .collect();
        GridFunction {
            values,
            ..grid.clone()
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// `(1/|P_r|) ∫_{P_r} |u - m|`.
    pub fn mean_deviation(&self, m: f64) -> f64 {
        self.values.iter().map(|v| (v - m).abs()).sum::<f64>() / self.values.len() as f64
    }

    /// `‖u - c‖_V`, scanning centres over one period only.
    pub fn v_norm_minus(&self, c: f64, window: &WindowShape, stride: Option<f64>) -> f64 {
        let t = self.index_map();
        let h_min = (0..self.dim())
            .map(|col| t.column(col).norm())
            .fold(f64::INFINITY, f64::min);
        let k = subdivisions(h_min, stride.unwrap_or(h_min));
        let prefix = RowPrefix::new(&self.values, &self.shape, c);
        let centers: Vec<(i64, i64)> = self.shape.iter().map(|&n| (0, n as i64 - 1)).collect();
        let (raw, _, _) = scan_max(&prefix, window, &t, k, &centers, true);
        raw * self.cell_volume()
    }

    pub fn x_norm(&self) -> f64 {
        self.v_norm_minus(0.0, &WindowShape::unit_ball(), None)
    }
}

/// `meas{|u0| > lambda}` for each `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperlevelTable {
    pub lambdas: Vec<f64>,
    pub measures: Vec<f64>,
}

impl SuperlevelTable {
    /// Measure at the grid point nearest `lambda`, with that grid point.
    pub fn nearest(&self, lambda: f64) -> (f64, f64) {
        let i = self
            .lambdas
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - lambda).abs().total_cmp(&(b.1 - lambda).abs()))
            .map(|(i, _)| i)
            .expect("nonempty lambda grid");
        (self.lambdas[i], self.measures[i])
    }
}

pub fn admissibility(u0: &GridFunction, lambdas: &[f64]) -> SuperlevelTable {
    let vol = u0.cell_volume();
    let measures = lambdas
        .iter()
        .map(|&l| u0.values.iter().filter(|v| v.abs() > l).count() as f64 * vol)
        .collect();
    SuperlevelTable {
        lambdas: lambdas.to_vec(),
        measures,
    }
}

/// `lambda = C0 k / steps` for `k = 0..=steps`.
pub fn default_lambda_grid(c0: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| c0 * k as f64 / steps as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub v_plus: PeriodicGridFunction,
    pub v_minus: PeriodicGridFunction,
    pub v_r: PeriodicGridFunction,
    pub m_r: f64,
    pub m_r_plus: f64,
    pub m_r_minus: f64,
    pub c0: f64,
    pub evaluations: usize,
}

/// Scalar summary for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeScalars {
    pub r: f64,
    pub torus_shape: Vec<usize>,
    pub m_r: f64,
    pub m_r_plus: f64,
    pub m_r_minus: f64,
    pub b_r_plus: Option<f64>,
    pub b_r_minus: Option<f64>,
    pub c0: f64,
    pub p: Option<f64>,
    pub eps: Option<f64>,
}

impl EnvelopeReport {
    pub fn scalars(&self) -> EnvelopeScalars {
        EnvelopeScalars {
            r: self.v_r.r,
            torus_shape: self.v_r.shape.clone(),
            m_r: self.m_r,
            m_r_plus: self.m_r_plus,
            m_r_minus: self.m_r_minus,
            b_r_plus: None,
            b_r_minus: None,
            c0: self.c0,
            p: None,
            eps: None,
        }
    }
}

/// Shifts `e` (integer lattice coordinates) that can carry the torus point with
/// coordinates `z` (in units of `r`) into the support, as per-axis ranges.
fn shift_ranges(z: &[f64], cell_lo: &[f64], cell_hi: &[f64]) -> Vec<(i64, i64)> {
    z.iter()
        .zip(cell_lo.iter().zip(cell_hi))
        .map(|(&zi, (&lo, &hi))| ((lo - zi).floor() as i64, (hi - zi).ceil() as i64))
        .collect()
}

/// `v± = sup/inf_e u0(x + r A e)`, `V_r = sup_e |u0(x + r A e)|`, sampled at torus
/// cell centres (gather) and completed by carrying every `u0` cell centre into
/// its torus cell (scatter). Both include `0`, the value of all far shifts.
pub fn envelopes(
    u0: &GridFunction,
    lattice: &Lattice,
    r: f64,
    shift_cap: usize,
) -> Result<EnvelopeReport, PeriodizationError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(PeriodizationError::Scale(r));
    }
    if lattice.dim() != u0.dim() {
        return Err(PeriodizationError::Dimension {
            lattice: lattice.dim(),
            grid: u0.dim(),
        });
    }
    let dim = u0.dim();
    let shape = torus_shape(lattice, r, u0.h);
    let n_cells: usize = shape.iter().product();
    let template = PeriodicGridFunction::new(lattice.clone(), r, shape.clone(), vec![0.0; n_cells]);
    let c0 = u0.sup_norm();

    let Some((slo, shi)) = u0.support_box() else {
        let zero = template;
        return Ok(EnvelopeReport {
            v_plus: zero.clone(),
            v_minus: zero.clone(),
            v_r: zero,
            m_r: 0.0,
            m_r_plus: 0.0,
            m_r_minus: 0.0,
            c0,
            evaluations: 0,
        });
    };

    // support box in lattice coordinates (units of r), padded by half a cell
    let pad = 0.5 * u0.h;
    let corners: Vec<Vec<f64>> = (0..(1usize << dim))
        .map(|mask| {
            (0..dim)
                .map(|a| {
                    if mask >> a & 1 == 1 {
                        shi[a] + pad
                    } else {
                        slo[a] - pad
                    }
                })
                .collect()
        })
        .collect();
    let mut cell_lo = vec![f64::INFINITY; dim];
    let mut cell_hi = vec![f64::NEG_INFINITY; dim];
    for c in &corners {
        for (a, z) in lattice.coords(c).into_iter().enumerate() {
            cell_lo[a] = cell_lo[a].min(z / r);
            cell_hi[a] = cell_hi[a].max(z / r);
        }
    }
    let per_cell: usize = (0..dim)
        .map(|a| (cell_hi[a] - cell_lo[a]).ceil() as usize + 2)
        .product();
    let needed = per_cell.saturating_mul(n_cells);
    if needed > shift_cap {
        return Err(PeriodizationError::ShiftCap {
            needed,
            cap: shift_cap,
        });
    }

    let gathered: Vec<(f64, f64, usize)> = (0..n_cells)
        .into_par_iter()
        .map(|k| {
            let x = template.physical_center(k);
            let z: Vec<f64> = lattice.coords(&x).iter().map(|v| v / r).collect();
            let ranges = shift_ranges(&z, &cell_lo, &cell_hi);
            let (mut hi, mut lo, mut count) = (0.0f64, 0.0f64, 0usize);
            let e1_range = if dim == 2 { ranges[1].0..=ranges[1].1 } else { 0..=0 };
            for e1 in e1_range {
                for e0 in ranges[0].0..=ranges[0].1 {
                    let e = if dim == 2 {
                        vec![e0 as f64 * r, e1 as f64 * r]
                    } else {
                        vec![e0 as f64 * r]
                    };
                    let shift = lattice.point(&e);
                    let p: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a + b).collect();
                    let v = u0.value_at(&p);
                    hi = hi.max(v);
                    lo = lo.min(v);
                    count += 1;
                }
            }
            (hi, lo, count)
        })
        .collect();

    let mut plus: Vec<f64> = gathered.iter().map(|g| g.0).collect();
    let mut minus: Vec<f64> = gathered.iter().map(|g| g.1).collect();
    let mut evaluations: usize = gathered.iter().map(|g| g.2).sum();
    for (j, &v) in u0.values.iter().enumerate() {
        if v != 0.0 {
            let k = template.locate(&u0.center(j));
            plus[k] = plus[k].max(v);
            minus[k] = minus[k].min(v);
            evaluations += 1;
        }
    }
    let big: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| p.max(-m)).collect();

    let v_plus = template.with_values(plus);
    let v_minus = template.with_values(minus);
    let v_r = template.with_values(big);
    Ok(EnvelopeReport {
        m_r: v_r.mean,
        m_r_plus: v_plus.mean,
        m_r_minus: v_minus.mean,
        v_plus,
        v_minus,
        v_r,
        c0,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrBoundVerdict {
    pub r: f64,
    pub m_r: f64,
    pub c0: f64,
    pub p: f64,
    pub eps: f64,
    pub period_volume: f64,
    pub grid_tol: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `M_r <= C0 p / |P_r| + eps + 2 n C0 h / r`, where `p = meas{|u0| > eps}`.
/// The last term absorbs cells straddling the superlevel set boundary.
pub fn mr_bound_check(report: &EnvelopeReport, p: f64, eps: f64, h: f64) -> MrBoundVerdict {
    let v = &report.v_r;
    let n = v.dim() as f64;
    let period_volume = v.period_volume();
    let grid_tol = 2.0 * n * report.c0 * h / v.r;
    let bound = report.c0 * p / period_volume + eps + grid_tol;
    MrBoundVerdict {
        r: v.r,
        m_r: report.m_r,
        c0: report.c0,
        p,
        eps,
        period_volume,
        grid_tol,
        bound,
        holds: report.m_r <= bound,
    }
}

/// `eps` for the bound: the lambda grid point nearest `0.05 C0`.
pub fn default_eps(table: &SuperlevelTable, c0: f64) -> (f64, f64) {
    table.nearest(0.05 * c0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingVerdict {
    /// `M_{2r} / M_r` for each consecutive doubling.
    pub ratios: Vec<f64>,
    pub nonincreasing: bool,
    /// Whether every ratio is within the tolerance of `1/2`, when asked.
    pub halving: Option<bool>,
}

/// Checks `M_r` along `(r, M_r)` pairs where each `r` doubles the previous one.
pub fn doubling_check(pairs: &[(f64, f64)], halving_tol: Option<f64>) -> DoublingVerdict {
    let ratios: Vec<f64> = pairs
        .windows(2)
        .map(|w| if w[0].1 > 0.0 { w[1].1 / w[0].1 } else { 0.0 })
        .collect();
    let nonincreasing = pairs.windows(2).all(|w| w[1].1 <= w[0].1);
    let halving = halving_tol.map(|tol| ratios.iter().all(|q| (q - 0.5).abs() <= 0.5 * tol));
    DoublingVerdict {
        ratios,
        nonincreasing,
        halving,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedData {
    pub u_plus: PeriodicGridFunction,
    pub u_minus: PeriodicGridFunction,
    pub b_plus: f64,
    pub b_minus: f64,
}

/// `u± = v± - M± + B±` with `B±` picked in the nonlinearity set.
pub fn shifted_periodic_data(
    report: &EnvelopeReport,
    structure: &AffineStructure,
    eps_floor: Option<f64>,
) -> Result<ShiftedData, PeriodizationError> {
    let floor = eps_floor.unwrap_or(DEFAULT_EPS_FLOOR);
    let b_plus = select_b(structure, report.m_r_plus, Side::Plus, floor)?;
    let b_minus = select_b(structure, report.m_r_minus, Side::Minus, floor)?;
    let shift_plus = b_plus - report.m_r_plus;
    let shift_minus = b_minus - report.m_r_minus;
    let u_plus = report
        .v_plus
        .with_values(report.v_plus.values.iter().map(|v| v + shift_plus).collect());
    let u_minus = report
        .v_minus
        .with_values(report.v_minus.values.iter().map(|v| v + shift_minus).collect());
    Ok(ShiftedData {
        u_plus,
        u_minus,
        b_plus,
        b_minus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichVerdict {
    pub holds: bool,
    pub cells_checked: usize,
    /// Largest `lower - u0` or `u0 - upper` seen (nonpositive when it holds).
    pub worst_excess: f64,
    pub first_violation: Option<Vec<f64>>,
}

/// `lower <= u0 <= upper` at every cell centre of `u0`, with zero tolerance.
pub fn sandwich_check(
    u0: &GridFunction,
    lower: &PeriodicGridFunction,
    upper: &PeriodicGridFunction,
) -> SandwichVerdict {
    let mut worst = f64::NEG_INFINITY;
    let mut first = None;
    for j in 0..u0.len() {
        let x = u0.center(j);
        let v = u0.values[j];
        let excess = (lower.value_at(&x) - v).max(v - upper.value_at(&x));
        if excess > 0.0 && first.is_none() {
            first = Some(x);
        }
        worst = worst.max(excess);
    }
    SandwichVerdict {
        holds: first.is_none(),
        cells_checked: u0.len(),
        worst_excess: worst,
        first_violation: first,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{affine_structure, FluxExpr, FluxSpec};

    fn box1d(h: f64) -> GridFunction {
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
    fn admissibility_examples() {
        let h = 1.0 / 128.0;
        let u = box1d(h);
        let t = admissibility(&u, &[0.5, 1.5]);
        assert!((t.measures[0] - 1.0).abs() <= 2.0 * h);
        assert_eq!(t.measures[1], 0.0);
        let hat = GridFunction::from_fn(vec![-2.0], h, vec![512], |x| (1.0 - x[0].abs()).max(0.0)).unwrap();
        let t = admissibility(&hat, &[0.5]);
        assert!((t.measures[0] - 1.0).abs() <= 2.0 * h);
    }

    #[test]
    fn envelope_examples_1d() {
        let h = 1.0 / 100.0;
        let u = box1d(h);
        let z = Lattice::identity(1);
        let rep = envelopes(&u, &z, 3.0, DEFAULT_SHIFT_CAP).unwrap();
        assert_eq!(rep.v_plus.shape, vec![300]);
        assert_eq!(rep.m_r, 1.0 / 3.0);
        assert_eq!(rep.m_r_minus, 0.0);
        assert_eq!(rep.v_plus.value_at(&[0.5]), 1.0);
        assert_eq!(rep.v_plus.value_at(&[3.5]), 1.0);
        assert_eq!(rep.v_plus.value_at(&[-0.5]), 0.0);

        let rep = envelopes(&u, &z, 0.5, DEFAULT_SHIFT_CAP).unwrap();
        assert!(rep.v_plus.values.iter().all(|&v| v == 1.0));
        assert_eq!(rep.m_r, 1.0);
    }

    #[test]
    fn envelope_square_2d() {
        let h = 1.0 / 32.0;
        let u = GridFunction::from_fn(vec![-1.0, -1.0], h, vec![96, 96], |x| {
            if (0.0..1.0).contains(&x[0]) && (0.0..1.0).contains(&x[1]) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let rep = envelopes(&u, &Lattice::identity(2), 4.0, DEFAULT_SHIFT_CAP).unwrap();
        assert_eq!(rep.m_r, 1.0 / 16.0);
    }

    #[test]
    fn wrap_identity() {
        let h = 1.0 / 16.0;
        let u = GridFunction::from_fn(vec![-1.0, -1.0], h, vec![32, 32], |x| x[0] - x[1]).unwrap();
        let l = Lattice::from_columns(&[vec![1.0, 0.2], vec![-0.3, 1.1]]).unwrap();
        let rep = envelopes(&u, &l, 2.0, DEFAULT_SHIFT_CAP).unwrap();
        let v = &rep.v_plus;
        for k in 0..v.values.len() {
            let x = v.physical_center(k);
            assert_eq!(v.locate(&x), k);
            for e in l.columns() {
                let y: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a + 2.0 * b).collect();
                assert_eq!(v.value_at(&y), v.values[k]);
            }
        }
    }

    #[test]
    fn mr_bound_examples() {
        let h = 1.0 / 100.0;
        let u = box1d(h);
        for (r, eps) in [(10.0, 0.1), (100.0, 0.01)] {
            let rep = envelopes(&u, &Lattice::identity(1), r, DEFAULT_SHIFT_CAP).unwrap();
            let p = admissibility(&u, &[eps]).measures[0];
            let v = mr_bound_check(&rep, p, eps, h);
            assert!(v.holds, "{v:?}");
            assert!((v.m_r - 1.0 / r).abs() < 1e-15);
        }
    }

    #[test]
    fn hat_halves_with_each_doubling() {
        let h = 1.0 / 64.0;
        let hat = GridFunction::from_fn(vec![-2.0], h, vec![256], |x| (1.0 - x[0].abs()).max(0.0)).unwrap();
        let pairs: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|&r| (r, envelopes(&hat, &Lattice::identity(1), r, DEFAULT_SHIFT_CAP).unwrap().m_r))
            .collect();
        let v = doubling_check(&pairs, Some(0.05));
        assert!(v.nonincreasing && v.halving == Some(true), "{v:?}");
    }

    #[test]
    fn shifted_data_examples() {
        let h = 1.0 / 100.0;
        let u = box1d(h);
        let rep = envelopes(&u, &Lattice::identity(1), 3.0, DEFAULT_SHIFT_CAP).unwrap();

        let burgers = affine_structure(&FluxSpec::burgers(2.0));
        let s = shifted_periodic_data(&rep, &burgers, None).unwrap();
        assert_eq!(s.b_plus, rep.m_r_plus);
        assert_eq!(s.u_plus.values, rep.v_plus.values);
        assert_eq!(s.b_minus, -DEFAULT_EPS_FLOOR);
        assert!(s.u_minus.values.iter().all(|&v| v == -DEFAULT_EPS_FLOOR));

        let dyadic = FluxSpec::new(vec![FluxExpr::Dyadic { k_max: 20, coeff: 1.0 }], [-2.0, 2.0]).unwrap();
        let s = shifted_periodic_data(&rep, &affine_structure(&dyadic), None).unwrap();
        assert_eq!(s.b_plus, 0.5);
        assert!((s.u_plus.value_at(&[0.5]) - (1.0 + 1.0 / 6.0)).abs() < 1e-15);
        assert!((s.u_plus.mean - s.b_plus).abs() <= 1e-12 * s.b_plus);

        let sw = sandwich_check(&u, &s.u_minus, &s.u_plus);
        assert!(sw.holds);
    }

    #[test]
    fn shift_cap_reported() {
        let u = box1d(1.0 / 100.0);
        assert!(matches!(
            envelopes(&u, &Lattice::identity(1), 1e-3, 1000),
            Err(PeriodizationError::ShiftCap { .. })
        ));
    }
}
