//! Cell-centred samples on uniform Cartesian boxes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("cell width must be positive and finite, got {0}")]
    CellWidth(f64),
    #[error("expected {expected} values for shape {shape:?}, got {got}")]
    Length {
        expected: usize,
        got: usize,
        shape: Vec<usize>,
    },
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
    #[error("grids are incompatible: {0}")]
    Mismatch(String),
}

/// Values on cells `[origin + i h, origin + (i+1) h)` per axis; axis 0 varies
/// fastest in `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub origin: Vec<f64>,
    pub h: f64,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(
        origin: Vec<f64>,
        h: f64,
        shape: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, GridError> {
        let dim = shape.len();
        if !(1..=2).contains(&dim) || origin.len() != dim {
            return Err(GridError::Dimension(dim));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(GridError::CellWidth(h));
        }
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(GridError::Length {
                expected,
                got: values.len(),
                shape,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(GridFunction {
            origin,
            h,
            shape,
            values,
        })
    }

    pub fn zeros(origin: Vec<f64>, h: f64, shape: Vec<usize>) -> Result<Self, GridError> {
        let n = shape.iter().product();
        GridFunction::new(origin, h, shape, vec![0.0; n])
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(
        origin: Vec<f64>,
        h: f64,
        shape: Vec<usize>,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self, GridError> {
        let mut g = GridFunction::zeros(origin, h, shape)?;
        for k in 0..g.values.len() {
            let c = g.center(k);
            g.values[k] = f(&c);
        }
        if let Some(i) = g.values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        match idx.len() {
            1 => idx[0],
            _ => idx[0] + self.shape[0] * idx[1],
        }
    }

    pub fn unflat(&self, k: usize) -> Vec<usize> {
        match self.dim() {
            1 => vec![k],
            _ => vec![k % self.shape[0], k / self.shape[0]],
        }
    }

    /// Centre of the cell with flat index `k`.
    pub fn center(&self, k: usize) -> Vec<f64> {
        self.unflat(k)
            .iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + (i as f64 + 0.5) * self.h)
            .collect()
    }

    /// Upper corner of the grid box.
    pub fn upper(&self) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.shape)
            .map(|(&o, &n)| o + n as f64 * self.h)
            .collect()
    }

    /// Integer cell index (possibly outside the grid) of the cell containing `x`.
    pub fn locate(&self, x: &[f64]) -> Vec<i64> {
        x.iter()
            .zip(&self.origin)
            .map(|(&xi, &o)| ((xi - o) / self.h).floor() as i64)
            .collect()
    }

    /// Value at a signed cell index; zero outside the grid.
    pub fn value_at_index(&self, idx: &[i64]) -> f64 {
        let mut flat = 0usize;
        let mut stride = 1usize;
        for (&i, &n) in idx.iter().zip(&self.shape) {
            if i < 0 || i as usize >= n {
                return 0.0;
            }
            flat += i as usize * stride;
            stride *= n;
        }
        self.values[flat]
    }

    /// Nearest-cell evaluation: the value of the cell containing `x`, zero
    /// outside the grid.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.value_at_index(&self.locate(x))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// `h^n sum |u|`.
    pub fn l1(&self) -> f64 {
        self.cell_volume() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// `h^n sum u`.
    pub fn mass(&self) -> f64 {
        self.cell_volume() * self.values.iter().sum::<f64>()
    }

    /// Inclusive index range of nonzero cells per axis, `None` when `u = 0`.
    pub fn support_indices(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        let dim = self.dim();
        let mut lo = vec![usize::MAX; dim];
        let mut hi = vec![0usize; dim];
        let mut any = false;
        for (k, v) in self.values.iter().enumerate() {
            if *v != 0.0 {
                any = true;
                for (a, i) in self.unflat(k).into_iter().enumerate() {
                    lo[a] = lo[a].min(i);
                    hi[a] = hi[a].max(i);
                }
            }
        }
        any.then_some((lo, hi))
    }

    /// Smallest closed box of whole cells outside which `u = 0`.
    pub fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.support_indices().map(|(lo, hi)| {
            let a = lo
                .iter()
                .zip(&self.origin)
                .map(|(&i, &o)| o + i as f64 * self.h)
                .collect();
            let b = hi
                .iter()
                .zip(&self.origin)
                .map(|(&i, &o)| o + (i + 1) as f64 * self.h)
                .collect();
            (a, b)
        })
    }

    /// Same grid, values replaced by `f(value)`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.shape == other.shape && self.h == other.h && self.origin == other.origin
    }

    /// Cellwise combination of two functions on the same grid.
    pub fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<GridFunction, GridError> {
        if !self.same_grid(other) {
            return Err(GridError::Mismatch(format!(
                "{:?}/{} vs {:?}/{}",
                self.shape, self.h, other.shape, other.h
            )));
        }
        Ok(GridFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..self.clone()
        })
    }

    /// The same samples carried to `origin + shift`, i.e. `u(x - shift)`.
    pub fn translated(&self, shift: &[f64]) -> GridFunction {
        GridFunction {
            origin: self.origin.iter().zip(shift).map(|(o, s)| o + s).collect(),
            ..self.clone()
        }
    }

    /// Copies the values into a larger grid with `pad_lo`/`pad_hi` extra cells
    /// per axis, filled with `fill`.
    pub fn padded(&self, pad_lo: &[usize], pad_hi: &[usize], fill: f64) -> GridFunction {
        let shape: Vec<usize> = (0..self.dim())
            .map(|a| self.shape[a] + pad_lo[a] + pad_hi[a])
            .collect();
        let origin: Vec<f64> = (0..self.dim())
            .map(|a| self.origin[a] - pad_lo[a] as f64 * self.h)
            .collect();
        let mut out = GridFunction {
            origin,
            h: self.h,
            values: vec![fill; shape.iter().product()],
            shape,
        };
        for k in 0..self.values.len() {
            let idx: Vec<usize> = self
                .unflat(k)
                .iter()
                .zip(pad_lo)
                .map(|(i, p)| i + p)
                .collect();
            let f = out.flat(&idx);
            out.values[f] = self.values[k];
        }
        out
    }

    /// The cells with index in `region` (inclusive per axis), as a grid of
    /// its own. The origin moves so that cell centres stay put.
    pub fn sub_grid(&self, region: &[(usize, usize)]) -> GridFunction {
        let shape: Vec<usize> = region.iter().map(|&(a, b)| b + 1 - a).collect();
        let origin: Vec<f64> = (0..self.dim())
            .map(|a| self.origin[a] + region[a].0 as f64 * self.h)
            .collect();
        let values = match self.dim() {
            1 => self.values[region[0].0..=region[0].1].to_vec(),
            _ => {
                let n0 = self.shape[0];
                let mut v = Vec::with_capacity(shape[0] * shape[1]);
                for i1 in region[1].0..=region[1].1 {
                    v.extend_from_slice(&self.values[region[0].0 + n0 * i1..=region[0].1 + n0 * i1]);
                }
                v
            }
        };
        GridFunction {
            origin,
            h: self.h,
            shape,
            values,
        }
    }

    /// Zeroes cells with `|u| < threshold` whose centre lies farther than
    /// `radius` from `center`: a truncation of slowly decaying tails to compact
    /// support.
    pub fn truncate_tail(&self, center: &[f64], radius: f64, threshold: f64) -> GridFunction {
        let mut out = self.clone();
        for k in 0..out.values.len() {
            let c = self.center(k);
            let d2: f64 = c.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 > radius * radius && out.values[k].abs() < threshold {
                out.values[k] = 0.0;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box1d() -> GridFunction {
        GridFunction::from_fn(vec![-1.0], 0.25, vec![12], |x| {
            if (0.0..1.0).contains(&x[0]) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn sub_grid_keeps_centres() {
        let g = GridFunction::from_fn(vec![-1.0, 0.0], 0.5, vec![4, 3], |x| x[0] + 10.0 * x[1]).unwrap();
        let s = g.sub_grid(&[(1, 2), (1, 2)]);
        assert_eq!(s.shape, vec![2, 2]);
        for k in 0..s.len() {
            let c = s.center(k);
            assert_eq!(s.values[k], c[0] + 10.0 * c[1]);
        }
    }

    #[test]
    fn support_and_integrals() {
        let g = box1d();
        assert_eq!(g.support_indices(), Some((vec![4], vec![7])));
        assert_eq!(g.support_box(), Some((vec![0.0], vec![1.0])));
        assert_eq!(g.l1(), 1.0);
        assert_eq!(g.mass(), 1.0);
        assert_eq!(g.value_at(&[0.5]), 1.0);
        assert_eq!(g.value_at(&[5.0]), 0.0);
    }

    #[test]
    fn two_dimensional_indexing() {
        let g = GridFunction::from_fn(vec![0.0, 0.0], 0.5, vec![4, 3], |x| x[0] + 10.0 * x[1]).unwrap();
        let k = g.flat(&[3, 2]);
        assert_eq!(g.unflat(k), vec![3, 2]);
        assert_eq!(g.center(k), vec![1.75, 1.25]);
        assert_eq!(g.value_at(&[1.9, 1.1]), 1.75 + 12.5);
    }

    #[test]
    fn rejects_malformed() {
        assert!(GridFunction::new(vec![0.0], 0.0, vec![1], vec![0.0]).is_err());
        assert!(GridFunction::new(vec![0.0], 1.0, vec![2], vec![0.0]).is_err());
        assert!(GridFunction::new(vec![0.0], 1.0, vec![1], vec![f64::NAN]).is_err());
        assert!(GridFunction::new(vec![0.0; 3], 1.0, vec![1, 1, 1], vec![0.0]).is_err());
    }

    #[test]
    fn padding_keeps_samples_in_place() {
        let g = box1d();
        let p = g.padded(&[3], &[2], 0.0);
        assert_eq!(p.shape, vec![17]);
        assert_eq!(p.support_box(), g.support_box());
    }

    #[test]
    fn tail_truncation() {
        let g = GridFunction::from_fn(vec![-10.0], 0.5, vec![40], |x| (-x[0].abs()).exp()).unwrap();
        let t = g.truncate_tail(&[0.0], 5.0, 1e-2);
        assert!(t.support_box().unwrap().1[0] <= 5.0);
        assert_eq!(t.value_at(&[0.25]), g.value_at(&[0.25]));
    }
}
