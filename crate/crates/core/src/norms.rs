//! Local `L^1` norms `‖u‖_V = sup_y ∫_{y+V} |u|`, with window membership
//! decided by cell centres.
//!
//! Window sums are taken over integer offset stencils, so two grids carrying the
//! same value array give bit-identical norms regardless of their origin.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::GridFunction;
use crate::shape::WindowShape;

/// Window shape plus centre pitch; `stride = None` means one centre per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct NormSpec {
    #[serde(default)]
    pub window: WindowShape,
    #[serde(default)]
    pub stride: Option<f64>,
}

impl NormSpec {
    pub fn x_norm() -> Self {
        NormSpec::default()
    }

    pub fn eval(&self, u: &GridFunction) -> f64 {
        v_norm(u, &self.window, self.stride.unwrap_or(u.h)).value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    /// A maximising centre; `None` when the function vanishes.
    pub center: Option<Vec<f64>>,
}

/// `h^n sum |u_j|` over cells whose centre lies in `y + window`.
pub fn l1_over(u: &GridFunction, window: &WindowShape, y: &[f64]) -> f64 {
    let dim = u.dim();
    let (blo, bhi) = window.bounds(dim);
    let lo: Vec<i64> = (0..dim)
        .map(|a| (((y[a] + blo[a] - u.origin[a]) / u.h).floor() as i64 - 1).max(0))
        .collect();
    let hi: Vec<i64> = (0..dim)
        .map(|a| (((y[a] + bhi[a] - u.origin[a]) / u.h).ceil() as i64 + 1).min(u.shape[a] as i64 - 1))
        .collect();
    let mut sum = 0.0;
    let mut offset = vec![0.0; dim];
    let j1_range = if dim == 2 { lo[1]..=hi[1] } else { 0..=0 };
    for j1 in j1_range {
        for j0 in lo[0]..=hi[0] {
            let idx = if dim == 2 { vec![j0, j1] } else { vec![j0] };
            for a in 0..dim {
                offset[a] = u.origin[a] + (idx[a] as f64 + 0.5) * u.h - y[a];
            }
            if window.contains(&offset) {
                sum += u.value_at_index(&idx).abs();
            }
        }
    }
    sum * u.cell_volume()
}

/// Centres per cell and axis for a requested stride.
pub(crate) fn subdivisions(h: f64, stride: f64) -> usize {
    if !(stride > 0.0) || stride >= h {
        1
    } else {
        ((h / stride) - 1e-9).ceil().max(1.0) as usize
    }
}

/// One stencil row: offsets `(lo..=hi, row)` in index space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StencilRow {
    pub row: i64,
    pub lo: i64,
    pub hi: i64,
}

/// Index offsets `o` whose physical offset `T (o - s)` lies in the window.
/// `t` maps index space to physical space (columns are the images of the unit
/// index steps). Both window shapes are convex, so each row is one interval.
pub(crate) fn stencil(window: &WindowShape, t: &DMatrix<f64>, s: &[f64]) -> Vec<StencilRow> {
    let dim = t.nrows();
    let inv = t.clone().try_inverse().expect("index map is invertible");
    let rho = window.circumradius(dim);
    let reach: Vec<i64> = (0..dim)
        .map(|a| (rho * inv.row(a).norm()).ceil() as i64 + 2)
        .collect();
    let phys = |o: &[i64]| -> Vec<f64> {
        let z: Vec<f64> = o.iter().zip(s).map(|(&oi, &si)| oi as f64 - si).collect();
        (0..dim)
            .map(|r| (0..dim).map(|c| t[(r, c)] * z[c]).sum())
            .collect()
    };
    let rows: Vec<i64> = if dim == 2 {
        (-reach[1]..=reach[1]).collect()
    } else {
        vec![0]
    };
    let mut out = Vec::new();
    for row in rows {
        let mut lo = None;
        let mut hi = None;
        for o0 in -reach[0]..=reach[0] {
            let o = if dim == 2 { vec![o0, row] } else { vec![o0] };
            if window.contains(&phys(&o)) {
                lo.get_or_insert(o0);
                hi = Some(o0);
            }
        }
        if let (Some(lo), Some(hi)) = (lo, hi) {
            out.push(StencilRow { row, lo, hi });
        }
    }
    out
}

/// Row prefix sums of `|u|` over a grid with axis 0 fastest.
pub(crate) struct RowPrefix {
    n0: usize,
    n1: usize,
    prefix: Vec<f64>,
}

impl RowPrefix {
    pub fn new(values: &[f64], shape: &[usize], subtract: f64) -> Self {
        let n0 = shape[0];
        let n1 = if shape.len() == 2 { shape[1] } else { 1 };
        let mut prefix = Vec::with_capacity((n0 + 1) * n1);
        for j1 in 0..n1 {
            let mut acc = 0.0;
            prefix.push(0.0);
            for j0 in 0..n0 {
                acc += (values[j0 + n0 * j1] - subtract).abs();
                prefix.push(acc);
            }
        }
        RowPrefix { n0, n1, prefix }
    }

    fn row(&self, j1: usize) -> &[f64] {
        &self.prefix[j1 * (self.n0 + 1)..(j1 + 1) * (self.n0 + 1)]
    }

    /// Sum over `lo..=hi` in row `j1`, zero outside the grid.
    fn clipped(&self, j1: i64, lo: i64, hi: i64) -> f64 {
        if j1 < 0 || j1 as usize >= self.n1 {
            return 0.0;
        }
        let lo = lo.max(0);
        let hi = hi.min(self.n0 as i64 - 1);
        if lo > hi {
            return 0.0;
        }
        let p = self.row(j1 as usize);
        p[hi as usize + 1] - p[lo as usize]
    }

    /// Sum over `lo..=hi` in row `j1`, both taken cyclically.
    fn cyclic(&self, j1: i64, lo: i64, hi: i64) -> f64 {
        let n0 = self.n0 as i64;
        let p = self.row(j1.rem_euclid(self.n1 as i64) as usize);
        let total = p[self.n0];
        let upto = |x: i64| -> f64 { x.div_euclid(n0) as f64 * total + p[x.rem_euclid(n0) as usize] };
        upto(hi + 1) - upto(lo)
    }
}

/// Maximum of window sums over the centres `i + s` for `i` in `centers` (per
/// axis ranges) and every sub-offset. Returns the raw sum (without cell
/// volume), the centre index and the sub-offset.
pub(crate) fn scan_max(
    prefix: &RowPrefix,
    window: &WindowShape,
    t: &DMatrix<f64>,
    k: usize,
    centers: &[(i64, i64)],
    periodic: bool,
) -> (f64, Vec<i64>, Vec<f64>) {
    let dim = t.nrows();
    let subs: Vec<Vec<f64>> = if dim == 2 {
        (0..k * k)
            .map(|q| vec![(q % k) as f64 / k as f64, (q / k) as f64 / k as f64])
            .collect()
    } else {
        (0..k).map(|q| vec![q as f64 / k as f64]).collect()
    };
    let (c0, c1) = (centers[0], if dim == 2 { centers[1] } else { (0, 0) });
    let mut best = (f64::NEG_INFINITY, vec![0i64; dim], vec![0.0; dim]);
    for s in subs {
        // offsets are measured from the centre, so the window at i + s holds
        // cells i + o with T (o - s) inside
        let rows = stencil(window, t, &s);
        let n_rows = (c1.1 - c1.0 + 1) as usize;
        let per_row: Vec<(f64, i64)> = (0..n_rows)
            .into_par_iter()
            .map(|r| {
                let i1 = c1.0 + r as i64;
                let mut row_best = (f64::NEG_INFINITY, c0.0);
                for i0 in c0.0..=c0.1 {
                    let mut sum = 0.0;
                    for st in &rows {
                        sum += if periodic {
                            prefix.cyclic(i1 + st.row, i0 + st.lo, i0 + st.hi)
                        } else {
                            prefix.clipped(i1 + st.row, i0 + st.lo, i0 + st.hi)
                        };
                    }
                    if sum > row_best.0 {
                        row_best = (sum, i0);
                    }
                }
                row_best
            })
            .collect();
        for (r, (v, i0)) in per_row.into_iter().enumerate() {
            if v > best.0 {
                let idx = if dim == 2 {
                    vec![i0, c1.0 + r as i64]
                } else {
                    vec![i0]
                };
                best = (v, idx, s.clone());
            }
        }
    }
    best
}

/// `‖u‖_V` approximated by a maximum over centres at the given stride,
/// aligned to cell centres, covering the support dilated by the window.
pub fn v_norm(u: &GridFunction, window: &WindowShape, stride: f64) -> NormValue {
    let Some((lo, hi)) = u.support_indices() else {
        return NormValue {
            value: 0.0,
            center: None,
        };
    };
    let dim = u.dim();
    let reach = (window.circumradius(dim) / u.h).ceil() as i64 + 1;
    let centers: Vec<(i64, i64)> = (0..dim)
        .map(|a| (lo[a] as i64 - reach, hi[a] as i64 + reach))
        .collect();
    let t = DMatrix::from_diagonal_element(dim, dim, u.h);
    let k = subdivisions(u.h, stride);
    let prefix = RowPrefix::new(&u.values, &u.shape, 0.0);
    let (raw, idx, s) = scan_max(&prefix, window, &t, k, &centers, false);
    let center = (0..dim)
        .map(|a| u.origin[a] + (idx[a] as f64 + 0.5 + s[a]) * u.h)
        .collect();
    NormValue {
        value: raw * u.cell_volume(),
        center: Some(center),
    }
}

/// The unit-ball norm at stride `h`.
pub fn x_norm(u: &GridFunction) -> f64 {
    v_norm(u, &WindowShape::unit_ball(), u.h).value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indicator(origin: f64, h: f64, n: usize, sets: &[(f64, f64)]) -> GridFunction {
        GridFunction::from_fn(vec![origin], h, vec![n], |x| {
            if sets.iter().any(|(a, b)| x[0] > *a && x[0] < *b) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    /// Direct window scan at arbitrary centres, written without stencils.
    fn brute_norm(u: &GridFunction, window: &WindowShape, pitch: f64) -> f64 {
        let (lo, hi) = u.support_box().unwrap();
        let rho = window.circumradius(1);
        let n = ((hi[0] - lo[0] + 2.0 * rho) / pitch).ceil() as usize;
        (0..=n)
            .map(|i| l1_over(u, window, &[lo[0] - rho + i as f64 * pitch]))
            .fold(0.0, f64::max)
    }

    #[test]
    fn l1_over_examples() {
        let h = 0.01;
        let u = indicator(-3.0, h, 600, &[(0.0, 2.0)]);
        assert!((l1_over(&u, &WindowShape::unit_ball(), &[1.0]) - 2.0).abs() <= h);
        assert!(l1_over(&u, &WindowShape::unit_ball(), &[-1.0]).abs() <= h);

        let sq = GridFunction::from_fn(vec![-1.0, -1.0], h, vec![300, 300], |x| {
            if (0.0..1.0).contains(&x[0]) && (0.0..1.0).contains(&x[1]) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let v = l1_over(&sq, &WindowShape::unit_ball(), &[0.5, 0.5]);
        assert!((v - 1.0).abs() <= 4.0 * h, "{v}");
    }

    #[test]
    fn v_norm_examples() {
        let h = 0.01;
        let u = indicator(-3.0, h, 600, &[(0.0, 2.0)]);
        assert!((x_norm(&u) - 2.0).abs() <= 2.0 * h);

        let shifted = u.translated(&[5.0]);
        assert_eq!(x_norm(&u), x_norm(&shifted));

        let two = indicator(-2.0, h, 1500, &[(0.0, 1.0), (10.0, 11.0)]);
        let n = x_norm(&two);
        assert!((n - 1.0).abs() <= 2.0 * h);
        let brute = brute_norm(&two, &WindowShape::unit_ball(), 1e-3);
        assert!((n - brute).abs() <= 2.0 * h, "{n} vs {brute}");
    }

    #[test]
    fn stride_refinement_only_increases() {
        let h = 0.05;
        let u = GridFunction::from_fn(vec![-2.0], h, vec![80], |x| (-(x[0] * x[0])).exp()).unwrap();
        let w = WindowShape::interval(-0.33, 0.33);
        let coarse = v_norm(&u, &w, h).value;
        let fine = v_norm(&u, &w, h / 4.0).value;
        assert!(fine >= coarse);
        assert!((fine - brute_norm(&u, &w, 1e-3)).abs() < 2.0 * h);
    }

    #[test]
    fn constant_bound_and_zero() {
        let h = 0.02;
        let u = GridFunction::from_fn(vec![-2.0, -2.0], h, vec![200, 200], |x| {
            (1.0 - x[0].abs().max(x[1].abs())).max(0.0)
        })
        .unwrap();
        let n = x_norm(&u);
        assert!(n <= std::f64::consts::PI * u.sup_norm());
        assert!(n > 0.0);
        let z = GridFunction::zeros(vec![0.0], 0.1, vec![10]).unwrap();
        assert_eq!(v_norm(&z, &WindowShape::unit_ball(), 0.1).value, 0.0);
    }

    #[test]
    fn cyclic_sums_wrap() {
        let p = RowPrefix::new(&[1.0, 2.0, 3.0], &[3], 0.0);
        assert_eq!(p.cyclic(0, -1, 1), 3.0 + 1.0 + 2.0);
        assert_eq!(p.cyclic(0, 0, 5), 12.0);
        assert_eq!(p.clipped(0, -5, 0), 1.0);
    }
}
