//! The linear sets `X_I = {xi : u -> xi . phi(u) is affine on I}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::structure::AffineStructure;
use super::{FluxError, FluxSpec, TOL_AFFINE};

/// Samples per breakpoint-free piece of the interval.
const SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySubspace {
    pub interval: [f64; 2],
    /// Ambient dimension `n`.
    pub ambient: usize,
    /// Orthonormal basis of `X_I`, one vector per entry.
    pub basis: Vec<Vec<f64>>,
    /// Absolute singular-value cut used for the numerical rank.
    pub rank_tol: f64,
}

impl NonlinearitySubspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_proper(&self) -> bool {
        self.dim() < self.ambient
    }

    pub fn is_trivial(&self) -> bool {
        self.basis.is_empty()
    }

    /// Euclidean distance from `v` to the subspace.
    pub fn distance(&self, v: &[f64]) -> f64 {
        let mut residual = v.to_vec();
        for q in &self.basis {
            let c: f64 = q.iter().zip(v).map(|(a, b)| a * b).sum();
            residual.iter_mut().zip(q).for_each(|(r, qi)| *r -= c * qi);
        }
        residual.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

/// `X_I` as the numerical null space of sampled second differences of `phi`
/// over `I` (divided by `h^2`), stacked with the slope jumps at breakpoints
/// interior to `I`.
pub fn nonlinearity_subspace(
    phi: &FluxSpec,
    interval: [f64; 2],
) -> Result<NonlinearitySubspace, FluxError> {
    let [a, b] = interval;
    let [lo, hi] = phi.u_range;
    if !(a < b && a >= lo && b <= hi) {
        return Err(FluxError::BadInterval { lo: a, hi: b });
    }
    let n = phi.dim;
    let inner: Vec<f64> = phi
        .breakpoints()
        .into_iter()
        .filter(|&x| x > a && x < b)
        .collect();
    let mut nodes = vec![a];
    nodes.extend(&inner);
    nodes.push(b);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut flux_scale = 0.0f64;
    for w in nodes.windows(2) {
        let (sa, sb) = (w[0], w[1]);
        let h = (sb - sa) / 10.0;
        let inv_h2 = 1.0 / (h * h);
        for i in 0..SAMPLES {
            let u = sa + h + (sb - sa - 2.0 * h) * i as f64 / (SAMPLES - 1) as f64;
            let f0 = phi.eval_unchecked(u);
            let fp = phi.eval_unchecked(u + h);
            let fm = phi.eval_unchecked(u - h);
            flux_scale = f0.iter().fold(flux_scale, |m, v| m.max(v.abs()));
            rows.push(
                (0..n)
                    .map(|k| (fp[k] - 2.0 * f0[k] + fm[k]) * inv_h2)
                    .collect(),
            );
        }
    }
    for (j, &x) in inner.iter().enumerate() {
        // inner[j] == nodes[j + 1]
        let mid_l = 0.5 * (nodes[j] + x);
        let mid_r = 0.5 * (x + nodes[j + 2]);
        let jump: Vec<f64> = phi
            .components
            .iter()
            .map(|c| {
                let left = c.local_form(mid_l).derivative(x - 1e-12 * (x - mid_l).abs());
                let right = c.local_form(mid_r).derivative(x + 1e-12 * (mid_r - x).abs());
                right - left
            })
            .collect();
        if jump.iter().all(|j| j.is_finite()) {
            rows.push(jump);
        }
    }

    let rank_tol = TOL_AFFINE * flux_scale.max(1.0);
    let basis = null_space(&rows, n, rank_tol);
    Ok(NonlinearitySubspace {
        interval,
        ambient: n,
        basis,
        rank_tol,
    })
}

fn null_space(rows: &[Vec<f64>], n: usize, tol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return identity_basis(n);
    }
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut basis = Vec::new();
    for (k, sigma) in svd.singular_values.iter().enumerate() {
        if *sigma <= tol {
            basis.push(v_t.row(k).iter().copied().collect());
        }
    }
    // rows fewer than n leave an unrepresented part of the null space
    if rows.len() < n {
        let extra = complement(&v_t, rows.len(), n);
        basis.extend(extra);
    }
    basis
}

fn identity_basis(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn complement(v_t: &DMatrix<f64>, have: usize, n: usize) -> Vec<Vec<f64>> {
    // Gram-Schmidt the unit vectors against the computed rows.
    let mut known: Vec<Vec<f64>> = (0..have.min(v_t.nrows()))
        .map(|k| v_t.row(k).iter().copied().collect())
        .collect();
    let mut out = Vec::new();
    for e in identity_basis(n) {
        let mut v = e;
        for q in &known {
            let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            known.push(v.clone());
            out.push(v);
        }
        if have + out.len() == n {
            break;
        }
    }
    out
}

/// The finite family of subspaces the avoiding lattice must miss: `X_I` for
/// every non-affine breakpoint-free segment, plus `X_I` on a small
/// neighbourhood of every isolated point of `F`. Trivial subspaces and
/// repeats are dropped.
pub fn nonlinearity_family(
    phi: &FluxSpec,
    structure: &AffineStructure,
) -> Result<Vec<NonlinearitySubspace>, FluxError> {
    let mut family = Vec::new();
    for seg in structure.segments.iter().filter(|s| !s.affine) {
        family.push(nonlinearity_subspace(phi, [seg.lo, seg.hi])?);
    }
    for x in structure.isolated_points() {
        let pos = structure
            .segments
            .iter()
            .position(|s| s.hi == x)
            .expect("isolated point is a segment boundary");
        let left = &structure.segments[pos];
        let right = &structure.segments[pos + 1];
        let delta = 0.25 * (left.hi - left.lo).min(right.hi - right.lo);
        family.push(nonlinearity_subspace(phi, [x - delta, x + delta])?);
    }
    for s in &family {
        if !s.is_proper() {
            return Err(FluxError::Invalid(format!(
                "X_I on ({}, {}) is the whole space although the interval meets F",
                s.interval[0], s.interval[1]
            )));
        }
    }
    family.retain(|s| !s.is_trivial());
    // a subspace seen on several intervals is kept once
    let mut distinct: Vec<NonlinearitySubspace> = Vec::new();
    for s in family {
        let seen = distinct
            .iter()
            .any(|d| d.dim() == s.dim() && s.basis.iter().all(|q| d.distance(q) <= 1e-9));
        if !seen {
            distinct.push(s);
        }
    }
    Ok(distinct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{affine_structure, half_square, linear, third_cube, FluxExpr, Parity};

    fn square() -> FluxExpr {
        FluxExpr::Power {
            coeff: 1.0,
            exponent: 2.0,
            parity: Parity::Even,
        }
    }

    fn assert_span(sub: &NonlinearitySubspace, dir: &[f64]) {
        assert_eq!(sub.dim(), 1);
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let unit: Vec<f64> = dir.iter().map(|x| x / norm).collect();
        assert!(sub.distance(&unit) < 1e-10, "basis {:?}", sub.basis);
    }

    #[test]
    fn subspace_examples() {
        let phi = FluxSpec::new(vec![half_square(), linear(1.0)], [-2.0, 2.0]).unwrap();
        assert_span(&nonlinearity_subspace(&phi, [0.0, 1.0]).unwrap(), &[0.0, 1.0]);

        let phi = FluxSpec::new(vec![square(), square()], [-2.0, 2.0]).unwrap();
        assert_span(&nonlinearity_subspace(&phi, [0.0, 1.0]).unwrap(), &[1.0, -1.0]);

        let phi = FluxSpec::new(vec![half_square(), third_cube()], [-2.0, 2.0]).unwrap();
        assert!(nonlinearity_subspace(&phi, [0.0, 1.0]).unwrap().is_trivial());
    }

    #[test]
    fn whole_space_on_affine_interval() {
        let phi = FluxSpec::new(vec![linear(1.0), linear(-2.0)], [-2.0, 2.0]).unwrap();
        let sub = nonlinearity_subspace(&phi, [0.0, 1.0]).unwrap();
        assert_eq!(sub.dim(), 2);
        assert!(!sub.is_proper());
    }

    #[test]
    fn kink_contributes_jump_row() {
        // |u| and u on (-1, 1): affine on each side, xi . phi affine across 0
        // only for xi orthogonal to the slope jump (2, 0).
        let abs = FluxExpr::Power {
            coeff: 1.0,
            exponent: 1.0,
            parity: Parity::Even,
        };
        let phi = FluxSpec::new(vec![abs, linear(1.0)], [-1.0, 1.0]).unwrap();
        assert_span(&nonlinearity_subspace(&phi, [-0.5, 0.5]).unwrap(), &[0.0, 1.0]);
        let family = nonlinearity_family(&phi, &affine_structure(&phi)).unwrap();
        assert_eq!(family.len(), 1);
        assert_span(&family[0], &[0.0, 1.0]);
    }

    #[test]
    fn interval_outside_range_is_rejected() {
        let phi = FluxSpec::burgers(1.0);
        assert!(nonlinearity_subspace(&phi, [0.5, 2.0]).is_err());
        assert!(nonlinearity_subspace(&phi, [0.5, 0.5]).is_err());
    }

    #[test]
    fn family_for_equal_squares() {
        let phi = FluxSpec::new(vec![square(), square()], [-1.0, 1.0]).unwrap();
        let family = nonlinearity_family(&phi, &affine_structure(&phi)).unwrap();
        // the segments on either side of the kink give the same line
        assert_eq!(family.len(), 1);
        assert_span(&family[0], &[1.0, -1.0]);
    }
}
