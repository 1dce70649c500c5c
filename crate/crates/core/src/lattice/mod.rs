//! Lattices `L = A(Z^n)`, their duals, scaled fundamental cells and the two
//! constructive ingredients built on them: finite coverings of one window by
//! translates of another, and lattices whose nonzero vectors avoid a finite
//! family of proper subspaces.

mod avoid;
mod cover;

pub use avoid::{
    certify, draw_candidate, random_avoiding_lattice, AvoidanceCertificate, AvoidanceParams,
};
pub use cover::{covering_multiplicity, Covering};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice basis is singular or nearly so (|det| = {det:e})")]
    Singular { det: f64 },
    #[error("malformed lattice basis: {0}")]
    Malformed(String),
    #[error("degenerate window shape: {0}")]
    DegenerateShape(String),
    #[error(
        "no certified lattice after {attempts} draws; worst vector {xi:?} is within {ratio:e} of subspace {subspace}"
    )]
    RetryCapExceeded {
        attempts: usize,
        xi: Vec<i64>,
        subspace: usize,
        ratio: f64,
    },
    #[error("subspace {0} is not proper")]
    NotProper(usize),
}

/// A full-rank lattice given by the columns of its basis matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    basis: DMatrix<f64>,
    inverse: DMatrix<f64>,
    det: f64,
}

impl Lattice {
    pub fn new(basis: DMatrix<f64>) -> Result<Self, LatticeError> {
        if !basis.is_square() || basis.nrows() == 0 {
            return Err(LatticeError::Malformed(format!(
                "basis must be square, got {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(LatticeError::Malformed("non-finite entry".into()));
        }
        let det = basis.determinant();
        let col_norms: f64 = basis.column_iter().map(|c| c.norm()).product();
        if !(det.abs() > 1e-9 * col_norms) {
            return Err(LatticeError::Singular { det });
        }
        let inverse = basis
            .clone()
            .try_inverse()
            .ok_or(LatticeError::Singular { det })?;
        Ok(Lattice {
            basis,
            inverse,
            det,
        })
    }

    /// Builds from basis vectors `e_1..e_n`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self, LatticeError> {
        let n = columns.len();
        if n == 0 || columns.iter().any(|c| c.len() != n) {
            return Err(LatticeError::Malformed(
                "need n basis vectors of length n".into(),
            ));
        }
        Lattice::new(DMatrix::from_fn(n, n, |i, j| columns[j][i]))
    }

    pub fn identity(n: usize) -> Self {
        Lattice::new(DMatrix::identity(n, n)).expect("identity is nonsingular")
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        self.basis
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect()
    }

    /// `L' = {xi : xi . x ∈ Z for all x ∈ L}`, basis `A^{-T}`.
    pub fn dual(&self) -> Lattice {
        Lattice::new(self.inverse.transpose()).expect("inverse of a valid basis is valid")
    }

    /// The lattice `r L`.
    pub fn scaled(&self, r: f64) -> Lattice {
        Lattice::new(&self.basis * r).expect("positive multiple of a valid basis")
    }

    /// Coordinates `z` with `x = A z`.
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        (&self.inverse * DVector::from_column_slice(x))
            .iter()
            .copied()
            .collect()
    }

    /// `A z`.
    pub fn point(&self, z: &[f64]) -> Vec<f64> {
        (&self.basis * DVector::from_column_slice(z))
            .iter()
            .copied()
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    columns: Vec<Vec<f64>>,
    #[serde(default, skip_deserializing)]
    det: f64,
}

impl Serialize for Lattice {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LatticeRepr {
            columns: self.columns(),
            det: self.det,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = LatticeRepr::deserialize(deserializer)?;
        Lattice::from_columns(&repr.columns).map_err(serde::de::Error::custom)
    }
}

/// The half-open cell `P_r = {sum x_k e_k : -r/2 <= x_k < r/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parallelepiped {
    pub lattice: Lattice,
    pub r: f64,
}

impl Parallelepiped {
    pub fn new(lattice: Lattice, r: f64) -> Result<Self, LatticeError> {
        if !(r.is_finite() && r > 0.0) {
            return Err(LatticeError::Malformed(format!("scale r must be positive, got {r}")));
        }
        Ok(Parallelepiped { lattice, r })
    }

    /// `|P_r| = r^n |det A|`.
    pub fn volume(&self) -> f64 {
        self.r.powi(self.lattice.dim() as i32) * self.lattice.det().abs()
    }

    fn cell_coords(&self, x: &[f64]) -> Vec<f64> {
        self.lattice
            .coords(x)
            .into_iter()
            .map(|z| z / self.r)
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.cell_coords(x).iter().all(|&z| (-0.5..0.5).contains(&z))
    }

    /// Splits `x = p + r A m` with `p ∈ P_r` and integer `m`.
    pub fn reduce(&self, x: &[f64]) -> (Vec<f64>, Vec<i64>) {
        let z = self.cell_coords(x);
        let mut m: Vec<i64> = z.iter().map(|&v| (v + 0.5).floor() as i64).collect();
        let mut p = self.residual(x, &m);
        // floor(z + 1/2) can land one off when z + 1/2 rounds; fix against
        // the coordinates of the actual residual
        for _ in 0..2 {
            let zp = self.cell_coords(&p);
            let mut changed = false;
            for (k, &v) in zp.iter().enumerate() {
                if v >= 0.5 {
                    m[k] += 1;
                    changed = true;
                } else if v < -0.5 {
                    m[k] -= 1;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            p = self.residual(x, &m);
        }
        (p, m)
    }

    fn residual(&self, x: &[f64], m: &[i64]) -> Vec<f64> {
        let shift: Vec<f64> = m.iter().map(|&k| k as f64 * self.r).collect();
        let offset = self.lattice.point(&shift);
        x.iter().zip(offset).map(|(a, b)| a - b).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn dual_examples() {
        let id = Lattice::identity(2);
        assert_eq!(id.dual().basis(), id.basis());

        let d = Lattice::from_columns(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 2.0]);
        assert!(close(d.dual().basis(), &expected, 1e-15));

        let shear = Lattice::from_columns(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let dual = shear.dual();
        let cols = dual.columns();
        // hand inverse-transpose: columns (1,-1) and (0,1)
        assert!((cols[0][0] - 1.0).abs() < 1e-15 && (cols[0][1] + 1.0).abs() < 1e-15);
        assert!(cols[1][0].abs() < 1e-15 && (cols[1][1] - 1.0).abs() < 1e-15);
        for xi in &cols {
            for x in shear.columns() {
                let dot: f64 = xi.iter().zip(&x).map(|(a, b)| a * b).sum();
                assert!((dot - dot.round()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dual_is_involution_and_scales_inversely() {
        let l = Lattice::from_columns(&[vec![1.3, 0.2], vec![-0.4, 0.9]]).unwrap();
        assert!(close(l.dual().dual().basis(), l.basis(), 1e-12));
        for r in [2.0, 4.0, 8.0, 16.0] {
            // powers of two scale exactly
            assert_eq!(l.scaled(r).dual().basis(), l.dual().scaled(1.0 / r).basis());
        }
    }

    #[test]
    fn singular_basis_rejected() {
        assert!(matches!(
            Lattice::from_columns(&[vec![1.0, 2.0], vec![2.0, 4.0]]),
            Err(LatticeError::Singular { .. })
        ));
        assert!(Lattice::from_columns(&[vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn reduce_examples() {
        let p = Parallelepiped::new(Lattice::identity(2), 1.0).unwrap();
        assert_eq!(p.reduce(&[0.0, 0.0]), (vec![0.0, 0.0], vec![0, 0]));

        let p = Parallelepiped::new(Lattice::identity(1), 3.0).unwrap();
        let (x, m) = p.reduce(&[1.6]);
        assert!((x[0] + 1.4).abs() < 1e-15);
        assert_eq!(m, vec![1]);

        let shear = Lattice::from_columns(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let p = Parallelepiped::new(shear.clone(), 1.0).unwrap();
        let (x, m) = p.reduce(&[1.5, 0.9]);
        // z = A^{-1} (1.5, 0.9) = (0.6, 0.9) -> m = (1, 1), z - m = (-0.4, -0.1)
        assert_eq!(m, vec![1, 1]);
        let z = shear.coords(&x);
        assert!(z.iter().all(|v| (-0.5..0.5).contains(v)));
        assert!(p.contains(&x));
    }

    #[test]
    fn half_open_boundary() {
        let p = Parallelepiped::new(Lattice::identity(1), 2.0).unwrap();
        assert!(p.contains(&[-1.0]));
        assert!(!p.contains(&[1.0]));
        let (x, m) = p.reduce(&[1.0]);
        assert_eq!((x, m), (vec![-1.0], vec![1]));
        assert_eq!(p.volume(), 2.0);
    }

    #[test]
    fn serde_round_trip() {
        let l = Lattice::from_columns(&[vec![1.0, 2.0f64.sqrt()], vec![2.0f64.sqrt(), 1.0]]).unwrap();
        let text = serde_json::to_string(&l).unwrap();
        let back: Lattice = serde_json::from_str(&text).unwrap();
        assert_eq!(back.basis(), l.basis());
    }
}
