//! Draw-and-verify generation of lattices whose nonzero vectors stay away from
//! a finite family of proper subspaces.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Lattice, LatticeError};
use crate::flux::NonlinearitySubspace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AvoidanceParams {
    /// Certificate radius `R` in the sup norm of integer coordinates.
    pub radius: u32,
    /// Relative angular margin.
    pub delta: f64,
    pub seed: u64,
    pub max_attempts: usize,
    /// Try the identity basis before any random draw.
    pub try_identity: bool,
}

impl Default for AvoidanceParams {
    fn default() -> Self {
        AvoidanceParams {
            radius: 50,
            delta: 1e-6,
            seed: 0,
            max_attempts: 100,
            try_identity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceCertificate {
    pub basis: Lattice,
    pub seed: u64,
    /// Draws consumed, counting the identity attempt.
    pub attempts: usize,
    pub radius: u32,
    pub delta: f64,
    /// Smallest `dist(A xi, X) / |A xi|` seen; `1` when the family is empty.
    pub min_ratio: f64,
    pub worst_xi: Option<Vec<i64>>,
    pub worst_subspace: Option<usize>,
}

impl AvoidanceCertificate {
    pub fn holds(&self) -> bool {
        self.min_ratio >= self.delta
    }
}

/// `I + U`, with `U` uniform on `[-1, 1]` entrywise.
pub fn draw_candidate(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let u: f64 = rng.gen_range(-1.0..=1.0);
        if i == j {
            1.0 + u
        } else {
            u
        }
    })
}

fn integer_box(n: usize, radius: i64) -> Vec<Vec<i64>> {
    let side = 2 * radius + 1;
    let total = (side as usize).pow(n as u32);
    (0..total)
        .map(|mut k| {
            (0..n)
                .map(|_| {
                    let c = (k % side as usize) as i64 - radius;
                    k /= side as usize;
                    c
                })
                .collect::<Vec<i64>>()
        })
        .filter(|xi| xi.iter().any(|&c| c != 0))
        .collect()
}

/// Scans every integer `xi` with `0 < |xi|_inf <= radius` and every subspace,
/// returning the worst ratio together with its witness. The reduction keys on
/// (ratio, enumeration index) so the result does not depend on scheduling.
pub fn certify(
    lattice: &Lattice,
    subspaces: &[NonlinearitySubspace],
    radius: u32,
    delta: f64,
    seed: u64,
    attempts: usize,
) -> Result<AvoidanceCertificate, LatticeError> {
    let n = lattice.dim();
    for (k, s) in subspaces.iter().enumerate() {
        if s.ambient != n || !s.is_proper() {
            return Err(LatticeError::NotProper(k));
        }
    }
    let mut cert = AvoidanceCertificate {
        basis: lattice.clone(),
        seed,
        attempts,
        radius,
        delta,
        min_ratio: 1.0,
        worst_xi: None,
        worst_subspace: None,
    };
    if subspaces.is_empty() {
        return Ok(cert);
    }
    let vectors = integer_box(n, radius as i64);
    let worst = vectors
        .par_iter()
        .enumerate()
        .map(|(idx, xi)| {
            let z: Vec<f64> = xi.iter().map(|&c| c as f64).collect();
            let v = lattice.point(&z);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let (s, ratio) = subspaces
                .iter()
                .enumerate()
                .map(|(s, sub)| (s, sub.distance(&v) / norm))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            (ratio, idx, s)
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, 0),
            |a, b| if (b.0, b.1) < (a.0, a.1) { b } else { a },
        );
    cert.min_ratio = worst.0;
    cert.worst_xi = Some(vectors[worst.1].clone());
    cert.worst_subspace = Some(worst.2);
    Ok(cert)
}

pub fn random_avoiding_lattice(
    n: usize,
    subspaces: &[NonlinearitySubspace],
    params: &AvoidanceParams,
) -> Result<AvoidanceCertificate, LatticeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut last: Option<AvoidanceCertificate> = None;
    for attempt in 0..params.max_attempts {
        let basis = if attempt == 0 && params.try_identity {
            DMatrix::identity(n, n)
        } else {
            draw_candidate(n, &mut rng)
        };
        let Ok(lattice) = Lattice::new(basis) else {
            continue;
        };
        let cert = certify(
            &lattice,
            subspaces,
            params.radius,
            params.delta,
            params.seed,
            attempt + 1,
        )?;
        if cert.holds() {
            return Ok(cert);
        }
        last = Some(cert);
    }
    let (xi, subspace, ratio) = match last {
        Some(c) => (
            c.worst_xi.unwrap_or_default(),
            c.worst_subspace.unwrap_or(0),
            c.min_ratio,
        ),
        None => (Vec::new(), 0, f64::NAN),
    };
    Err(LatticeError::RetryCapExceeded {
        attempts: params.max_attempts,
        xi,
        subspace,
        ratio,
    })
}
