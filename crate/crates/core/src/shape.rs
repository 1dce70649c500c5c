//! Bounded open window shapes used by the local `L^1` norms and by the
//! covering argument that makes those norms equivalent.

use serde::{Deserialize, Serialize};

/// A bounded open set, positioned relative to the origin. A window "at `y`"
/// is the translate `y + V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowShape {
    /// Open Euclidean ball `|x| < radius`.
    Ball { radius: f64 },
    /// Open box `lo < x < hi`, per axis.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Default for WindowShape {
    fn default() -> Self {
        WindowShape::Ball { radius: 1.0 }
    }
}

impl WindowShape {
    pub fn unit_ball() -> Self {
        WindowShape::Ball { radius: 1.0 }
    }

    pub fn ball(radius: f64) -> Self {
        WindowShape::Ball { radius }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        WindowShape::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    /// Nonempty interior and finite extent; a box must match `dim`.
    pub fn is_valid(&self, dim: usize) -> bool {
        match self {
            WindowShape::Ball { radius } => radius.is_finite() && *radius > 0.0,
            WindowShape::Box { lo, hi } => {
                lo.len() == dim
                    && hi.len() == dim
                    && lo
                        .iter()
                        .zip(hi)
                        .all(|(a, b)| a.is_finite() && b.is_finite() && a < b)
            }
        }
    }

    /// Open-set membership of an offset from the window's reference point.
    pub fn contains(&self, offset: &[f64]) -> bool {
        match self {
            WindowShape::Ball { radius } => {
                offset.iter().map(|x| x * x).sum::<f64>() < radius * radius
            }
            WindowShape::Box { lo, hi } => offset
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (a, b))| x > a && x < b),
        }
    }

    /// Axis-aligned bounding box `[lo, hi]` in `dim` dimensions.
    pub fn bounds(&self, dim: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            WindowShape::Ball { radius } => (vec![-radius; dim], vec![*radius; dim]),
            WindowShape::Box { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    /// Largest distance from the origin to a point of the closure.
    pub fn circumradius(&self, dim: usize) -> f64 {
        let (lo, hi) = self.bounds(dim);
        match self {
            WindowShape::Ball { radius } => *radius,
            WindowShape::Box { .. } => lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| a.abs().max(b.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Radius of the largest inscribed ball.
    pub fn inradius(&self) -> f64 {
        match self {
            WindowShape::Ball { radius } => *radius,
            WindowShape::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| 0.5 * (b - a))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Lebesgue measure in `dim` dimensions.
    pub fn volume(&self, dim: usize) -> f64 {
        match self {
            WindowShape::Ball { radius } => unit_ball_volume(dim) * radius.powi(dim as i32),
            WindowShape::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
        }
    }

    /// Surface measure, used in the Lipschitz bound of the window integral.
    pub fn surface(&self, dim: usize) -> f64 {
        match self {
            WindowShape::Ball { radius } => match dim {
                1 => 2.0,
                2 => 2.0 * std::f64::consts::PI * radius,
                _ => f64::NAN,
            },
            WindowShape::Box { lo, hi } => {
                let widths: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
                match dim {
                    1 => 2.0,
                    2 => 2.0 * (widths[0] + widths[1]),
                    _ => f64::NAN,
                }
            }
        }
    }
}

/// Volume of the unit ball: 2 in 1D, pi in 2D.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_is_open() {
        let b = WindowShape::unit_ball();
        assert!(b.contains(&[0.999]));
        assert!(!b.contains(&[1.0]));
        let bx = WindowShape::interval(-1.0, 2.0);
        assert!(bx.contains(&[1.5]));
        assert!(!bx.contains(&[-1.0]));
    }

    #[test]
    fn measures() {
        assert_eq!(WindowShape::unit_ball().volume(1), 2.0);
        assert_eq!(WindowShape::unit_ball().volume(2), std::f64::consts::PI);
        let bx = WindowShape::Box {
            lo: vec![-1.0, 0.0],
            hi: vec![1.0, 3.0],
        };
        assert_eq!(bx.volume(2), 6.0);
        assert_eq!(bx.inradius(), 1.0);
        assert!((bx.circumradius(2) - 10f64.sqrt()).abs() < 1e-15);
        assert!(!WindowShape::ball(0.0).is_valid(1));
        assert!(!bx.is_valid(1));
    }
}
