//! Flux vectors `phi: R -> R^n` built from a small closed grammar.
//!
//! The grammar (affine maps, signed or even powers, sums, piecewise
//! combinations and the dyadic piecewise-linear family) is rich enough to
//! express strictly convex fluxes, non-Lipschitz powers with exponent below
//! one, and fluxes whose affine pieces accumulate at zero, while keeping the
//! affine structure decidable without numerical guessing.

mod structure;
mod subspace;

pub use structure::{
    affine_structure, check_gn, default_eps_ladder, select_b, AffineInterval, AffineStructure,
    GnVerdict, Side, DEFAULT_EPS_FLOOR,
};
pub use subspace::{nonlinearity_family, nonlinearity_subspace, NonlinearitySubspace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for declaring a combination of powers affine.
pub const TOL_AFFINE: f64 = 1e-10;
/// Tolerance for continuity of piecewise expressions at their breakpoints.
pub const TOL_CONT: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluxError {
    #[error("u = {u} is outside the flux range [{lo}, {hi}]")]
    OutOfRange { u: f64, lo: f64, hi: f64 },
    #[error("invalid flux specification: {0}")]
    Invalid(String),
    #[error("component {component} jumps by {jump:e} at breakpoint {at}")]
    Discontinuous { component: usize, at: f64, jump: f64 },
    #[error("interval ({lo}, {hi}) is empty or outside the flux range")]
    BadInterval { lo: f64, hi: f64 },
    #[error("zero must lie in the interior of the flux range")]
    ZeroNotInterior,
    #[error("genuine nonlinearity fails: phi is affine on ({lo}, {hi})")]
    GnFails { lo: f64, hi: f64 },
    #[error("no admissible value in the nonlinearity set beyond {bound}")]
    NoAdmissibleB { bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    /// `c |u|^p sign(u)`
    #[default]
    Odd,
    /// `c |u|^p`
    Even,
}

/// One flux component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxExpr {
    Affine {
        slope: f64,
        #[serde(default)]
        offset: f64,
    },
    Power {
        coeff: f64,
        exponent: f64,
        #[serde(default)]
        parity: Parity,
    },
    Sum(Vec<FluxExpr>),
    /// `pieces[i]` is used on `[breakpoints[i-1], breakpoints[i])`.
    Piecewise {
        breakpoints: Vec<f64>,
        pieces: Vec<FluxExpr>,
    },
    /// Even piecewise-linear interpolant of `coeff * u^2 / 2` at the nodes
    /// `0, ±2^-k (k = 0..=k_max)`, continued with slope `coeff` beyond `±1`.
    Dyadic {
        k_max: u32,
        #[serde(default = "unit")]
        coeff: f64,
    },
}

fn unit() -> f64 {
    1.0
}

/// Local closed form of an expression on an open segment that contains no
/// breakpoint and does not contain zero: `offset + slope * u + sum c_p |u|^p`.
#[derive(Debug, Clone, Default)]
pub(crate) struct LocalForm {
    pub offset: f64,
    pub slope: f64,
    /// `(exponent, net coefficient, sum of absolute coefficients)`
    pub powers: Vec<(f64, f64, f64)>,
}

impl LocalForm {
    fn add_power(&mut self, p: f64, c: f64) {
        match self.powers.iter_mut().find(|(q, _, _)| *q == p) {
            Some(entry) => {
                entry.1 += c;
                entry.2 += c.abs();
            }
            None => self.powers.push((p, c, c.abs())),
        }
    }

    fn absorb(&mut self, other: LocalForm) {
        self.offset += other.offset;
        self.slope += other.slope;
        for (p, c, a) in other.powers {
            match self.powers.iter_mut().find(|(q, _, _)| *q == p) {
                Some(entry) => {
                    entry.1 += c;
                    entry.2 += a;
                }
                None => self.powers.push((p, c, a)),
            }
        }
    }

    /// True when every non-linear power cancels (to `TOL_AFFINE`, relative).
    pub fn is_affine(&self) -> bool {
        self.powers
            .iter()
            .all(|&(_, c, a)| c.abs() <= TOL_AFFINE * a || c == 0.0)
    }

    /// Derivative at a point of the segment the form was built for.
    pub fn derivative(&self, u: f64) -> f64 {
        let s = u.signum();
        self.slope
            + self
                .powers
                .iter()
                .map(|&(p, c, _)| c * p * u.abs().powf(p - 1.0) * s)
                .sum::<f64>()
    }
}

impl FluxExpr {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            FluxExpr::Affine { slope, offset } => slope * u + offset,
            FluxExpr::Power {
                coeff,
                exponent,
                parity,
            } => {
                let m = coeff * u.abs().powf(*exponent);
                match parity {
                    Parity::Odd => {
                        if u < 0.0 {
                            -m
                        } else if u > 0.0 {
                            m
                        } else {
                            0.0
                        }
                    }
                    Parity::Even => m,
                }
            }
            FluxExpr::Sum(terms) => terms.iter().map(|t| t.eval(u)).sum(),
            FluxExpr::Piecewise {
                breakpoints,
                pieces,
            } => {
                let i = breakpoints.partition_point(|&b| b <= u);
                pieces[i].eval(u)
            }
            FluxExpr::Dyadic { k_max, coeff } => coeff * dyadic_half_square(u.abs(), *k_max),
        }
    }

    /// Candidate points of non-smoothness (kinks, piece switches, zero for powers).
    pub fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            FluxExpr::Affine { .. } => {}
            FluxExpr::Power { .. } => out.push(0.0),
            FluxExpr::Sum(terms) => terms.iter().for_each(|t| t.breakpoints(out)),
            FluxExpr::Piecewise {
                breakpoints,
                pieces,
            } => {
                out.extend_from_slice(breakpoints);
                for (i, piece) in pieces.iter().enumerate() {
                    let lo = if i == 0 { f64::NEG_INFINITY } else { breakpoints[i - 1] };
                    let hi = breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
                    let mut inner = Vec::new();
                    piece.breakpoints(&mut inner);
                    out.extend(inner.into_iter().filter(|&b| b > lo && b < hi));
                }
            }
            FluxExpr::Dyadic { k_max, .. } => {
                out.push(0.0);
                for k in 0..=*k_max {
                    let b = (-(k as f64)).exp2();
                    out.push(b);
                    out.push(-b);
                }
            }
        }
    }

    /// Closed form on the breakpoint-free segment containing `mid` (`mid != 0`).
    /// The expression multiplied by `c`, kept inside the grammar.
    pub fn scaled(&self, c: f64) -> FluxExpr {
        match self {
            FluxExpr::Affine { slope, offset } => FluxExpr::Affine {
                slope: c * slope,
                offset: c * offset,
            },
            FluxExpr::Power {
                coeff,
                exponent,
                parity,
            } => FluxExpr::Power {
                coeff: c * coeff,
                exponent: *exponent,
                parity: *parity,
            },
            FluxExpr::Sum(terms) => FluxExpr::Sum(terms.iter().map(|t| t.scaled(c)).collect()),
            FluxExpr::Piecewise {
                breakpoints,
                pieces,
            } => FluxExpr::Piecewise {
                breakpoints: breakpoints.clone(),
                pieces: pieces.iter().map(|p| p.scaled(c)).collect(),
            },
            FluxExpr::Dyadic { k_max, coeff } => FluxExpr::Dyadic {
                k_max: *k_max,
                coeff: c * coeff,
            },
        }
    }

    pub(crate) fn local_form(&self, mid: f64) -> LocalForm {
        let s = mid.signum();
        match self {
            FluxExpr::Affine { slope, offset } => LocalForm {
                offset: *offset,
                slope: *slope,
                powers: Vec::new(),
            },
            FluxExpr::Power {
                coeff,
                exponent,
                parity,
            } => {
                let c = match parity {
                    Parity::Odd => coeff * s,
                    Parity::Even => *coeff,
                };
                let mut form = LocalForm::default();
                if *exponent == 1.0 {
                    // c |u| = c s u on one side of zero
                    form.slope = c * s;
                } else if *coeff != 0.0 {
                    form.add_power(*exponent, c);
                }
                form
            }
            FluxExpr::Sum(terms) => {
                let mut form = LocalForm::default();
                for t in terms {
                    form.absorb(t.local_form(mid));
                }
                form
            }
            FluxExpr::Piecewise {
                breakpoints,
                pieces,
            } => {
                let i = breakpoints.partition_point(|&b| b <= mid);
                pieces[i].local_form(mid)
            }
            FluxExpr::Dyadic { k_max, coeff } => {
                let (slope, offset) = dyadic_piece(mid.abs(), *k_max);
                LocalForm {
                    offset: coeff * offset,
                    slope: coeff * slope * s,
                    powers: Vec::new(),
                }
            }
        }
    }

    fn validate(&self, component: usize) -> Result<(), FluxError> {
        match self {
            FluxExpr::Affine { slope, offset } => {
                if !slope.is_finite() || !offset.is_finite() {
                    return Err(FluxError::Invalid("non-finite affine coefficient".into()));
                }
            }
            FluxExpr::Power {
                coeff, exponent, ..
            } => {
                if !(*exponent > 0.0) || !exponent.is_finite() {
                    return Err(FluxError::Invalid(format!(
                        "power exponent must be positive, got {exponent}"
                    )));
                }
                if !coeff.is_finite() {
                    return Err(FluxError::Invalid("non-finite power coefficient".into()));
                }
            }
            FluxExpr::Sum(terms) => {
                for t in terms {
                    t.validate(component)?;
                }
            }
            FluxExpr::Piecewise {
                breakpoints,
                pieces,
            } => {
                if pieces.len() != breakpoints.len() + 1 {
                    return Err(FluxError::Invalid(format!(
                        "piecewise with {} breakpoints needs {} pieces, got {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        pieces.len()
                    )));
                }
                if breakpoints.iter().any(|b| !b.is_finite())
                    || breakpoints.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(FluxError::Invalid(
                        "piecewise breakpoints must be finite and strictly increasing".into(),
                    ));
                }
                for p in pieces {
                    p.validate(component)?;
                }
                for (i, &b) in breakpoints.iter().enumerate() {
                    let left = pieces[i].eval(b);
                    let right = pieces[i + 1].eval(b);
                    let jump = (left - right).abs();
                    if jump > TOL_CONT * left.abs().max(right.abs()).max(1.0) {
                        return Err(FluxError::Discontinuous {
                            component,
                            at: b,
                            jump,
                        });
                    }
                }
            }
            FluxExpr::Dyadic { k_max, coeff } => {
                if *k_max > 60 {
                    return Err(FluxError::Invalid("dyadic k_max must be at most 60".into()));
                }
                if !coeff.is_finite() {
                    return Err(FluxError::Invalid("non-finite dyadic coefficient".into()));
                }
            }
        }
        Ok(())
    }
}

/// `(slope, offset)` of the dyadic interpolant of `v^2/2` on the piece containing `v > 0`.
fn dyadic_piece(v: f64, k_max: u32) -> (f64, f64) {
    if v >= 1.0 {
        // tangent continuation: value 1/2 at 1, slope 1
        return (1.0, -0.5);
    }
    let mut b = 1.0;
    for _ in 0..=k_max {
        let a = b * 0.5;
        if v >= a {
            return ((a + b) * 0.5, -a * b * 0.5);
        }
        b = a;
    }
    // innermost chord through the origin
    (b * 0.5, 0.0)
}

fn dyadic_half_square(v: f64, k_max: u32) -> f64 {
    let (slope, offset) = dyadic_piece(v, k_max);
    slope * v + offset
}

/// A flux vector with its validity range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSpec {
    pub dim: usize,
    pub components: Vec<FluxExpr>,
    pub u_range: [f64; 2],
}

impl FluxSpec {
    pub fn new(components: Vec<FluxExpr>, u_range: [f64; 2]) -> Result<Self, FluxError> {
        let spec = FluxSpec {
            dim: components.len(),
            components,
            u_range,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), FluxError> {
        if !(1..=2).contains(&self.dim) || self.components.len() != self.dim {
            return Err(FluxError::Invalid(format!(
                "dimension {} with {} components; expected 1 or 2 matching components",
                self.dim,
                self.components.len()
            )));
        }
        let [lo, hi] = self.u_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(FluxError::Invalid(format!("bad u_range [{lo}, {hi}]")));
        }
        for (i, c) in self.components.iter().enumerate() {
            c.validate(i)?;
        }
        Ok(())
    }

    pub fn contains(&self, u: f64) -> bool {
        u >= self.u_range[0] && u <= self.u_range[1]
    }

    /// Componentwise evaluation; errors outside `u_range`.
    pub fn eval(&self, u: f64) -> Result<Vec<f64>, FluxError> {
        if !self.contains(u) {
            return Err(FluxError::OutOfRange {
                u,
                lo: self.u_range[0],
                hi: self.u_range[1],
            });
        }
        Ok(self.eval_unchecked(u))
    }

    /// Evaluation without the range check.
    pub fn eval_unchecked(&self, u: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(u)).collect()
    }

    /// Sorted, de-duplicated breakpoints strictly inside `u_range`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let [lo, hi] = self.u_range;
        let mut all = Vec::new();
        for c in &self.components {
            c.breakpoints(&mut all);
        }
        all.retain(|&b| b > lo && b < hi);
        all.sort_by(f64::total_cmp);
        let tiny = 1e-14 * (hi - lo);
        all.dedup_by(|a, b| (*a - *b).abs() <= tiny);
        all
    }

    /// The flux plus a global affine map `slope * u + offset` (per component).
    pub fn plus_affine(&self, slope: &[f64], offset: &[f64]) -> FluxSpec {
        let components = self
            .components
            .iter()
            .zip(slope.iter().zip(offset))
            .map(|(c, (&s, &d))| {
                FluxExpr::Sum(vec![c.clone(), FluxExpr::Affine { slope: s, offset: d }])
            })
            .collect();
        FluxSpec {
            dim: self.dim,
            components,
            u_range: self.u_range,
        }
    }

    /// `psi = M phi`, for an `n x n` matrix given by rows. Rows with a single
    /// nonzero entry reuse the scaled component directly.
    pub fn linear_map(&self, rows: &[Vec<f64>]) -> FluxSpec {
        let components = rows
            .iter()
            .map(|row| {
                let terms: Vec<FluxExpr> = row
                    .iter()
                    .zip(&self.components)
                    .filter(|(m, _)| **m != 0.0)
                    .map(|(m, c)| if *m == 1.0 { c.clone() } else { c.scaled(*m) })
                    .collect();
                match terms.len() {
                    0 => linear(0.0),
                    1 => terms.into_iter().next().expect("one term"),
                    _ => FluxExpr::Sum(terms),
                }
            })
            .collect();
        FluxSpec {
            dim: self.dim,
            components,
            u_range: self.u_range,
        }
    }

    /// `u^2 / 2`, the Burgers flux.
    pub fn burgers(u_max: f64) -> FluxSpec {
        FluxSpec::new(vec![half_square()], [-u_max, u_max]).expect("valid burgers flux")
    }
}

/// `u^2 / 2` in the grammar.
pub fn half_square() -> FluxExpr {
    FluxExpr::Power {
        coeff: 0.5,
        exponent: 2.0,
        parity: Parity::Even,
    }
}

/// `u^3 / 3` in the grammar.
pub fn third_cube() -> FluxExpr {
    FluxExpr::Power {
        coeff: 1.0 / 3.0,
        exponent: 3.0,
        parity: Parity::Odd,
    }
}

/// `c u`.
pub fn linear(c: f64) -> FluxExpr {
    FluxExpr::Affine {
        slope: c,
        offset: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let phi = FluxSpec::new(vec![half_square(), third_cube()], [-3.0, 3.0]).unwrap();
        let v = phi.eval(2.0).unwrap();
        assert_eq!(v[0], 2.0);
        assert!((v[1] - 8.0 / 3.0).abs() < 1e-15);

        let phi = FluxSpec::new(vec![linear(1.0), linear(0.0)], [-1.0, 1.0]).unwrap();
        assert_eq!(phi.eval(0.5).unwrap(), vec![0.5, 0.0]);

        let root = FluxExpr::Power {
            coeff: 1.0,
            exponent: 0.5,
            parity: Parity::Odd,
        };
        let phi = FluxSpec::new(vec![root], [-5.0, 5.0]).unwrap();
        assert_eq!(phi.eval(4.0).unwrap(), vec![2.0]);
        assert_eq!(phi.eval(-4.0).unwrap(), vec![-2.0]);
    }

    #[test]
    fn out_of_range_is_domain_error() {
        let phi = FluxSpec::burgers(1.0);
        assert!(matches!(
            phi.eval(1.5),
            Err(FluxError::OutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_bad_specs() {
        let bad_power = FluxExpr::Power {
            coeff: 1.0,
            exponent: 0.0,
            parity: Parity::Odd,
        };
        assert!(FluxSpec::new(vec![bad_power], [-1.0, 1.0]).is_err());

        let unordered = FluxExpr::Piecewise {
            breakpoints: vec![0.5, 0.0],
            pieces: vec![linear(1.0), linear(1.0), linear(1.0)],
        };
        assert!(FluxSpec::new(vec![unordered], [-1.0, 1.0]).is_err());

        let jump = FluxExpr::Piecewise {
            breakpoints: vec![0.0],
            pieces: vec![
                linear(1.0),
                FluxExpr::Affine {
                    slope: 1.0,
                    offset: 0.1,
                },
            ],
        };
        assert!(matches!(
            FluxSpec::new(vec![jump], [-1.0, 1.0]),
            Err(FluxError::Discontinuous { .. })
        ));
        assert!(FluxSpec::new(vec![linear(1.0)], [1.0, -1.0]).is_err());
    }

    #[test]
    fn dyadic_interpolates_half_square_at_nodes() {
        let d = FluxExpr::Dyadic {
            k_max: 20,
            coeff: 1.0,
        };
        for k in 0..=20 {
            let b = (-(k as f64)).exp2();
            assert!((d.eval(b) - b * b / 2.0).abs() < 1e-15);
            assert!((d.eval(-b) - b * b / 2.0).abs() < 1e-15);
        }
        assert_eq!(d.eval(0.0), 0.0);
        assert!((d.eval(2.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn json_tree_round_trip() {
        let phi = FluxSpec::new(
            vec![
                FluxExpr::Sum(vec![half_square(), linear(2.0)]),
                FluxExpr::Piecewise {
                    breakpoints: vec![0.0],
                    pieces: vec![linear(1.0), half_square()],
                },
            ],
            [-1.0, 1.0],
        )
        .unwrap();
        let text = serde_json::to_string(&phi).unwrap();
        let back: FluxSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, phi);
        let parsed: FluxExpr =
            serde_json::from_str(r#"{"power": {"coeff": 0.5, "exponent": 2, "parity": "even"}}"#)
                .unwrap();
        assert_eq!(parsed, half_square());
    }
}
