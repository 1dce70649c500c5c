//! Affine structure of a flux: maximal affine intervals, the nonlinearity set
//! `F` (points with no neighbourhood on which the flux is affine), the genuine
//! nonlinearity check and the selection of the constants `B_r^±` in `F`.

use serde::{Deserialize, Serialize};

use super::{FluxError, FluxSpec, TOL_AFFINE};

/// Lower bound on `|B|` when the target mean is on the wrong side of zero.
pub const DEFAULT_EPS_FLOOR: f64 = 1e-6;

/// `{2^-k : k = 1..=20}`, decreasing.
pub fn default_eps_ladder() -> Vec<f64> {
    (1..=20).map(|k| (-(k as f64)).exp2()).collect()
}

/// Open interval on which `phi(u) = slope * u + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineInterval {
    pub lo: f64,
    pub hi: f64,
    pub slope: Vec<f64>,
    pub offset: Vec<f64>,
}

/// One breakpoint-free piece of the range, as classified by the grammar.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub affine: bool,
    /// Per-component slope at the left and right ends (one-sided derivatives).
    pub slope_lo: Vec<f64>,
    pub slope_hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineStructure {
    pub u_range: [f64; 2],
    pub dim: usize,
    /// Maximal open intervals of affinity, ordered, pairwise disjoint.
    pub intervals: Vec<AffineInterval>,
    /// `F` as ordered closed components `[a, b]` (`a == b` for isolated points).
    pub f_set: Vec<[f64; 2]>,
    pub(crate) segments: Vec<Segment>,
}

impl AffineStructure {
    /// Whether `u` belongs to `F`.
    pub fn in_f(&self, u: f64) -> bool {
        self.f_set.iter().any(|&[a, b]| u >= a && u <= b)
    }

    /// Isolated points of `F` (kinks between affine pieces).
    pub fn isolated_points(&self) -> Vec<f64> {
        self.f_set
            .iter()
            .filter(|c| c[0] == c[1])
            .map(|c| c[0])
            .collect()
    }

    /// `inf (F ∩ (0, ∞))`, `+∞` when empty.
    pub fn inf_f_plus(&self) -> f64 {
        self.f_set
            .iter()
            .filter(|c| c[1] > 0.0)
            .map(|c| c[0].max(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// `sup (F ∩ (-∞, 0))`, `-∞` when empty.
    pub fn sup_f_minus(&self) -> f64 {
        self.f_set
            .iter()
            .filter(|c| c[0] < 0.0)
            .map(|c| c[1].min(0.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn slopes_match(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| {
        let scale = x.abs().max(y.abs()).max(1.0);
        (x - y).abs() <= TOL_AFFINE * scale
    })
}

/// Classifies every breakpoint-free segment of the range symbolically and
/// assembles the maximal affine intervals and `F`.
pub fn affine_structure(phi: &FluxSpec) -> AffineStructure {
    let [lo, hi] = phi.u_range;
    let mut nodes = vec![lo];
    nodes.extend(phi.breakpoints());
    nodes.push(hi);

    let segments: Vec<Segment> = nodes
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let forms: Vec<_> = phi.components.iter().map(|c| c.local_form(mid)).collect();
            let affine = forms.iter().all(|f| f.is_affine());
            // one-sided slopes, nudged inside so powers with p < 1 stay finite
            let nudge = 1e-9 * (b - a);
            Segment {
                lo: a,
                hi: b,
                affine,
                slope_lo: forms.iter().map(|f| f.derivative(a + nudge)).collect(),
                slope_hi: forms.iter().map(|f| f.derivative(b - nudge)).collect(),
            }
        })
        .collect();

    // Atom classification: point i sits between segment i-1 and segment i.
    let n_seg = segments.len();
    let point_in_f: Vec<bool> = (0..=n_seg)
        .map(|i| {
            if i == 0 {
                !segments[0].affine
            } else if i == n_seg {
                !segments[n_seg - 1].affine
            } else {
                let (l, r) = (&segments[i - 1], &segments[i]);
                !(l.affine && r.affine && slopes_match(&l.slope_hi, &r.slope_lo))
            }
        })
        .collect();

    let mut f_set: Vec<[f64; 2]> = Vec::new();
    let mut open: Option<f64> = None;
    for i in 0..=n_seg {
        let x = nodes[i];
        if point_in_f[i] && open.is_none() {
            open = Some(x);
        }
        let seg_in_f = i < n_seg && !segments[i].affine;
        if let Some(start) = open {
            if !seg_in_f {
                f_set.push([start, x]);
                open = None;
            }
        }
    }

    let mut intervals: Vec<AffineInterval> = Vec::new();
    let mut i = 0;
    while i < n_seg {
        if !segments[i].affine {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n_seg && !point_in_f[i + 1] {
            i += 1;
        }
        let a = nodes[start];
        let b = nodes[i + 1];
        let mid = 0.5 * (segments[start].lo + segments[start].hi);
        let forms: Vec<_> = phi.components.iter().map(|c| c.local_form(mid)).collect();
        intervals.push(AffineInterval {
            lo: a,
            hi: b,
            slope: forms.iter().map(|f| f.slope).collect(),
            offset: forms.iter().map(|f| f.offset).collect(),
        });
        i += 1;
    }

    AffineStructure {
        u_range: phi.u_range,
        dim: phi.dim,
        intervals,
        f_set,
        segments,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GnVerdict {
    Holds,
    /// The flux is affine on `witness`, an interval with an endpoint at or
    /// across zero, with slope `witness.slope`.
    Fails { witness: AffineInterval },
}

impl GnVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, GnVerdict::Holds)
    }
}

/// Genuine nonlinearity at the resolution of `eps_ladder`: for each `eps`,
/// `F` meets both `(0, eps]` and `[-eps, 0)`.
pub fn check_gn(structure: &AffineStructure, eps_ladder: &[f64]) -> Result<GnVerdict, FluxError> {
    let [lo, hi] = structure.u_range;
    if !(lo < 0.0 && hi > 0.0) {
        return Err(FluxError::ZeroNotInterior);
    }
    let eps_min = eps_ladder
        .iter()
        .copied()
        .filter(|e| *e > 0.0)
        .fold(f64::INFINITY, f64::min);
    let eps_min = if eps_min.is_finite() { eps_min } else { 0.0 };

    let plus_ok = structure.inf_f_plus() <= eps_min;
    let minus_ok = structure.sup_f_minus() >= -eps_min;
    if plus_ok && minus_ok {
        return Ok(GnVerdict::Holds);
    }
    // The affine interval holding the F-free side of zero.
    let witness = structure
        .intervals
        .iter()
        .find(|iv| {
            if !plus_ok {
                iv.lo <= 0.0 && iv.hi > 0.0
            } else {
                iv.lo < 0.0 && iv.hi >= 0.0
            }
        })
        .cloned()
        .expect("an F-free neighbourhood side of zero lies in an affine interval");
    Ok(GnVerdict::Fails { witness })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

/// Picks `B ∈ cl F` with `B ≥ max(M, eps_floor)` (plus side) or
/// `B ≤ min(M, -eps_floor)` (minus side), closest to zero.
pub fn select_b(
    structure: &AffineStructure,
    mean: f64,
    side: Side,
    eps_floor: f64,
) -> Result<f64, FluxError> {
    if let GnVerdict::Fails { witness } = check_gn(structure, &default_eps_ladder())? {
        return Err(FluxError::GnFails {
            lo: witness.lo,
            hi: witness.hi,
        });
    }
    match side {
        Side::Plus => {
            let bound = mean.max(eps_floor);
            structure
                .f_set
                .iter()
                .filter(|c| c[1] >= bound)
                .map(|c| c[0].max(bound))
                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                .ok_or(FluxError::NoAdmissibleB { bound })
        }
        Side::Minus => {
            let bound = mean.min(-eps_floor);
            structure
                .f_set
                .iter()
                .filter(|c| c[0] <= bound)
                .map(|c| c[1].min(bound))
                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                .ok_or(FluxError::NoAdmissibleB { bound })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{half_square, linear, third_cube, FluxExpr};

    fn dyadic(k_max: u32) -> FluxSpec {
        FluxSpec::new(vec![FluxExpr::Dyadic { k_max, coeff: 1.0 }], [-1.0, 1.0]).unwrap()
    }

    #[test]
    fn strictly_convex_has_no_affine_interval() {
        let s = affine_structure(&FluxSpec::burgers(2.0));
        assert!(s.intervals.is_empty());
        assert_eq!(s.f_set, vec![[-2.0, 2.0]]);
    }

    #[test]
    fn globally_affine_has_empty_f() {
        let phi = FluxSpec::new(vec![linear(1.0)], [-2.0, 2.0]).unwrap();
        let s = affine_structure(&phi);
        assert_eq!(s.intervals.len(), 1);
        assert_eq!((s.intervals[0].lo, s.intervals[0].hi), (-2.0, 2.0));
        assert!(s.f_set.is_empty());
    }

    #[test]
    fn affine_then_square() {
        let phi = FluxSpec::new(
            vec![FluxExpr::Piecewise {
                breakpoints: vec![0.0],
                pieces: vec![
                    linear(1.0),
                    FluxExpr::Power {
                        coeff: 1.0,
                        exponent: 2.0,
                        parity: crate::flux::Parity::Even,
                    },
                ],
            }],
            [-1.0, 1.0],
        )
        .unwrap();
        let s = affine_structure(&phi);
        assert_eq!(s.intervals.len(), 1);
        assert_eq!((s.intervals[0].lo, s.intervals[0].hi), (-1.0, 0.0));
        assert_eq!(s.intervals[0].slope, vec![1.0]);
        assert_eq!(s.f_set, vec![[0.0, 1.0]]);
    }

    #[test]
    fn cancelling_powers_are_affine() {
        let phi = FluxSpec::new(
            vec![FluxExpr::Sum(vec![
                half_square(),
                FluxExpr::Power {
                    coeff: -0.5,
                    exponent: 2.0,
                    parity: crate::flux::Parity::Even,
                },
                linear(3.0),
            ])],
            [-1.0, 1.0],
        )
        .unwrap();
        let s = affine_structure(&phi);
        assert!(s.f_set.is_empty());
        assert_eq!(s.intervals[0].slope, vec![3.0]);
    }

    #[test]
    fn abs_kink_is_isolated_point() {
        let phi = FluxSpec::new(
            vec![FluxExpr::Power {
                coeff: 1.0,
                exponent: 1.0,
                parity: crate::flux::Parity::Even,
            }],
            [-1.0, 1.0],
        )
        .unwrap();
        let s = affine_structure(&phi);
        assert_eq!(s.f_set, vec![[0.0, 0.0]]);
        assert_eq!(s.isolated_points(), vec![0.0]);
        assert_eq!(s.intervals.len(), 2);
        let v = check_gn(&s, &default_eps_ladder()).unwrap();
        assert!(!v.holds());
    }

    #[test]
    fn gn_examples() {
        let ladder = default_eps_ladder();
        let phi = FluxSpec::new(vec![half_square(), third_cube()], [-2.0, 2.0]).unwrap();
        assert!(check_gn(&affine_structure(&phi), &ladder).unwrap().holds());

        let phi = FluxSpec::new(vec![linear(1.0), linear(0.0)], [-3.0, 3.0]).unwrap();
        match check_gn(&affine_structure(&phi), &ladder).unwrap() {
            GnVerdict::Fails { witness } => {
                assert_eq!((witness.lo, witness.hi), (-3.0, 3.0));
                assert_eq!(witness.slope, vec![1.0, 0.0]);
            }
            GnVerdict::Holds => panic!("affine flux must fail"),
        }
    }

    #[test]
    fn dyadic_gn_holds_at_ladder_resolution() {
        let phi = dyadic(20);
        let s = affine_structure(&phi);
        // independent oracle: breakpoints are the dyadic nodes, so the
        // closest nonzero points of F are ±2^-20
        let nodes: Vec<f64> = (0..=20).map(|k| (-(k as f64)).exp2()).collect();
        let inf_pos = nodes.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(inf_pos, 2f64.powi(-20));
        assert_eq!(s.inf_f_plus(), inf_pos);
        assert_eq!(s.sup_f_minus(), -inf_pos);
        assert!(check_gn(&s, &default_eps_ladder()).unwrap().holds());

        // coarser family fails at the same resolution
        let coarse = affine_structure(&dyadic(10));
        assert!(!check_gn(&coarse, &default_eps_ladder()).unwrap().holds());
    }

    #[test]
    fn dyadic_f_is_its_node_set() {
        let s = affine_structure(&dyadic(5));
        // ±1 are range ends covered by affine pieces, so they are not in F
        let mut expected = vec![0.0];
        for k in 1..=5 {
            let b = (-(k as f64)).exp2();
            expected.push(b);
            expected.push(-b);
        }
        expected.sort_by(f64::total_cmp);
        assert_eq!(s.isolated_points(), expected);
    }

    #[test]
    fn select_b_examples() {
        let burgers = affine_structure(&FluxSpec::burgers(2.0));
        assert_eq!(select_b(&burgers, 0.2, Side::Plus, DEFAULT_EPS_FLOOR).unwrap(), 0.2);
        assert_eq!(
            select_b(&burgers, 0.0, Side::Plus, DEFAULT_EPS_FLOOR).unwrap(),
            DEFAULT_EPS_FLOOR
        );
        assert_eq!(
            select_b(&burgers, 0.0, Side::Minus, DEFAULT_EPS_FLOOR).unwrap(),
            -DEFAULT_EPS_FLOOR
        );
        let d = affine_structure(&dyadic(20));
        assert_eq!(select_b(&d, 0.3, Side::Plus, DEFAULT_EPS_FLOOR).unwrap(), 0.5);
        assert_eq!(select_b(&d, 1.0 / 3.0, Side::Plus, DEFAULT_EPS_FLOOR).unwrap(), 0.5);
        assert_eq!(select_b(&d, -0.3, Side::Minus, DEFAULT_EPS_FLOOR).unwrap(), -0.5);
    }

    #[test]
    fn select_b_reports_gn_failure_and_exhaustion() {
        let affine = affine_structure(&FluxSpec::new(vec![linear(2.0)], [-1.0, 1.0]).unwrap());
        assert!(matches!(
            select_b(&affine, 0.1, Side::Plus, DEFAULT_EPS_FLOOR),
            Err(FluxError::GnFails { .. })
        ));
        let burgers = affine_structure(&FluxSpec::burgers(1.0));
        assert!(matches!(
            select_b(&burgers, 1.5, Side::Plus, DEFAULT_EPS_FLOOR),
            Err(FluxError::NoAdmissibleB { .. })
        ));
    }
}
