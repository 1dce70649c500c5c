use serde::{Deserialize, Serialize};

use super::evolve::Evolution;
use super::scheme::Stepper;
use super::SolverError;

/// Largest per-cell violation of the discrete entropy inequality
///
/// `|u'_i - k| - |u_i - k| + sum_a lambda_a (G_{i+1/2} - G_{i-1/2}) <= 0`,
///
/// with the numerical entropy flux `G(a, b) = F(a ∨ k, b ∨ k) - F(a ∧ k, b ∧ k)`
/// built from the scheme's own numerical flux `F`. The value is per step and
/// per cell (multiplied through by `dt`), so it is dimensionless.
pub fn entropy_residual(stepper: &Stepper, lambda: &[f64], prev: &[f64], next: &[f64], k: f64) -> f64 {
    let g = |axis: usize, a: f64, b: f64| {
        stepper.numerical_flux(axis, a.max(k), b.max(k)) - stepper.numerical_flux(axis, a.min(k), b.min(k))
    };
    (0..prev.len())
        .map(|i| {
            let mut r = (next[i] - k).abs() - (prev[i] - k).abs();
            for (axis, &l) in lambda.iter().enumerate() {
                let (left, right) = stepper.neighbours(i, axis);
                r += l * (g(axis, prev[i], prev[right]) - g(axis, prev[left], prev[i]));
            }
            r
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareVerdict {
    /// `u <= v` in every cell after every step.
    pub ordered: bool,
    /// First `(step, cell)` where the order broke.
    pub first_violation: Option<(usize, usize)>,
    pub steps: usize,
    /// `h^n sum |u - v|` before the first step and after each step.
    pub l1_distance: Vec<f64>,
    /// The distance never grew by more than `1e-12` relative. Expected on
    /// periodic meshes; copy boundaries can feed in distance.
    pub contraction: bool,
    /// Each run stayed inside its own initial `[min, max]`.
    pub maximum_principle: bool,
}

/// Runs `u` and `v` with the same stepper up to `t_end` and checks the order
/// after every step, along with `L^1` contraction and the maximum principle.
pub fn compare_runs(
    stepper: &Stepper,
    u: Vec<f64>,
    v: Vec<f64>,
    t_end: f64,
) -> Result<CompareVerdict, SolverError> {
    if let Some(i) = u.iter().zip(&v).position(|(a, b)| a > b) {
        return Err(SolverError::Config(format!("initial data not ordered at cell {i}")));
    }
    let cell: f64 = stepper.mesh.spacing.iter().product();
    let dist = |a: &[f64], b: &[f64]| cell * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let bounds = |w: &[f64]| {
        w.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    };
    let (ulo, uhi) = bounds(&u);
    let (vlo, vhi) = bounds(&v);
    let mut eu = Evolution::new(stepper.clone(), u, false)?;
    let mut ev = Evolution::new(stepper.clone(), v, false)?;
    let mut verdict = CompareVerdict {
        ordered: true,
        first_violation: None,
        steps: 0,
        l1_distance: vec![dist(eu.values(), ev.values())],
        contraction: true,
        maximum_principle: true,
    };
    while eu.step(t_end)?.is_some() {
        ev.step(t_end)?;
        verdict.steps += 1;
        let (a, b) = (eu.values(), ev.values());
        if verdict.ordered {
            if let Some(i) = a.iter().zip(b).position(|(x, y)| x > y) {
                verdict.ordered = false;
                verdict.first_violation = Some((verdict.steps, i));
            }
        }
        let (alo, ahi) = bounds(a);
        let (blo, bhi) = bounds(b);
        if alo < ulo || ahi > uhi || blo < vlo || bhi > vhi {
            verdict.maximum_principle = false;
        }
        let d = dist(a, b);
        let before = *verdict.l1_distance.last().expect("initial distance");
        if d > before + 1e-12 * before.max(f64::MIN_POSITIVE) {
            verdict.contraction = false;
        }
        verdict.l1_distance.push(d);
    }
    Ok(verdict)
}
