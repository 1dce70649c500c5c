//! The localized decay argument run constructively: periodic envelopes of the
//! data, periodic solutions above and below it, and the final bound.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::commands::{active_view, checkpoints, flux_and_gn, grid_dump};
use super::config::ExperimentConfig;
use super::report::{RunReport, SeriesRow, Verdict};
use super::{ExperimentError, StageExt};
use crate::flux::{nonlinearity_family, GnVerdict};
use crate::grid::GridFunction;
use crate::lattice::random_avoiding_lattice;
use crate::norms::l1_over;
use crate::periodization::{
    admissibility, default_eps, default_lambda_grid, envelopes, mr_bound_check, sandwich_check,
    shifted_periodic_data, PeriodicGridFunction,
};
use crate::shape::unit_ball_volume;
use crate::solver::{box_problem, to_torus};

/// Outcome of comparing a box state against periodic bounds sampled within a
/// few cells of each box cell centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossGridSandwich {
    pub holds: bool,
    pub cells_checked: usize,
    pub worst_excess: f64,
    pub first_violation: Option<Vec<f64>>,
}

/// `min lower - tol <= u <= max upper + tol`, the extrema taken over the
/// points `x + h k` with integer `|k|_inf <= cells` around each cell centre `x`.
/// The reported excess is before subtracting `tol`.
pub fn cross_grid_sandwich(
    u: &GridFunction,
    lower: &PeriodicGridFunction,
    upper: &PeriodicGridFunction,
    cells: usize,
    tol: f64,
) -> CrossGridSandwich {
    let dim = u.dim();
    let k = cells as i64;
    let offsets: Vec<Vec<f64>> = match dim {
        1 => (-k..=k).map(|i| vec![i as f64 * u.h]).collect(),
        _ => (-k..=k)
            .flat_map(|i| (-k..=k).map(move |j| vec![i as f64 * u.h, j as f64 * u.h]))
            .collect(),
    };
    let mut worst = f64::NEG_INFINITY;
    let mut first = None;
    for c in 0..u.len() {
        let x = u.center(c);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for o in &offsets {
            let y: Vec<f64> = x.iter().zip(o).map(|(a, b)| a + b).collect();
            lo = lo.min(lower.value_at(&y));
            hi = hi.max(upper.value_at(&y));
        }
        let v = u.values[c];
        let excess = (lo - v).max(v - hi);
        if excess > tol && first.is_none() {
            first = Some(x);
        }
        worst = worst.max(excess);
    }
    CrossGridSandwich {
        holds: first.is_none(),
        cells_checked: u.len(),
        worst_excess: worst,
        first_violation: first,
    }
}

pub fn cmd_pipeline(cfg: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    let start = Instant::now();
    let mut report = RunReport::new("pipeline", cfg);
    let pc = &cfg.pipeline;
    let (phi, structure, gn) = flux_and_gn(cfg)?;
    report.gn = Some(gn.clone());
    if let GnVerdict::Fails { witness } = gn {
        return Err(ExperimentError::at("gn")(ExperimentError::Precondition(format!(
            "genuine nonlinearity fails: phi is affine on ({}, {})",
            witness.lo, witness.hi
        ))));
    }
    let n = phi.dim;
    let h = cfg.grid.h;
    let u0 = cfg.initial.localized(h).stage("initial")?;

    // stage 1 and 2: subspaces, then an avoiding lattice and its dual
    let family = nonlinearity_family(&phi, &structure).stage("subspaces")?;
    report.set("subspaces", family.len() as f64);
    let cert = random_avoiding_lattice(n, &family, &cfg.lattice.params).stage("lattice")?;
    let lattice = cert.basis.dual();
    report.lattice_certificate = Some(cert);
    report.timings.insert("lattice".into(), start.elapsed().as_secs_f64());

    // the localized solution, shared by every scale
    let t_end = pc.t_end;
    let samples = pc.samples.max(1);
    let stops = checkpoints(
        t_end,
        (1..=samples)
            .map(|k| t_end * k as f64 / samples as f64)
            .chain(pc.sandwich_times.iter().copied())
            .chain(cfg.outputs.state_times.iter().copied()),
    );
    let box_start = Instant::now();
    let mut problem = box_problem(&phi, &u0, &cfg.scheme, t_end).stage("box solve")?;
    let origin = vec![0.0; n];
    let mut box_rows: Vec<SeriesRow> = Vec::with_capacity(stops.len() + 1);
    let mut box_states: Vec<(f64, GridFunction)> = Vec::new();
    let row = |g: &GridFunction, t: f64| SeriesRow {
        t,
        x_norm: Some(cfg.norm.eval(g)),
        l1_cell: Some(l1_over(g, &cfg.norm.window, &origin)),
        mass: Some(g.mass()),
        ..Default::default()
    };
    box_rows.push(row(&active_view(&problem), 0.0));
    for &t in &stops {
        problem.evolution.advance_to(t).stage("box solve")?;
        box_rows.push(row(&active_view(&problem), t));
        if pc.sandwich_times.contains(&t) {
            box_states.push((t, problem.state()));
        }
        if cfg.outputs.state_times.contains(&t) {
            report.states.push(grid_dump(format!("u_t{t}"), &problem.state()));
        }
    }
    report
        .timings
        .insert("box solve".into(), box_start.elapsed().as_secs_f64());

    let c = pc.c.unwrap_or_else(|| unit_ball_volume(n));
    report.set("c", c);
    let mut b_plus_seq = Vec::new();
    for &r in &pc.r_schedule {
        let tag = format!("r{r}");
        let r_start = Instant::now();

        // stage 3: envelopes, M_r and the shifted data
        let env = envelopes(&u0, &lattice, r, pc.shift_cap).stage("envelopes")?;
        let table = admissibility(&u0, &default_lambda_grid(env.c0.max(f64::MIN_POSITIVE), 100));
        let (eps, p) = default_eps(&table, env.c0);
        let mr = mr_bound_check(&env, p, eps, h);
        report.push(Verdict::at_most(format!("mr_bound_{tag}"), mr.m_r, mr.bound));
        let shifted = shifted_periodic_data(&env, &structure, pc.eps_floor).stage("shift")?;
        let mut scalars = env.scalars();
        scalars.b_r_plus = Some(shifted.b_plus);
        scalars.b_r_minus = Some(shifted.b_minus);
        scalars.p = Some(p);
        scalars.eps = Some(eps);
        report.envelopes.push(scalars);
        b_plus_seq.push(shifted.b_plus);
        let initial = sandwich_check(&u0, &shifted.u_minus, &shifted.u_plus);
        let mut v = Verdict::new(
            format!("sandwich_{tag}_t0"),
            initial.holds,
            format!(
                "{} cells, worst excess {:e}",
                initial.cells_checked, initial.worst_excess
            ),
        );
        v.value = Some(initial.worst_excess);
        v.threshold = Some(0.0);
        report.push(v);

        // stage 4: the two periodic solves
        let mut upper = to_torus(&phi, &shifted.u_plus, &cfg.scheme).stage("torus solve")?;
        let mut lower = to_torus(&phi, &shifted.u_minus, &cfg.scheme).stage("torus solve")?;
        let (bp, bm) = (shifted.b_plus, shifted.b_minus);
        let dev = |s: &PeriodicGridFunction, b: f64| s.v_norm_minus(b, &cfg.norm.window, cfg.norm.stride);
        let mut rows = Vec::with_capacity(box_rows.len());
        let first = &box_rows[0];
        rows.push(SeriesRow {
            dev_plus: Some(dev(&shifted.u_plus, bp)),
            dev_minus: Some(dev(&shifted.u_minus, bm)),
            r: Some(r),
            ..first.clone()
        });
        let value_tol = pc.sandwich_value_tol * env.c0.max(bp.abs()).max(bm.abs());
        let mut worst_sandwich = f64::NEG_INFINITY;
        let mut sandwich_ok = true;
        let mut sandwich_detail = Vec::new();
        for (i, &t) in stops.iter().enumerate() {
            upper.advance_to(t).stage("torus solve")?;
            lower.advance_to(t).stage("torus solve")?;
            let (su, sl) = (upper.state(), lower.state());
            rows.push(SeriesRow {
                dev_plus: Some(dev(&su, bp)),
                dev_minus: Some(dev(&sl, bm)),
                r: Some(r),
                ..box_rows[i + 1].clone()
            });
            // stage 5: ordering, within the cross-grid tolerance
            if let Some((_, state)) = box_states.iter().find(|(ts, _)| *ts == t) {
                let s = cross_grid_sandwich(state, &sl, &su, pc.sandwich_cells, value_tol);
                sandwich_ok &= s.holds;
                worst_sandwich = worst_sandwich.max(s.worst_excess);
                sandwich_detail.push(format!("t={t}: worst excess {:e}", s.worst_excess));
            }
        }
        if !pc.sandwich_times.is_empty() {
            let mut v = Verdict::new(format!("sandwich_{tag}"), sandwich_ok, sandwich_detail.join("; "));
            v.value = Some(worst_sandwich);
            v.threshold = Some(value_tol);
            report.push(v);
        }

        // stage 7: the bound on the tail window
        let c0 = env.c0;
        let grid_tol = 2.0 * pc.sandwich_cells as f64 * h * n as f64 * (c0 + bp.abs() + bm.abs());
        let base = c * (bp.abs() + bm.abs());
        let tail_from = pc.tail_start * t_end;
        let tail: Vec<&SeriesRow> = rows.iter().filter(|row| row.t >= tail_from).collect();
        let tail_max = |get: fn(&SeriesRow) -> Option<f64>| {
            tail.iter().filter_map(|row| get(row)).fold(0.0f64, f64::max)
        };
        let worst_lhs = tail_max(|row| row.x_norm);
        let rhs = base + tail_max(|row| row.dev_plus) + tail_max(|row| row.dev_minus) + grid_tol;
        let pointwise = tail
            .iter()
            .map(|row| {
                base + row.dev_plus.unwrap_or(0.0) + row.dev_minus.unwrap_or(0.0) + grid_tol
                    - row.x_norm.unwrap_or(0.0)
            })
            .fold(f64::INFINITY, f64::min);
        let margin = rhs - worst_lhs;
        let mut v = Verdict::new(
            format!("final_bound_{tag}"),
            margin >= 0.0,
            format!(
                "tail maxima on [{tail_from}, {t_end}]: X(u) {worst_lhs:e} <= {c} (|B-| + |B+|) + deviations + {grid_tol:e} = {rhs:e}"
            ),
        );
        v.threshold = Some(rhs);
        v.value = Some(worst_lhs);
        report.push(v);
        report.set(&format!("b_plus_{tag}"), bp);
        report.set(&format!("b_minus_{tag}"), bm);
        report.set(&format!("m_r_{tag}"), env.m_r);
        report.set(&format!("dev_plus_initial_{tag}"), rows[0].dev_plus.unwrap_or(0.0));
        report.set(
            &format!("dev_plus_final_{tag}"),
            rows.last().and_then(|r| r.dev_plus).unwrap_or(0.0),
        );
        report.set(&format!("bound_margin_{tag}"), margin);
        report.set(&format!("pointwise_margin_{tag}"), pointwise);
        report.series.extend(rows);
        report.timings.insert(tag, r_start.elapsed().as_secs_f64());
    }
    let nonincreasing = b_plus_seq.windows(2).all(|w| w[1] <= w[0]);
    report.push(Verdict::new(
        "b_plus_nonincreasing",
        nonincreasing,
        format!("B_r+ along the schedule: {b_plus_seq:?}"),
    ));
    report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    #[test]
    fn cross_grid_tolerance_absorbs_one_cell_shift() {
        let h = 0.25;
        let u = GridFunction::from_fn(vec![-2.0], h, vec![16], |x| if (0.0..1.0).contains(&x[0]) { 1.0 } else { 0.0 }).unwrap();
        let shape = vec![16];
        let shifted: Vec<f64> = (0..16).map(|k| if (9..13).contains(&k) { 1.0 } else { 0.0 }).collect();
        let upper = PeriodicGridFunction::new(Lattice::identity(1), 4.0, shape.clone(), shifted);
        let lower = PeriodicGridFunction::constant(Lattice::identity(1), 4.0, shape, 0.0);
        assert!(!cross_grid_sandwich(&u, &lower, &upper, 0, 0.0).holds);
        assert!(cross_grid_sandwich(&u, &lower, &upper, 1, 0.0).holds);
        assert!(cross_grid_sandwich(&u, &lower, &upper, 0, 1.0).holds);
    }
}
