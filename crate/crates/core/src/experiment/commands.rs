use std::time::Instant;

use super::config::{ExperimentConfig, InitialSpec, Threshold};
use super::report::{fit_rate, RunReport, SeriesRow, StateDump, Verdict};
use super::{ExperimentError, StageExt};
use crate::flux::{
    affine_structure, check_gn, default_eps_ladder, nonlinearity_family, nonlinearity_subspace, AffineStructure,
    FluxSpec, GnVerdict, NonlinearitySubspace,
};
use crate::grid::GridFunction;
use crate::lattice::{certify, random_avoiding_lattice, AvoidanceCertificate, Lattice, LatticeError};
use crate::norms::l1_over;
use crate::periodization::{torus_shape, PeriodicGridFunction};
use crate::solver::{box_problem, to_torus, traveling_wave, BoxProblem, Evolution, HopfLax};

pub(crate) fn flux_and_gn(
    cfg: &ExperimentConfig,
) -> Result<(FluxSpec, AffineStructure, GnVerdict), ExperimentError> {
    let phi = cfg.flux.spec().stage("flux")?;
    let structure = affine_structure(&phi);
    let gn = check_gn(&structure, &default_eps_ladder()).stage("gn")?;
    Ok((phi, structure, gn))
}

/// The part of a box state that can be nonzero: the active region when the
/// evolution tracks a zero background, else everything.
pub(crate) fn active_view(problem: &BoxProblem) -> GridFunction {
    let ev = &problem.evolution;
    let grid = &problem.grid;
    if ev.background() != Some(0.0) {
        return GridFunction {
            values: ev.values().to_vec(),
            ..grid.clone()
        };
    }
    let Some(region) = ev.active_region() else {
        return GridFunction {
            origin: grid.origin.clone(),
            h: grid.h,
            shape: vec![1; grid.dim()],
            values: vec![0.0],
        };
    };
    let shape: Vec<usize> = region.iter().map(|&(a, b)| b + 1 - a).collect();
    let origin: Vec<f64> = (0..grid.dim())
        .map(|a| grid.origin[a] + region[a].0 as f64 * grid.h)
        .collect();
    let n0 = grid.shape[0];
    let values = match grid.dim() {
        1 => ev.values()[region[0].0..=region[0].1].to_vec(),
        _ => (region[1].0..=region[1].1)
            .flat_map(|i1| ev.values()[region[0].0 + n0 * i1..=region[0].1 + n0 * i1].iter().copied())
            .collect(),
    };
    GridFunction {
        origin,
        h: grid.h,
        shape,
        values,
    }
}

/// Sorted distinct checkpoint times in `(0, t_end]`, always ending at `t_end`.
pub(crate) fn checkpoints(t_end: f64, extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut ts: Vec<f64> = extra.into_iter().filter(|&t| t > 0.0 && t < t_end).collect();
    ts.push(t_end);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

pub(crate) fn grid_dump(name: String, g: &GridFunction) -> StateDump {
    StateDump {
        name,
        centers: (0..g.len()).map(|k| g.center(k)).collect(),
        values: g.values.clone(),
    }
}

fn torus_dump(name: String, g: &PeriodicGridFunction) -> StateDump {
    StateDump {
        name,
        centers: (0..g.values.len()).map(|k| g.physical_center(k)).collect(),
        values: g.values.clone(),
    }
}

fn row_at(rows: &[SeriesRow], t: f64) -> Option<&SeriesRow> {
    rows.iter()
        .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
}

fn threshold_verdicts(
    report: &mut RunReport,
    label: &str,
    thresholds: &[Threshold],
    get: impl Fn(&SeriesRow) -> Option<f64>,
) {
    let initial = report.series.first().and_then(&get).unwrap_or(0.0);
    let mut out = Vec::new();
    for th in thresholds {
        let Some(row) = row_at(&report.series, th.t) else {
            continue;
        };
        let value = get(row).unwrap_or(f64::NAN);
        let limit = if th.relative { th.max * initial } else { th.max };
        out.push(Verdict::at_most(format!("{label}_at_t{}", th.t), value, limit));
    }
    report.verdicts.extend(out);
}

pub fn cmd_decay(cfg: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    let start = Instant::now();
    let mut report = RunReport::new("decay", cfg);
    let (phi, _, gn) = flux_and_gn(cfg)?;
    report.gn = Some(gn.clone());
    if let GnVerdict::Fails { witness } = gn {
        return Err(ExperimentError::Precondition(format!(
            "genuine nonlinearity fails: phi is affine on ({}, {}); the counterexample command covers this flux",
            witness.lo, witness.hi
        )));
    }
    let dc = &cfg.decay;
    let u0 = cfg.initial.localized(cfg.grid.h).stage("initial")?;
    let mut problem = box_problem(&phi, &u0, &cfg.scheme, dc.t_end).stage("setup")?;
    report.set("cells", problem.grid.len() as f64);
    report.set("h", cfg.grid.h);
    report.set("dt", problem.evolution.stepper.dt);
    report.timings.insert("setup".into(), start.elapsed().as_secs_f64());

    let origin = vec![0.0; phi.dim];
    let record = |p: &BoxProblem| {
        let view = active_view(p);
        SeriesRow {
            t: p.evolution.t(),
            x_norm: Some(cfg.norm.eval(&view)),
            l1_cell: Some(l1_over(&view, &cfg.norm.window, &origin)),
            mass: Some(view.mass()),
            ..Default::default()
        }
    };

    let solve = Instant::now();
    report.series.push(record(&problem));
    let stops = checkpoints(
        dc.t_end,
        dc.thresholds
            .iter()
            .map(|t| t.t)
            .chain(cfg.outputs.state_times.iter().copied()),
    );
    if cfg.outputs.state_times.contains(&0.0) {
        report.states.push(grid_dump("u_t0".into(), &problem.state()));
    }
    for &stop in &stops {
        while let Some(info) = problem.evolution.step(stop).stage("solve")? {
            if problem.evolution.steps() % dc.series_every == 0 || info.t == stop {
                report.series.push(record(&problem));
            }
        }
        if cfg.outputs.state_times.contains(&stop) {
            report.states.push(grid_dump(format!("u_t{stop}"), &problem.state()));
        }
    }
    report.set("steps", problem.evolution.steps() as f64);
    report.timings.insert("solve".into(), solve.elapsed().as_secs_f64());

    let x0 = report.series[0].x_norm.unwrap_or(0.0);
    let x_final = report.series.last().and_then(|r| r.x_norm).unwrap_or(0.0);
    report.set("x_norm_initial", x0);
    report.set("x_norm_final", x_final);

    if let Some(after) = dc.monotone_after {
        let xs: Vec<f64> = report
            .series
            .iter()
            .filter(|r| r.t >= after)
            .filter_map(|r| r.x_norm)
            .collect();
        let worst = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let worst = if worst.is_finite() { worst } else { 0.0 };
        let mut v = Verdict::at_most("x_norm_nonincreasing", worst, dc.monotone_tol);
        v.detail = format!(
            "largest increase between consecutive records for t >= {after}: {worst:e} (tolerance {:e})",
            dc.monotone_tol
        );
        report.push(v);
    }
    threshold_verdicts(&mut report, "x_norm", &dc.thresholds, |r| r.x_norm);

    if let Some(rf) = &dc.rate_fit {
        let samples: Vec<(f64, f64)> = report.series.iter().filter_map(|r| r.x_norm.map(|x| (r.t, x))).collect();
        match fit_rate(&samples, rf.t_min, rf.t_max) {
            Some(fit) => {
                if let Some([lo, hi]) = rf.expected {
                    let mut v = Verdict::new(
                        "rate_fit_slope",
                        fit.slope >= lo && fit.slope <= hi,
                        format!("slope {:.4} (residual {:.2e}) expected in [{lo}, {hi}]", fit.slope, fit.residual),
                    );
                    v.value = Some(fit.slope);
                    report.push(v);
                }
                report.rate_fit = Some(fit);
            }
            None => report.push(Verdict::new("rate_fit_slope", false, "too few positive samples in the window")),
        }
    }

    if let Some(tol) = dc.oracle_rel_tol {
        let table = &problem.evolution.stepper.table;
        if phi.dim == 1 && table.is_convex(0) {
            let oracle_start = Instant::now();
            let hl = HopfLax::new(table, &problem.grid).stage("oracle")?;
            let exact = hl.on_grid(dc.t_end, &problem.grid);
            let x_exact = cfg.norm.eval(&exact);
            let numerical = problem.state();
            let l1_gap: f64 = numerical
                .values
                .iter()
                .zip(&exact.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                * numerical.cell_volume();
            report.set("oracle_x_norm_final", x_exact);
            report.set("oracle_l1_distance", l1_gap);
            let rel = (x_final - x_exact).abs() / x_exact.abs().max(f64::MIN_POSITIVE);
            report.push(Verdict::at_most("x_norm_matches_oracle", rel, tol));
            report.timings.insert("oracle".into(), oracle_start.elapsed().as_secs_f64());
        } else {
            report
                .notes
                .push("oracle comparison skipped: needs a one-dimensional convex flux".into());
        }
    }
    if problem.evolution.stepper.table.max_error > 0.0 {
        report.notes.push(format!(
            "flux evolved through its piecewise-linear table (max interpolation error {:e})",
            problem.evolution.stepper.table.max_error
        ));
    }
    report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(report)
}

/// Samples the initial data at the physical centres of the torus cells.
pub(crate) fn periodic_data(
    spec: &InitialSpec,
    lattice: &Lattice,
    r: f64,
    h: f64,
) -> Result<PeriodicGridFunction, ExperimentError> {
    let shape = torus_shape(lattice, r, h);
    let template = PeriodicGridFunction::constant(lattice.clone(), r, shape, 0.0);
    let grid = match spec {
        InitialSpec::Csv { .. } => Some(spec.localized(h)?),
        _ => None,
    };
    let values = (0..template.values.len())
        .map(|k| {
            let x = template.physical_center(k);
            match &grid {
                Some(g) => g.value_at(&x),
                None => spec.eval(&x),
            }
        })
        .collect();
    Ok(template.with_values(values))
}

/// The condition that no nonzero dual lattice vector `xi` with integer
/// coordinates bounded by `R` makes `xi . phi` affine near `m`.
pub(crate) fn nondegeneracy(
    phi: &FluxSpec,
    lattice: &Lattice,
    m: f64,
    delta_u: f64,
    cfg: &ExperimentConfig,
) -> Result<(Verdict, Option<AvoidanceCertificate>), ExperimentError> {
    let [lo, hi] = phi.u_range;
    let interval = [(m - delta_u).max(lo), (m + delta_u).min(hi)];
    let x = nonlinearity_subspace(phi, interval).stage("nondegeneracy")?;
    if !x.is_proper() {
        return Ok((
            Verdict::new(
                "nondegeneracy",
                false,
                format!("phi is affine in every direction on ({}, {})", interval[0], interval[1]),
            ),
            None,
        ));
    }
    let p = &cfg.lattice.params;
    let cert = certify(&lattice.dual(), &[x], p.radius, p.delta, p.seed, 1).stage("nondegeneracy")?;
    let mut v = Verdict::new(
        "nondegeneracy",
        cert.holds(),
        format!(
            "min ratio {:e} over dual vectors with |xi|_inf <= {} (delta {:e})",
            cert.min_ratio, p.radius, p.delta
        ),
    );
    v.value = Some(cert.min_ratio);
    v.threshold = Some(p.delta);
    Ok((v, Some(cert)))
}

struct TorusRun {
    series: Vec<SeriesRow>,
    states: Vec<StateDump>,
    steps: usize,
    cells: usize,
}

fn run_torus(
    phi: &FluxSpec,
    data: &PeriodicGridFunction,
    cfg: &ExperimentConfig,
    stops: &[f64],
    dump: bool,
) -> Result<TorusRun, ExperimentError> {
    let pc = &cfg.periodic;
    let m = data.mean;
    let mut problem = to_torus(phi, data, &cfg.scheme).stage("setup")?;
    let record = |s: &PeriodicGridFunction, t: f64| SeriesRow {
        t,
        x_norm: Some(s.v_norm_minus(m, &cfg.norm.window, cfg.norm.stride)),
        l1_cell: Some(s.mean_deviation(m)),
        mass: Some(s.values.iter().sum::<f64>() / s.values.len() as f64),
        ..Default::default()
    };
    let mut series = vec![record(data, 0.0)];
    let mut states = Vec::new();
    if dump && cfg.outputs.state_times.contains(&0.0) {
        states.push(torus_dump("u_t0".into(), data));
    }
    let ev: &mut Evolution = &mut problem.evolution;
    for &stop in stops {
        while let Some(info) = ev.step(stop).stage("solve")? {
            if ev.steps() % pc.series_every == 0 || info.t == stop {
                let s = data.with_values(ev.values().to_vec());
                series.push(record(&s, info.t));
            }
        }
        if dump && cfg.outputs.state_times.contains(&stop) {
            states.push(torus_dump(format!("u_t{stop}"), &data.with_values(ev.values().to_vec())));
        }
    }
    Ok(TorusRun {
        series,
        states,
        steps: ev.steps(),
        cells: data.values.len(),
    })
}

pub fn cmd_periodic_decay(cfg: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    let start = Instant::now();
    let mut report = RunReport::new("periodic-decay", cfg);
    let (phi, _, gn) = flux_and_gn(cfg)?;
    report.gn = Some(gn);
    let pc = &cfg.periodic;
    let lattice = cfg.periodic_lattice(phi.dim).stage("lattice")?;
    let data = periodic_data(&cfg.initial, &lattice, pc.r, cfg.grid.h).stage("initial")?;
    let m = data.mean;
    let c0 = data.min_max().0.abs().max(data.min_max().1.abs());
    report.set("mean", m);
    report.set("c0", c0);

    let (ndp, cert) = nondegeneracy(&phi, &lattice, m, pc.ndp_delta, cfg)?;
    if !ndp.passed {
        report.notes.push("nondegeneracy fails near the mean; decay is not expected".into());
    }
    report.push(ndp);
    report.lattice_certificate = cert;

    let stops = checkpoints(
        pc.t_end,
        pc.thresholds
            .iter()
            .map(|t| t.t)
            .chain(cfg.outputs.state_times.iter().copied()),
    );
    let solve = Instant::now();
    let run = run_torus(&phi, &data, cfg, &stops, true)?;
    report.timings.insert("solve".into(), solve.elapsed().as_secs_f64());
    report.set("cells", run.cells as f64);
    report.set("steps", run.steps as f64);
    report.series = run.series;
    report.states = run.states;

    let drift = report
        .series
        .iter()
        .filter_map(|r| r.mass)
        .map(|mt| (mt - m).abs())
        .fold(0.0, f64::max);
    let scale = m.abs().max(c0).max(f64::MIN_POSITIVE);
    let mut v = Verdict::at_most("mean_conserved", drift / scale, pc.mean_tol);
    v.detail = format!("max |mean(t) - mean(0)| = {drift:e}, relative to {scale:e}");
    report.push(v);
    threshold_verdicts(&mut report, "deviation", &pc.thresholds, |r| r.l1_cell);

    if pc.richardson {
        let coarse_start = Instant::now();
        let coarse_data = periodic_data(&cfg.initial, &lattice, pc.r, 2.0 * cfg.grid.h).stage("richardson")?;
        let coarse = run_torus(&phi, &coarse_data, cfg, &stops, false)?;
        let initial_fine = report.series[0].l1_cell.unwrap_or(0.0);
        for th in &pc.thresholds {
            let fine = row_at(&report.series, th.t).and_then(|r| r.l1_cell).unwrap_or(f64::NAN);
            let rough = row_at(&coarse.series, th.t).and_then(|r| r.l1_cell).unwrap_or(f64::NAN);
            let extrapolated = 2.0 * fine - rough;
            report.set(&format!("deviation_coarse_t{}", th.t), rough);
            report.set(&format!("deviation_extrapolated_t{}", th.t), extrapolated);
            let limit = if th.relative { th.max * initial_fine } else { th.max };
            report.push(Verdict::at_most(
                format!("deviation_extrapolated_at_t{}", th.t),
                extrapolated,
                limit,
            ));
        }
        report
            .timings
            .insert("richardson".into(), coarse_start.elapsed().as_secs_f64());
    }
    report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(report)
}

/// Earliest time after which the support of `u0`, moved with velocity `c`,
/// has no cell centre in the window centred at the origin.
fn exit_time(u0: &GridFunction, c: &[f64], cfg: &ExperimentConfig) -> Option<f64> {
    let (slo, shi) = u0.support_box()?;
    let (blo, bhi) = cfg.norm.window.bounds(u0.dim());
    let half = 0.5 * u0.h;
    (0..u0.dim())
        .filter_map(|a| {
            if c[a] > 0.0 {
                Some(((bhi[a] - slo[a] - half) / c[a]).max(0.0))
            } else if c[a] < 0.0 {
                Some(((blo[a] - shi[a] + half) / c[a]).max(0.0))
            } else {
                None
            }
        })
        .min_by(f64::total_cmp)
}

pub fn cmd_counterexample(cfg: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    let start = Instant::now();
    let mut report = RunReport::new("counterexample", cfg);
    let (phi, _, gn) = flux_and_gn(cfg)?;
    report.gn = Some(gn.clone());
    let witness = match gn {
        GnVerdict::Holds => {
            return Err(ExperimentError::Precondition(
                "genuine nonlinearity holds, so no traveling-wave counterexample exists".into(),
            ))
        }
        GnVerdict::Fails { witness } => witness,
    };
    let u0 = cfg.initial.localized(cfg.grid.h).stage("initial")?;
    let (dmin, dmax) = u0.min_max();
    if dmin < witness.lo || dmax > witness.hi {
        return Err(ExperimentError::Precondition(format!(
            "data range [{dmin}, {dmax}] is not inside the affine interval [{}, {}]",
            witness.lo, witness.hi
        )));
    }
    let c = witness.slope.clone();
    for (a, ca) in c.iter().enumerate() {
        report.set(&format!("speed_{a}"), *ca);
    }
    let cc = &cfg.counterexample;
    let origin = vec![0.0; phi.dim];
    let n = cc.samples.max(2);
    for k in 0..n {
        let t = cc.t_end * k as f64 / (n - 1) as f64;
        let moved = traveling_wave(&u0, &c, t);
        report.series.push(SeriesRow {
            t,
            x_norm: Some(cfg.norm.eval(&moved)),
            l1_cell: Some(l1_over(&moved, &cfg.norm.window, &origin)),
            mass: Some(moved.mass()),
            ..Default::default()
        });
    }
    let x0 = report.series[0].x_norm.unwrap_or(0.0);
    let spread = report
        .series
        .iter()
        .filter_map(|r| r.x_norm)
        .map(|x| (x - x0).abs())
        .fold(0.0, f64::max);
    report.set("x_norm", x0);
    report.push(Verdict::at_most("x_norm_constant", spread, 1e-12));
    if c.iter().all(|&s| s == 0.0) {
        let l0 = report.series[0].l1_cell.unwrap_or(0.0);
        let l_spread = report
            .series
            .iter()
            .filter_map(|r| r.l1_cell)
            .map(|l| (l - l0).abs())
            .fold(0.0, f64::max);
        report.push(Verdict::at_most("stationary_local_l1", l_spread, 0.0));
    } else if let Some(t_exit) = exit_time(&u0, &c, cfg) {
        report.set("t_exit", t_exit);
        let worst = report
            .series
            .iter()
            .filter(|r| r.t >= t_exit)
            .filter_map(|r| r.l1_cell)
            .fold(0.0, f64::max);
        let mut v = Verdict::at_most("local_l1_vanishes", worst, 0.0);
        v.detail = format!("largest L1 over the fixed window for t >= {t_exit}: {worst:e}");
        report.push(v);
    }
    for &t in &cfg.outputs.state_times {
        report
            .states
            .push(grid_dump(format!("u_t{t}"), &traveling_wave(&u0, &c, t)));
    }
    if cc.scheme_run {
        let mut p = box_problem(&phi, &u0, &cfg.scheme, cc.t_end).stage("scheme run")?;
        p.evolution.advance_to(cc.t_end).stage("scheme run")?;
        let x = cfg.norm.eval(&p.state());
        report.set("scheme_x_norm_final", x);
        report.notes.push(format!(
            "scheme X-norm at t = {} is {x:e}; the decrease from {x0:e} is numerical diffusion, not decay",
            cc.t_end
        ));
    }
    report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(report)
}

pub fn cmd_check_gn(cfg: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    let mut report = RunReport::new("check-gn", cfg);
    let (phi, structure, gn) = flux_and_gn(cfg)?;
    report.set("inf_f_plus", structure.inf_f_plus());
    report.set("sup_f_minus", structure.sup_f_minus());
    report.set("affine_intervals", structure.intervals.len() as f64);
    report.set("isolated_points", structure.isolated_points().len() as f64);
    for iv in &structure.intervals {
        report
            .notes
            .push(format!("affine on ({}, {}) with slope {:?}", iv.lo, iv.hi, iv.slope));
    }
    for f in &structure.f_set {
        report.notes.push(format!("nonlinearity set component [{}, {}]", f[0], f[1]));
    }
    match nonlinearity_family(&phi, &structure) {
        Ok(family) => {
            report.set("subspace_family", family.len() as f64);
            for s in &family {
                report.notes.push(format!(
                    "X_I on ({}, {}) has dimension {}",
                    s.interval[0],
                    s.interval[1],
                    s.dim()
                ));
            }
        }
        Err(e) => report.notes.push(format!("subspace family unavailable: {e}")),
    }
    let detail = match &gn {
        GnVerdict::Holds => "nonlinearity set meets both sides of 0 at every scale".to_string(),
        GnVerdict::Fails { witness } => format!(
            "affine on ({}, {}) with slope {:?}",
            witness.lo, witness.hi, witness.slope
        ),
    };
    report.push(Verdict::new("gn", gn.holds(), detail));
    report.gn = Some(gn);
    Ok(report)
}

/// An orthonormal basis of the span of `vectors`, as a subspace to avoid.
pub fn span_subspace(vectors: &[Vec<f64>], ambient: usize) -> Result<NonlinearitySubspace, ExperimentError> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        if v.len() != ambient {
            return Err(ExperimentError::Config(format!(
                "spanning vector of length {} in dimension {ambient}",
                v.len()
            )));
        }
        let mut w = v.clone();
        for q in &basis {
            let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            basis.push(w.iter().map(|x| x / norm).collect());
        }
    }
    Ok(NonlinearitySubspace {
        interval: [0.0, 0.0],
        ambient,
        basis,
        rank_tol: 1e-12,
    })
}

pub fn cmd_lattice_cert(cfg: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    let start = Instant::now();
    let mut report = RunReport::new("lattice-cert", cfg);
    let phi = cfg.flux.spec().stage("flux")?;
    let n = phi.dim;
    let family = match &cfg.lattice.subspaces {
        Some(list) => list
            .iter()
            .map(|vs| span_subspace(vs, n))
            .collect::<Result<Vec<_>, _>>()?,
        None => {
            let structure = affine_structure(&phi);
            nonlinearity_family(&phi, &structure).stage("subspaces")?
        }
    };
    report.set("subspaces", family.len() as f64);
    let p = &cfg.lattice.params;
    let outcome = match &cfg.lattice.basis {
        Some(cols) => {
            let lattice = Lattice::from_columns(cols).stage("lattice")?;
            certify(&lattice, &family, p.radius, p.delta, p.seed, 1).map_err(ExperimentError::from)
        }
        None => random_avoiding_lattice(n, &family, p).map_err(ExperimentError::from),
    };
    match outcome {
        Ok(cert) => {
            let mut v = Verdict::new(
                "certificate",
                cert.holds(),
                format!(
                    "min ratio {:e} over |xi|_inf <= {} after {} attempt(s)",
                    cert.min_ratio, cert.radius, cert.attempts
                ),
            );
            v.value = Some(cert.min_ratio);
            v.threshold = Some(cert.delta);
            report.push(v);
            report.set("attempts", cert.attempts as f64);
            report.lattice_certificate = Some(cert);
        }
        Err(ExperimentError::Lattice(e @ LatticeError::RetryCapExceeded { .. })) => {
            report.push(Verdict::new("certificate", false, e.to_string()));
        }
        Err(e) => return Err(ExperimentError::at("certify")(e)),
    }
    report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(report)
}
