//! Solver runs against exact solutions: the Lax-Oleinik formula on the line
//! and affine transport on a sheared torus.

use std::f64::consts::PI;

use entropy_decay::flux::{half_square, linear, FluxSpec};
use entropy_decay::grid::GridFunction;
use entropy_decay::lattice::Lattice;
use entropy_decay::periodization::{torus_shape, PeriodicGridFunction};
use entropy_decay::solver::{box_problem, tabulate_flux, to_torus, torus_flux, HopfLax, SchemeConfig, SchemeKind};

fn burgers_error(h: f64, kind: SchemeKind, t: f64) -> f64 {
    let phi = FluxSpec::new(vec![half_square()], [-2.0, 2.0]).unwrap();
    let n = (1.0 / h).round() as usize;
    let u0 = GridFunction::from_fn(vec![0.0], h, vec![n], |_| 1.0).unwrap();
    let config = SchemeConfig {
        flux: kind,
        ..SchemeConfig::default()
    };
    let mut p = box_problem(&phi, &u0, &config, t).unwrap();
    let table = tabulate_flux(&phi, [0.0, 1.0], config.table_points).unwrap();
    let oracle = HopfLax::new(&table, &p.grid).unwrap();
    p.evolution.advance_to(t).unwrap();
    let exact = oracle.on_grid(t, &p.grid);
    let numeric = p.state();
    numeric
        .values
        .iter()
        .zip(&exact.values)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * h
}

#[test]
fn burgers_box_converges_to_lax_oleinik() {
    for kind in [SchemeKind::LaxFriedrichs, SchemeKind::EngquistOsher] {
        let errs: Vec<f64> = [1.0 / 50.0, 1.0 / 100.0, 1.0 / 200.0]
            .iter()
            .map(|&h| burgers_error(h, kind, 2.0))
            .collect();
        for w in errs.windows(2) {
            assert!(w[0] / w[1] > 1.25, "{kind:?}: errors {errs:?}");
        }
        assert!(errs[2] < 0.05, "{kind:?}: errors {errs:?}");
    }
}

fn sheared() -> Lattice {
    Lattice::from_columns(&[vec![1.0, 0.0], vec![0.5, 1.0]]).unwrap()
}

fn bump(y: &[f64]) -> f64 {
    (PI * y[0]).sin().powi(2) * (PI * y[1]).sin().powi(2)
}

/// Torus coordinates of a physical point, wrapped to `[0, 1)`.
fn torus_coords(lattice: &Lattice, r: f64, x: &[f64]) -> Vec<f64> {
    lattice
        .coords(x)
        .iter()
        .map(|z| {
            let y = z / r + 0.5;
            y - y.floor()
        })
        .collect()
}

fn transport_error(h: f64) -> f64 {
    let lattice = sheared();
    let r = 1.0;
    let shape = torus_shape(&lattice, r, h);
    let len = shape.iter().product();
    let blank = PeriodicGridFunction::new(lattice.clone(), r, shape.clone(), vec![0.0; len]);
    let values: Vec<f64> = (0..len).map(|k| bump(&blank.torus_center(k))).collect();
    let data = blank.with_values(values);

    let c = [1.0, 0.5];
    let phi = FluxSpec::new(vec![linear(c[0]), linear(c[1])], [-2.0, 2.0]).unwrap();
    let config = SchemeConfig {
        flux: SchemeKind::EngquistOsher,
        ..SchemeConfig::default()
    };
    let t = 0.7;
    let mut p = to_torus(&phi, &data, &config).unwrap();
    p.advance_to(t).unwrap();
    let state = p.state();
    assert!((state.mean - data.mean).abs() < 1e-14);

    let err: f64 = (0..len)
        .map(|k| {
            let x = state.physical_center(k);
            let back: Vec<f64> = x.iter().zip(&c).map(|(xi, ci)| xi - ci * t).collect();
            (state.values[k] - bump(&torus_coords(&lattice, r, &back))).abs()
        })
        .sum();
    err / len as f64
}

#[test]
fn sheared_torus_transport_matches_traveling_wave() {
    let coarse = transport_error(1.0 / 32.0);
    let fine = transport_error(1.0 / 64.0);
    assert!(fine < 0.05, "mean error {fine}");
    assert!(coarse / fine > 1.6, "{coarse} -> {fine}");
}

#[test]
fn torus_flux_pairs_with_dual_lattice() {
    // for xi = A^{-T} k the relation xi . phi = r k . psi holds
    let lattice = sheared();
    let dual = lattice.dual();
    let r = 3.0;
    let phi = FluxSpec::new(vec![half_square(), linear(2.0)], [-2.0, 2.0]).unwrap();
    let psi = torus_flux(&phi, &lattice, r);
    for k in [[1.0, 0.0], [0.0, 1.0], [2.0, -3.0]] {
        let xi = dual.point(&k);
        for u in [-1.5, -0.2, 0.0, 0.7, 1.9] {
            let f = phi.eval(u).unwrap();
            let g = psi.eval(u).unwrap();
            let lhs = xi[0] * f[0] + xi[1] * f[1];
            let rhs = r * (k[0] * g[0] + k[1] * g[1]);
            assert!((lhs - rhs).abs() < 1e-12, "k {k:?} u {u}: {lhs} vs {rhs}");
        }
    }
}
