//! Randomized properties of a single scheme step on periodic meshes.

use entropy_decay::flux::{half_square, third_cube, FluxSpec};
use entropy_decay::solver::{tabulate_flux, Mesh, SchemeKind, Stepper};
use proptest::prelude::*;

fn stepper(dim: usize, n: usize, kind: SchemeKind) -> Stepper {
    let phi = match dim {
        1 => FluxSpec::new(vec![half_square()], [-2.0, 2.0]).unwrap(),
        _ => FluxSpec::new(vec![half_square(), third_cube()], [-2.0, 2.0]).unwrap(),
    };
    let table = tabulate_flux(&phi, [-1.0, 1.0], 129).unwrap();
    let h = 1.0 / n as f64;
    let mesh = Mesh {
        shape: vec![n; dim],
        spacing: vec![h; dim],
        periodic: true,
    };
    Stepper::new(table, kind, 0.45, mesh).unwrap()
}

fn apply(s: &Stepper, u: &[f64]) -> Vec<f64> {
    let pieces = s.pieces(s.dt).unwrap();
    let mut out = vec![0.0; u.len()];
    s.step(&pieces, u, &mut out, &s.full_region());
    out
}

fn kind() -> impl Strategy<Value = SchemeKind> {
    prop_oneof![Just(SchemeKind::LaxFriedrichs), Just(SchemeKind::EngquistOsher)]
}

/// `(dim, n, values)` with `n^dim` cells valued in `[-1, 1]`.
fn field() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..=2, 3usize..=12).prop_flat_map(|(dim, n)| {
        let len = n.pow(dim as u32);
        (Just(dim), Just(n), prop::collection::vec(-1.0f64..=1.0, len))
    })
}

fn shift(u: &[f64], dim: usize, n: usize, by: usize) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for (k, v) in u.iter().enumerate() {
        let (i, j) = (k % n, k / n);
        let target = if dim == 1 { (i + by) % n } else { (i + by) % n + n * j };
        out[target] = *v;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn step_is_order_preserving((dim, n, u) in field(), kind in kind(), bumps in prop::collection::vec(0.0f64..0.5, 144)) {
        let s = stepper(dim, n, kind);
        let v: Vec<f64> = u.iter().zip(&bumps).map(|(a, b)| (a + b).min(1.0)).collect();
        let (su, sv) = (apply(&s, &u), apply(&s, &v));
        for (a, b) in su.iter().zip(&sv) {
            prop_assert!(a <= b, "{a} > {b}");
        }
    }

    #[test]
    fn step_conserves_mass((dim, n, u) in field(), kind in kind()) {
        let s = stepper(dim, n, kind);
        let before: f64 = u.iter().sum();
        let after: f64 = apply(&s, &u).iter().sum();
        let scale = u.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((before - after).abs() <= 1e-12 * scale, "{before} vs {after}");
    }

    #[test]
    fn step_obeys_maximum_principle((dim, n, u) in field(), kind in kind()) {
        let s = stepper(dim, n, kind);
        let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for x in apply(&s, &u) {
            prop_assert!(lo <= x && x <= hi);
        }
    }

    #[test]
    fn step_contracts_l1((dim, n, u) in field(), kind in kind(), noise in prop::collection::vec(-0.3f64..0.3, 144)) {
        let s = stepper(dim, n, kind);
        let v: Vec<f64> = u.iter().zip(&noise).map(|(a, b)| (a + b).clamp(-1.0, 1.0)).collect();
        let d0: f64 = u.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        let d1: f64 = apply(&s, &u).iter().zip(&apply(&s, &v)).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!(d1 <= d0 * (1.0 + 1e-12) + 1e-15, "{d1} > {d0}");
    }

    #[test]
    fn step_commutes_with_periodic_shift((dim, n, u) in field(), kind in kind(), by in 1usize..12) {
        let s = stepper(dim, n, kind);
        let by = by % n;
        prop_assert_eq!(apply(&s, &shift(&u, dim, n, by)), shift(&apply(&s, &u), dim, n, by));
    }

    #[test]
    fn constants_are_fixed(dim in 1usize..=2, n in 3usize..10, c in -1.0f64..=1.0, kind in kind()) {
        let s = stepper(dim, n, kind);
        let u = vec![c; n.pow(dim as u32)];
        prop_assert_eq!(apply(&s, &u), u);
    }

    #[test]
    fn numerical_flux_is_consistent(a in -1.0f64..=1.0, kind in kind()) {
        let s = stepper(2, 4, kind);
        for axis in 0..2 {
            let g = s.numerical_flux(axis, a, a);
            let f = s.table.eval(axis, a);
            prop_assert!((g - f).abs() <= 1e-12, "axis {axis}: {g} vs {f}");
        }
    }
}
