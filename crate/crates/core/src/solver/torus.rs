use super::evolve::Evolution;
use super::scheme::{Mesh, Stepper};
use super::table::tabulate_flux;
use super::{SchemeConfig, SolverError};
use crate::flux::FluxSpec;
use crate::lattice::Lattice;
use crate::periodization::PeriodicGridFunction;

/// An `rL`-periodic problem solved on the unit torus `[0,1)^n`. With
/// `x = r A (y - 1/2)` the equation keeps its form, with flux
/// `psi = (1/r) A^{-1} phi`, and time is unchanged.
#[derive(Debug, Clone)]
pub struct TorusProblem {
    pub psi: FluxSpec,
    pub initial: PeriodicGridFunction,
    pub evolution: Evolution,
}

impl TorusProblem {
    pub fn lattice(&self) -> &Lattice {
        &self.initial.lattice
    }

    pub fn state(&self) -> PeriodicGridFunction {
        self.initial.with_values(self.evolution.values().to_vec())
    }

    pub fn t(&self) -> f64 {
        self.evolution.t()
    }

    pub fn advance_to(&mut self, t: f64) -> Result<(), SolverError> {
        self.evolution.advance_to(t)
    }
}

/// The torus flux `psi = (1/r) A^{-1} phi`.
pub fn torus_flux(phi: &FluxSpec, lattice: &Lattice, r: f64) -> FluxSpec {
    let inv = lattice.inverse();
    let n = lattice.dim();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|k| (0..n).map(|j| inv[(k, j)] / r).collect())
        .collect();
    phi.linear_map(&rows)
}

/// Sets up the periodic evolution of `data` under `phi`.
pub fn to_torus(
    phi: &FluxSpec,
    data: &PeriodicGridFunction,
    config: &SchemeConfig,
) -> Result<TorusProblem, SolverError> {
    if phi.dim != data.dim() {
        return Err(SolverError::Config(format!(
            "flux dimension {} but torus dimension {}",
            phi.dim,
            data.dim()
        )));
    }
    let psi = torus_flux(phi, &data.lattice, data.r);
    let (lo, hi) = data.min_max();
    let table = tabulate_flux(&psi, [lo, hi], config.table_points)?;
    let mesh = Mesh {
        shape: data.shape.clone(),
        spacing: data.shape.iter().map(|&n| 1.0 / n as f64).collect(),
        periodic: true,
    };
    let stepper = Stepper::new(table, config.flux, config.cfl, mesh)?;
    let evolution = Evolution::new(stepper, data.values.clone(), false)?;
    Ok(TorusProblem {
        psi,
        initial: data.clone(),
        evolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::linear;
    use crate::solver::SchemeKind;

    #[test]
    fn flux_transform_matches_inverse() {
        let l = Lattice::from_columns(&[vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let phi = FluxSpec::new(vec![linear(1.0), linear(3.0)], [-1.0, 1.0]).unwrap();
        let psi = torus_flux(&phi, &l, 2.0);
        // A^{-1} = [[1/2, -1/2], [0, 1]]
        let v = psi.eval(1.0).unwrap();
        assert!((v[0] - 0.5 * (0.5 - 1.5)).abs() < 1e-15);
        assert!((v[1] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn periodic_transport_returns_after_one_period() {
        let n = 40;
        let values: Vec<f64> = (0..n).map(|i| if i < 10 { 1.0 } else { 0.0 }).collect();
        let data = PeriodicGridFunction::new(Lattice::identity(1), 4.0, vec![n], values.clone());
        // speed 1 on a period of length 4
        let phi = FluxSpec::new(vec![linear(1.0)], [-1.0, 2.0]).unwrap();
        let cfg = SchemeConfig {
            flux: SchemeKind::EngquistOsher,
            cfl: 0.5,
            ..SchemeConfig::default()
        };
        let mut p = to_torus(&phi, &data, &cfg).unwrap();
        p.advance_to(4.0).unwrap();
        let s = p.state();
        assert!((s.mean - data.mean).abs() < 1e-14);
        let l1: f64 = s.values.iter().zip(&values).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;
        assert!(l1 < 0.2, "{l1}");
        let (lo, hi) = s.min_max();
        assert!(lo >= 0.0 && hi <= 1.0);
    }

    #[test]
    fn burgers_sawtooth_mean_is_conserved() {
        let n = 64;
        let values: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) / n as f64 * std::f64::consts::TAU).sin()).collect();
        let data = PeriodicGridFunction::new(Lattice::identity(1), 1.0, vec![n], values);
        let mut p = to_torus(&FluxSpec::burgers(2.0), &data, &SchemeConfig::default()).unwrap();
        p.advance_to(2.0).unwrap();
        let s = p.state();
        assert!(s.mean.abs() < 1e-13);
        // amplitude decays like 1/(2t) per unit period after the shock forms
        assert!(s.min_max().1 < 0.3);
    }
}
