//! Monotone finite-volume evolution on boxes (outflow) and lattice tori, plus
//! the oracles and discrete checks used to validate it.

mod checks;
mod evolve;
mod oracle;
mod scheme;
mod table;
mod torus;

pub use checks::{compare_runs, entropy_residual, CompareVerdict};
pub use evolve::{box_problem, BoxProblem, Evolution, StepInfo};
pub use oracle::{hopf_lax_1d, traveling_wave, HopfLax};
pub use scheme::{Mesh, Pieces, Region, Stepper};
pub use table::{tabulate_flux, FluxTable, MonotonePl, NodeIndex, PlValues};
pub use torus::{to_torus, torus_flux, TorusProblem};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("CFL violation: {0}")]
    Cfl(String),
    #[error("value {value} in cell {cell} left the tabulated range [{lo}, {hi}]")]
    OutsideTable { cell: usize, value: f64, lo: f64, hi: f64 },
    #[error("table range [{lo}, {hi}] is not inside the flux range {valid:?}")]
    TableRange { lo: f64, hi: f64, valid: [f64; 2] },
    #[error("flux table is not convex")]
    NotConvex,
    #[error("invalid solver input: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    #[default]
    LaxFriedrichs,
    EngquistOsher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeConfig {
    pub flux: SchemeKind,
    pub cfl: f64,
    /// Uniform table nodes across the data range (grammar breakpoints are
    /// added on top).
    pub table_points: usize,
    /// Extra distance kept between the domain boundary and the region the
    /// solution can reach.
    pub margin: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            flux: SchemeKind::LaxFriedrichs,
            cfl: 0.45,
            table_points: 1025,
            margin: 2.0,
        }
    }
}
