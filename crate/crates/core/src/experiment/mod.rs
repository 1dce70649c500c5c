//! Scenario orchestration: configuration, the experiment commands, reports and
//! their on-disk form.

mod commands;
pub mod config;
pub mod output;
mod pipeline;
pub mod report;

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use commands::{
    cmd_check_gn, cmd_counterexample, cmd_decay, cmd_lattice_cert, cmd_periodic_decay, span_subspace,
};
pub use config::ExperimentConfig;
pub use output::write_outputs;
pub use pipeline::{cmd_pipeline, cross_grid_sandwich, CrossGridSandwich};
pub use report::{fit_rate, RateFit, RunReport, SeriesRow, StateDump, Verdict};

use crate::flux::FluxError;
use crate::grid::GridError;
use crate::lattice::LatticeError;
use crate::periodization::PeriodizationError;
use crate::solver::SolverError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Periodization(#[from] PeriodizationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        source: Box<ExperimentError>,
    },
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Precondition(_) => EXIT_VERDICT,
            ExperimentError::Lattice(LatticeError::RetryCapExceeded { .. }) => EXIT_VERDICT,
            ExperimentError::Flux(FluxError::GnFails { .. } | FluxError::NoAdmissibleB { .. }) => EXIT_VERDICT,
            ExperimentError::Periodization(PeriodizationError::Flux(
                FluxError::GnFails { .. } | FluxError::NoAdmissibleB { .. },
            )) => EXIT_VERDICT,
            ExperimentError::Solver(SolverError::Cfl(_) | SolverError::OutsideTable { .. }) => EXIT_NUMERICAL,
            ExperimentError::Stage { source, .. } => source.exit_code(),
            _ => EXIT_CONFIG,
        }
    }

    pub(crate) fn at(stage: &str) -> impl FnOnce(ExperimentError) -> ExperimentError + '_ {
        move |e| ExperimentError::Stage {
            stage: stage.to_string(),
            source: Box::new(e),
        }
    }
}

/// Tags any convertible error with a stage name.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T, ExperimentError>;
}

impl<T, E: Into<ExperimentError>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &str) -> Result<T, ExperimentError> {
        self.map_err(|e| ExperimentError::at(stage)(e.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Decay,
    PeriodicDecay,
    Counterexample,
    Pipeline,
    CheckGn,
    LatticeCert,
}

impl Verb {
    pub const ALL: [Verb; 6] = [
        Verb::Decay,
        Verb::PeriodicDecay,
        Verb::Counterexample,
        Verb::Pipeline,
        Verb::CheckGn,
        Verb::LatticeCert,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verb::Decay => "decay",
            Verb::PeriodicDecay => "periodic-decay",
            Verb::Counterexample => "counterexample",
            Verb::Pipeline => "pipeline",
            Verb::CheckGn => "check-gn",
            Verb::LatticeCert => "lattice-cert",
        }
    }
}

impl FromStr for Verb {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verb::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown command {s:?}")))
    }
}

pub fn run(verb: Verb, config: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    match verb {
        Verb::Decay => cmd_decay(config),
        Verb::PeriodicDecay => cmd_periodic_decay(config),
        Verb::Counterexample => cmd_counterexample(config),
        Verb::Pipeline => cmd_pipeline(config),
        Verb::CheckGn => cmd_check_gn(config),
        Verb::LatticeCert => cmd_lattice_cert(config),
    }
}

/// Runs `verb` and writes its outputs; returns the report and the exit code.
pub fn run_and_write(
    verb: Verb,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(RunReport, i32), ExperimentError> {
    let report = run(verb, config)?;
    write_outputs(&report, out_dir)?;
    let code = if report.passed() { EXIT_OK } else { EXIT_VERDICT };
    Ok((report, code))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verbs_parse() {
        for v in Verb::ALL {
            assert_eq!(v.name().parse::<Verb>().unwrap(), v);
        }
        assert!("nope".parse::<Verb>().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ExperimentError::Config("x".into()).exit_code(), EXIT_CONFIG);
        assert_eq!(ExperimentError::Precondition("x".into()).exit_code(), EXIT_VERDICT);
        let cfl: Result<(), SolverError> = Err(SolverError::Cfl("x".into()));
        assert_eq!(cfl.stage("solve").unwrap_err().exit_code(), EXIT_NUMERICAL);
    }
}
