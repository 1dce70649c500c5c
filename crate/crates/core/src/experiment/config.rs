//! Scenario configuration (JSON, versioned).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::flux::{FluxExpr, FluxSpec};
use crate::grid::GridFunction;
use crate::lattice::{AvoidanceParams, Lattice};
use crate::norms::NormSpec;
use crate::solver::SchemeConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Flux components and their validity range; the dimension is the number of
/// components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxConfig {
    pub components: Vec<FluxExpr>,
    pub u_range: [f64; 2],
}

impl FluxConfig {
    pub fn spec(&self) -> Result<FluxSpec, ExperimentError> {
        Ok(FluxSpec::new(self.components.clone(), self.u_range)?)
    }
}

/// Initial data. Analytic shapes are sampled at cell centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    /// `value` on the half-open box `[lo, hi)`.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default = "one")]
        value: f64,
    },
    /// `height * max(0, 1 - |x - center| / radius)`.
    Hat { center: Vec<f64>, radius: f64, height: f64 },
    /// `height * exp(-|x - center|^2 / (2 sigma^2))`, cut to zero beyond
    /// `cutoff` standard deviations.
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
        height: f64,
        #[serde(default = "four")]
        cutoff: f64,
    },
    /// `offset + amplitude * sin(2 pi wave . x)`; periodic runs only.
    Sine {
        amplitude: f64,
        #[serde(default)]
        offset: f64,
        wave: Vec<f64>,
    },
    /// Cell centres then value per row, on a uniform grid with cell width `h`.
    Csv { path: PathBuf },
    Zero { dim: usize },
}

fn one() -> f64 {
    1.0
}

fn four() -> f64 {
    4.0
}

impl InitialSpec {
    pub fn dim(&self) -> Option<usize> {
        match self {
            InitialSpec::Box { lo, .. } => Some(lo.len()),
            InitialSpec::Hat { center, .. } | InitialSpec::Gaussian { center, .. } => Some(center.len()),
            InitialSpec::Sine { wave, .. } => Some(wave.len()),
            InitialSpec::Zero { dim } => Some(*dim),
            InitialSpec::Csv { .. } => None,
        }
    }

    /// Pointwise value of an analytic shape.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            InitialSpec::Box { lo, hi, value } => {
                let inside = x.iter().zip(lo.iter().zip(hi)).all(|(&xi, (&a, &b))| xi >= a && xi < b);
                if inside {
                    *value
                } else {
                    0.0
                }
            }
            InitialSpec::Hat { center, radius, height } => {
                height * (1.0 - dist(x, center) / radius).max(0.0)
            }
            InitialSpec::Gaussian {
                center,
                sigma,
                height,
                cutoff,
            } => {
                let d = dist(x, center);
                if d > cutoff * sigma {
                    0.0
                } else {
                    height * (-d * d / (2.0 * sigma * sigma)).exp()
                }
            }
            InitialSpec::Sine { amplitude, offset, wave } => {
                let phase: f64 = x.iter().zip(wave).map(|(a, b)| a * b).sum();
                offset + amplitude * (std::f64::consts::TAU * phase).sin()
            }
            InitialSpec::Zero { .. } | InitialSpec::Csv { .. } => 0.0,
        }
    }

    /// Bounding box of the support of an analytic localized shape.
    fn support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            InitialSpec::Box { lo, hi, .. } => Some((lo.clone(), hi.clone())),
            InitialSpec::Hat { center, radius, .. } => Some(around(center, *radius)),
            InitialSpec::Gaussian {
                center, sigma, cutoff, ..
            } => Some(around(center, sigma * cutoff)),
            InitialSpec::Zero { dim } => Some((vec![0.0; *dim], vec![0.0; *dim])),
            _ => None,
        }
    }

    /// Localized data on a grid of width `h` aligned to multiples of `h`, with
    /// one empty cell around the support.
    pub fn localized(&self, h: f64) -> Result<GridFunction, ExperimentError> {
        if let InitialSpec::Csv { path } = self {
            return read_grid_csv(path);
        }
        let (lo, hi) = self.support().ok_or_else(|| {
            ExperimentError::Config("sine data has no compact support; use periodic-decay".into())
        })?;
        let first: Vec<i64> = lo.iter().map(|&a| (a / h).floor() as i64 - 1).collect();
        let last: Vec<i64> = hi.iter().map(|&b| (b / h).ceil() as i64 + 1).collect();
        let origin: Vec<f64> = first.iter().map(|&i| i as f64 * h).collect();
        let shape: Vec<usize> = first.iter().zip(&last).map(|(a, b)| (b - a) as usize).collect();
        Ok(GridFunction::from_fn(origin, h, shape, |x| self.eval(x))?)
    }
}

fn dist(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn around(c: &[f64], r: f64) -> (Vec<f64>, Vec<f64>) {
    (c.iter().map(|x| x - r).collect(), c.iter().map(|x| x + r).collect())
}

/// Reads a grid dump: one row per cell, centre coordinates then the value.
/// Axis 0 varies fastest or slowest; both orders are accepted.
pub fn read_grid_csv(path: &Path) -> Result<GridFunction, ExperimentError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        rows.push(row);
    }
    let width = rows.first().map(Vec::len).unwrap_or(0);
    if !(2..=3).contains(&width) || rows.iter().any(|r| r.len() != width) {
        return Err(ExperimentError::Config(format!(
            "{}: expected 2 or 3 columns per row",
            path.display()
        )));
    }
    let dim = width - 1;
    let mut axes: Vec<Vec<f64>> = (0..dim)
        .map(|a| {
            let mut v: Vec<f64> = rows.iter().map(|r| r[a]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let h = axes
        .iter()
        .filter(|v| v.len() > 1)
        .map(|v| v[1] - v[0])
        .fold(f64::NAN, f64::min);
    let h = if h.is_nan() {
        return Err(ExperimentError::Config(format!(
            "{}: need at least two cells along some axis",
            path.display()
        )));
    } else {
        h
    };
    let origin: Vec<f64> = axes.iter().map(|v| v[0] - 0.5 * h).collect();
    let shape: Vec<usize> = axes
        .iter_mut()
        .map(|v| ((v[v.len() - 1] - v[0]) / h).round() as usize + 1)
        .collect();
    let mut grid = GridFunction::zeros(origin, h, shape)?;
    for r in &rows {
        let idx = grid.locate(&r[..dim]);
        if idx.iter().zip(&grid.shape).any(|(&i, &n)| i < 0 || i as usize >= n) {
            return Err(ExperimentError::Config(format!("{}: irregular grid", path.display())));
        }
        let idx: Vec<usize> = idx.iter().map(|&i| i as usize).collect();
        let k = grid.flat(&idx);
        grid.values[k] = r[dim];
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub h: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { h: 1.0 / 200.0 }
    }
}

/// A checkpoint `X(t) <= max` (times the initial value when `relative`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub t: f64,
    pub max: f64,
    #[serde(default)]
    pub relative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFitConfig {
    pub t_min: f64,
    pub t_max: f64,
    /// Accepted slope interval; no verdict when absent.
    #[serde(default)]
    pub expected: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecayConfig {
    pub t_end: f64,
    /// Record every this many steps (checkpoint times are always recorded).
    pub series_every: usize,
    /// The X-norm must not grow by more than `monotone_tol` per recorded step
    /// after `monotone_after`; no verdict when `None`.
    pub monotone_after: Option<f64>,
    pub monotone_tol: f64,
    pub thresholds: Vec<Threshold>,
    pub rate_fit: Option<RateFitConfig>,
    /// Relative tolerance for the final X-norm against the Lax-Oleinik
    /// oracle (1D convex flux only); no comparison when `None`.
    pub oracle_rel_tol: Option<f64>,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            t_end: 10.0,
            series_every: 1,
            monotone_after: None,
            monotone_tol: 1e-6,
            thresholds: Vec::new(),
            rate_fit: None,
            oracle_rel_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PeriodicConfig {
    /// Lattice basis columns; the identity when absent.
    pub lattice: Option<Vec<Vec<f64>>>,
    pub r: f64,
    pub t_end: f64,
    pub series_every: usize,
    pub thresholds: Vec<Threshold>,
    /// Relative tolerance on the torus mean (relative to the mean, or to the
    /// sup of the data when the mean vanishes).
    pub mean_tol: f64,
    /// Repeat the run at twice the cell width and require the extrapolated
    /// deviation to meet the thresholds as well.
    pub richardson: bool,
    /// Half-width of the neighbourhood of `M` probed by the nondegeneracy
    /// check.
    pub ndp_delta: f64,
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        PeriodicConfig {
            lattice: None,
            r: 1.0,
            t_end: 10.0,
            series_every: 1,
            thresholds: Vec::new(),
            mean_tol: 1e-12,
            richardson: false,
            ndp_delta: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CounterexampleConfig {
    pub t_end: f64,
    pub samples: usize,
    /// Also run the scheme and report its X-norm at `t_end`.
    pub scheme_run: bool,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            t_end: 100.0,
            samples: 101,
            scheme_run: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub r_schedule: Vec<f64>,
    pub sandwich_times: Vec<f64>,
    pub t_end: f64,
    /// Series samples over `[0, t_end]` (sandwich times are added).
    pub samples: usize,
    /// The bound is checked on `[tail_start * t_end, t_end]`.
    pub tail_start: f64,
    /// Constant in the final bound; the unit-ball volume when absent.
    pub c: Option<f64>,
    /// Cross-grid tolerance in cells.
    pub sandwich_cells: usize,
    /// Allowance in value, relative to the sup of the data, for the roundoff
    /// between the box and torus solves (their flux tables differ by the
    /// coordinate scaling).
    pub sandwich_value_tol: f64,
    pub shift_cap: usize,
    pub eps_floor: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            r_schedule: vec![4.0, 8.0, 16.0],
            sandwich_times: vec![1.0, 5.0, 10.0],
            t_end: 20.0,
            samples: 200,
            tail_start: 0.8,
            c: None,
            sandwich_cells: 2,
            sandwich_value_tol: 1e-12,
            shift_cap: crate::periodization::DEFAULT_SHIFT_CAP,
            eps_floor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub plots: bool,
    /// Times at which state snapshots are written.
    pub state_times: Vec<f64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            plots: true,
            state_times: Vec::new(),
        }
    }
}

/// A lattice-certificate request: subspaces from the flux unless given as
/// explicit spanning vectors; a fixed basis is certified instead of drawn when
/// `basis` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct LatticeConfig {
    #[serde(flatten)]
    pub params: AvoidanceParams,
    pub basis: Option<Vec<Vec<f64>>>,
    pub subspaces: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub flux: FluxConfig,
    pub initial: InitialSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub norm: NormSpec,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub periodic: PeriodicConfig,
    #[serde(default)]
    pub counterexample: CounterexampleConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| ExperimentError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // relative data paths are taken from the config's directory
        if let InitialSpec::Csv { path: p } = &mut cfg.initial {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let phi = self.flux.spec()?;
        if let Some(d) = self.initial.dim() {
            if d != phi.dim {
                return bad(format!("initial data has dimension {d}, flux has {}", phi.dim));
            }
        }
        match &self.initial {
            InitialSpec::Box { lo, hi, .. } if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| a >= b) => {
                return bad("box needs lo < hi componentwise".into());
            }
            InitialSpec::Hat { radius, .. } if !(*radius > 0.0) => return bad("hat radius must be positive".into()),
            InitialSpec::Gaussian { sigma, cutoff, .. } if !(*sigma > 0.0 && *cutoff > 0.0) => {
                return bad("gaussian sigma and cutoff must be positive".into());
            }
            InitialSpec::Csv { path } if !path.exists() => {
                return bad(format!("initial data file {} does not exist", path.display()));
            }
            _ => {}
        }
        if !(self.grid.h.is_finite() && self.grid.h > 0.0) {
            return bad(format!("grid.h must be positive, got {}", self.grid.h));
        }
        if !(self.scheme.cfl > 0.0 && self.scheme.cfl <= 0.5) {
            return bad(format!("scheme.cfl must lie in (0, 0.5], got {}", self.scheme.cfl));
        }
        if self.scheme.table_points < 2 {
            return bad("scheme.table_points must be at least 2".into());
        }
        if !self.norm.window.is_valid(phi.dim) {
            return bad(format!("norm window {:?} is degenerate", self.norm.window));
        }
        if let Some(s) = self.norm.stride {
            if !(s > 0.0) {
                return bad("norm.stride must be positive".into());
            }
        }
        for (name, t) in [
            ("decay.t_end", self.decay.t_end),
            ("periodic.t_end", self.periodic.t_end),
            ("counterexample.t_end", self.counterexample.t_end),
            ("pipeline.t_end", self.pipeline.t_end),
            ("periodic.r", self.periodic.r),
        ] {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("{name} must be positive, got {t}"));
            }
        }
        if self.decay.series_every == 0 || self.periodic.series_every == 0 {
            return bad("series_every must be at least 1".into());
        }
        if self.pipeline.r_schedule.is_empty() || self.pipeline.r_schedule.iter().any(|r| !(*r > 0.0)) {
            return bad("pipeline.r_schedule must hold positive scales".into());
        }
        if !(self.pipeline.sandwich_value_tol >= 0.0) {
            return bad("pipeline.sandwich_value_tol must be nonnegative".into());
        }
        if !(0.0..=1.0).contains(&self.pipeline.tail_start) {
            return bad("pipeline.tail_start must lie in [0, 1]".into());
        }
        if let Some(cols) = &self.periodic.lattice {
            Lattice::from_columns(cols)?;
        }
        if let Some(cols) = &self.lattice.basis {
            Lattice::from_columns(cols)?;
        }
        Ok(())
    }

    /// The lattice of periodic runs.
    pub fn periodic_lattice(&self, dim: usize) -> Result<Lattice, ExperimentError> {
        Ok(match &self.periodic.lattice {
            Some(cols) => Lattice::from_columns(cols)?,
            None => Lattice::identity(dim),
        })
    }

    /// Applies command-line overrides: the seed and a grid refinement factor.
    pub fn with_overrides(mut self, seed: Option<u64>, resolution_scale: Option<f64>) -> Result<Self, ExperimentError> {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.lattice.params.seed = self.seed;
        if let Some(f) = resolution_scale {
            if !(f.is_finite() && f > 0.0) {
                return Err(ExperimentError::Config(format!("resolution scale must be positive, got {f}")));
            }
            self.grid.h /= f;
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BURGERS: &str = r#"{
        "schema_version": 1,
        "flux": {"components": [{"power": {"coeff": 0.5, "exponent": 2.0, "parity": "even"}}], "u_range": [-2, 2]},
        "initial": {"kind": "box", "lo": [0.0], "hi": [1.0]},
        "grid": {"h": 0.01}
    }"#;

    #[test]
    fn round_trip_is_stable() {
        let cfg = ExperimentConfig::from_json(BURGERS).unwrap();
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.to_json(), cfg.to_json());
    }

    #[test]
    fn invalid_configs_rejected() {
        let wrong_version = BURGERS.replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(ExperimentConfig::from_json(&wrong_version).is_err());
        let wrong_dim = BURGERS.replace("\"lo\": [0.0], \"hi\": [1.0]", "\"lo\": [0.0, 0.0], \"hi\": [1.0, 1.0]");
        assert!(ExperimentConfig::from_json(&wrong_dim).is_err());
        let missing = BURGERS.replace(
            r#"{"kind": "box", "lo": [0.0], "hi": [1.0]}"#,
            r#"{"kind": "csv", "path": "/nonexistent/u0.csv"}"#,
        );
        assert!(ExperimentConfig::from_json(&missing).is_err());
        assert!(ExperimentConfig::from_json("{").is_err());
    }

    #[test]
    fn localized_box_is_cell_aligned() {
        let cfg = ExperimentConfig::from_json(BURGERS).unwrap();
        let u = cfg.initial.localized(0.01).unwrap();
        assert!((u.l1() - 1.0).abs() < 1e-12);
        assert_eq!(u.values.iter().filter(|&&v| v == 1.0).count(), 100);
        assert_eq!(u.values[0], 0.0);
        assert_eq!(*u.values.last().unwrap(), 0.0);
    }

    #[test]
    fn overrides_apply() {
        let cfg = ExperimentConfig::from_json(BURGERS)
            .unwrap()
            .with_overrides(Some(9), Some(2.0))
            .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.lattice.params.seed, 9);
        assert_eq!(cfg.grid.h, 0.005);
    }

    #[test]
    fn csv_grid_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u0.csv");
        std::fs::write(&path, "x,y,u\n0.25,0.25,1\n0.75,0.25,2\n0.25,0.75,3\n0.75,0.75,4\n").unwrap();
        let g = read_grid_csv(&path).unwrap();
        assert_eq!(g.shape, vec![2, 2]);
        assert_eq!(g.h, 0.5);
        assert_eq!(g.values, vec![1.0, 2.0, 3.0, 4.0]);
    }
}
