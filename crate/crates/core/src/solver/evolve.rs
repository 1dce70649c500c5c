use super::scheme::{Mesh, Pieces, Region, Stepper};
use super::table::tabulate_flux;
use super::{SchemeConfig, SolverError};
use crate::flux::FluxSpec;
use crate::grid::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    /// Time after the step.
    pub t: f64,
}

/// Cells that differ from a constant background, on outflow meshes. Cells
/// whose whole stencil is background map to the background exactly, so only
/// the active box and its one-cell halo need updating.
#[derive(Debug, Clone)]
struct Track {
    background: f64,
    active: Option<Region>,
    previous: Option<Region>,
}

/// A running solution: current values, time and step count.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub stepper: Stepper,
    values: Vec<f64>,
    scratch: Vec<f64>,
    t: f64,
    steps: usize,
    track: Option<Track>,
    full: Option<Pieces>,
    partial: Option<Pieces>,
}

fn hull(a: &Option<Region>, b: &Option<Region>) -> Option<Region> {
    match (a, b) {
        (None, None) => None,
        (Some(r), None) | (None, Some(r)) => Some(r.clone()),
        (Some(r), Some(s)) => Some(
            r.iter()
                .zip(s)
                .map(|(x, y)| (x.0.min(y.0), x.1.max(y.1)))
                .collect(),
        ),
    }
}

fn bounding_region(values: &[f64], shape: &[usize], within: &Region, background: f64) -> Option<Region> {
    let n0 = shape[0];
    let dim = shape.len();
    let mut lo = vec![usize::MAX; dim];
    let mut hi = vec![0usize; dim];
    let mut any = false;
    let (a1, b1) = if dim == 2 { within[1] } else { (0, 0) };
    for i1 in a1..=b1 {
        for i0 in within[0].0..=within[0].1 {
            if values[i0 + n0 * i1] != background {
                any = true;
                lo[0] = lo[0].min(i0);
                hi[0] = hi[0].max(i0);
                if dim == 2 {
                    lo[1] = lo[1].min(i1);
                    hi[1] = hi[1].max(i1);
                }
            }
        }
    }
    any.then(|| lo.into_iter().zip(hi).collect())
}

impl Evolution {
    /// `track_active` enables the background optimisation; it applies only to
    /// outflow meshes whose boundary cells all share one value.
    pub fn new(stepper: Stepper, values: Vec<f64>, track_active: bool) -> Result<Self, SolverError> {
        if values.len() != stepper.mesh.len() {
            return Err(SolverError::Config(format!(
                "{} values for a mesh of {} cells",
                values.len(),
                stepper.mesh.len()
            )));
        }
        stepper.check_range(&values)?;
        let track = if track_active && !stepper.mesh.periodic {
            boundary_background(&values, &stepper.mesh.shape).map(|background| {
                let active = bounding_region(&values, &stepper.mesh.shape, &stepper.full_region(), background);
                Track {
                    background,
                    previous: active.clone(),
                    active,
                }
            })
        } else {
            None
        };
        let full = if stepper.dt.is_finite() {
            Some(stepper.pieces(stepper.dt)?)
        } else {
            None
        };
        Ok(Evolution {
            scratch: values.clone(),
            values,
            t: 0.0,
            steps: 0,
            track,
            full,
            partial: None,
            stepper,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// The constant value outside the active region, when tracking is on.
    pub fn background(&self) -> Option<f64> {
        self.track.as_ref().map(|t| t.background)
    }

    /// Bounding box of the cells differing from the background, when tracking
    /// is on; `None` also when every cell is background.
    pub fn active_region(&self) -> Option<Region> {
        self.track.as_ref().and_then(|t| t.active.clone())
    }

    fn region_to_update(&self) -> Option<Region> {
        let Some(track) = &self.track else {
            return Some(self.stepper.full_region());
        };
        let shape = &self.stepper.mesh.shape;
        let grown = track.active.as_ref().map(|r| {
            r.iter()
                .zip(shape)
                .map(|(&(a, b), &n)| (a.saturating_sub(1), (b + 1).min(n - 1)))
                .collect::<Region>()
        });
        hull(&grown, &track.previous)
    }

    /// One step, shortened so as not to pass `t_limit`. Returns `None` when
    /// `t_limit` has been reached.
    pub fn step(&mut self, t_limit: f64) -> Result<Option<StepInfo>, SolverError> {
        let remaining = t_limit - self.t;
        if remaining <= 0.0 {
            return Ok(None);
        }
        let Some(full) = &self.full else {
            // zero speed: the state is stationary
            self.t = t_limit;
            self.steps += 1;
            return Ok(Some(StepInfo { dt: remaining, t: t_limit }));
        };
        let (dt, last) = if remaining <= full.dt * (1.0 + 1e-9) {
            (remaining, true)
        } else {
            (full.dt, false)
        };
        let pieces = if dt == full.dt {
            full
        } else {
            if self.partial.as_ref().map(|p| p.dt) != Some(dt) {
                self.partial = Some(self.stepper.pieces(dt)?);
            }
            self.partial.as_ref().expect("partial pieces")
        };
        if let Some(region) = self.region_to_update() {
            self.stepper.step(pieces, &self.values, &mut self.scratch, &region);
            std::mem::swap(&mut self.values, &mut self.scratch);
            if let Some(track) = &mut self.track {
                track.previous = track.active.take();
                track.active = bounding_region(&self.values, &self.stepper.mesh.shape, &region, track.background);
            }
        }
        self.t = if last { t_limit } else { self.t + dt };
        self.steps += 1;
        Ok(Some(StepInfo { dt, t: self.t }))
    }

    pub fn advance_to(&mut self, t_target: f64) -> Result<(), SolverError> {
        while self.step(t_target)?.is_some() {}
        Ok(())
    }
}

/// The common value of all boundary cells, if there is one.
fn boundary_background(values: &[f64], shape: &[usize]) -> Option<f64> {
    let n0 = shape[0];
    let b = values[0];
    let ok = if shape.len() == 1 {
        values[n0 - 1] == b
    } else {
        let n1 = shape[1];
        (0..n0).all(|i| values[i] == b && values[i + n0 * (n1 - 1)] == b)
            && (0..n1).all(|j| values[n0 * j] == b && values[n0 - 1 + n0 * j] == b)
    };
    ok.then_some(b)
}

/// A localized problem on an automatically sized outflow box.
#[derive(Debug, Clone)]
pub struct BoxProblem {
    /// Grid of the computational box; `values` hold the initial data.
    pub grid: GridFunction,
    pub evolution: Evolution,
}

impl BoxProblem {
    pub fn state(&self) -> GridFunction {
        GridFunction {
            values: self.evolution.values().to_vec(),
            ..self.grid.clone()
        }
    }
}

/// Pads `u0` so that every point reachable with the tabulated speeds by
/// `t_end`, plus `margin`, lies inside the box. Padding uses whole cells, so
/// cell centres of `u0` stay cell centres of the box.
pub fn box_problem(
    phi: &FluxSpec,
    u0: &GridFunction,
    config: &SchemeConfig,
    t_end: f64,
) -> Result<BoxProblem, SolverError> {
    if phi.dim != u0.dim() {
        return Err(SolverError::Config(format!(
            "flux dimension {} but data dimension {}",
            phi.dim,
            u0.dim()
        )));
    }
    let (lo, hi) = u0.min_max();
    let range = [lo.min(0.0), hi.max(0.0)];
    let table = tabulate_flux(phi, range, config.table_points)?;
    let dim = u0.dim();
    let (slo, shi) = u0.support_box().unwrap_or_else(|| (u0.origin.clone(), u0.upper()));
    let upper = u0.upper();
    let mut pad_lo = Vec::with_capacity(dim);
    let mut pad_hi = Vec::with_capacity(dim);
    for a in 0..dim {
        let (smin, smax) = table.speed_range(a);
        let need_lo = slo[a] + smin.min(0.0) * t_end - config.margin;
        let need_hi = shi[a] + smax.max(0.0) * t_end + config.margin;
        pad_lo.push(((u0.origin[a] - need_lo) / u0.h).ceil().max(0.0) as usize + 1);
        pad_hi.push(((need_hi - upper[a]) / u0.h).ceil().max(0.0) as usize + 1);
    }
    let grid = u0.padded(&pad_lo, &pad_hi, 0.0);
    let mesh = Mesh {
        shape: grid.shape.clone(),
        spacing: vec![grid.h; dim],
        periodic: false,
    };
    let stepper = Stepper::new(table, config.flux, config.cfl, mesh)?;
    let evolution = Evolution::new(stepper, grid.values.clone(), true)?;
    Ok(BoxProblem { grid, evolution })
}
