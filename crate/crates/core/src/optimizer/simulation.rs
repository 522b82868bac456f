//! `V_A` from a full flood simulation with a dam at the probed center.

use crate::error::Result;
use crate::gauge::{GaugeLine, GaugeObserver, GaugeRecord};
use crate::geometry::Point;
use crate::solver::{Inflow, Solver, SolverConfig};
use crate::terrain::{dam_footprint, rasterize_dam, Centerline, DamSpec};
use crate::types::{FlowState, Hydrograph, SimGrid, SourceField};

use super::Evaluate;

/// Everything needed to simulate one flood with an optional dam.
#[derive(Debug, Clone)]
pub struct SimulationObjective {
    pub grid: SimGrid,
    pub centerline: Centerline,
    /// Dam length, crest and orientation; the center is set per evaluation.
    pub dam: DamSpec,
    pub initial: FlowState,
    pub sources: SourceField,
    pub hydrograph: Hydrograph,
    pub gauge: GaugeLine,
    pub config: SolverConfig,
    pub t_end: f64,
}

impl SimulationObjective {
    /// Runs the flood with `dam` (or none) and returns the gauge record over
    /// the hydrograph's window.
    pub fn run(&self, dam: Option<&DamSpec>) -> Result<(GaugeRecord, FlowState, SimGrid)> {
        let (grid, mut state) = match dam {
            Some(d) => self.dammed(d)?,
            None => (self.grid.clone(), self.initial.clone()),
        };
        let mut gauge = GaugeObserver::new(&self.gauge, (self.hydrograph.t_qs, self.hydrograph.t_qe));
        let inflow = Inflow {
            sources: &self.sources,
            hydrograph: &self.hydrograph,
        };
        let mut solver = Solver::new(&grid, self.config);
        solver.run(&mut state, Some(inflow), self.t_end, &mut [&mut gauge])?;
        Ok((gauge.record, state, grid))
    }

    /// Grid with the dam raised, and the initial state with the water that
    /// stood on the footprint removed.
    pub fn dammed(&self, dam: &DamSpec) -> Result<(SimGrid, FlowState)> {
        apply_dam(&self.grid, &self.initial, dam, &self.centerline)
    }

    /// `V_A` without any dam.
    pub fn baseline(&self) -> Result<f64> {
        Ok(self.run(None)?.0.volume)
    }
}

/// Raises `dam` into `grid`. Water on the footprint keeps its free-surface
/// level where that stays above the new crest and is removed otherwise.
pub fn apply_dam(grid: &SimGrid, state: &FlowState, dam: &DamSpec, centerline: &Centerline) -> Result<(SimGrid, FlowState)> {
    let cells = dam_footprint(grid, dam, centerline)?;
    let raised = rasterize_dam(grid, dam, centerline)?;
    let mut state = state.clone();
    for c in cells {
        let level = grid.bed[c] + state.h[c];
        let h = (level - raised.bed[c]).max(0.0);
        state.h[c] = h;
        if h == 0.0 {
            state.hu[c] = 0.0;
            state.hv[c] = 0.0;
        }
    }
    Ok((raised, state))
}

impl Evaluate for SimulationObjective {
    fn evaluate(&self, center: Point) -> Result<f64> {
        Ok(self.run(Some(&self.dam.at(center)))?.0.volume)
    }
}
