//! Explicit finite-volume solver for the depth-averaged shallow-water
//! equations.
//!
//! Each step advances the hyperbolic part with HLL fluxes (the exact Godunov
//! flux where one side is dry) on hydrostatically reconstructed face states
//! (first order, or MUSCL + Heun for second order), then applies friction,
//! Coriolis rotation and hydrograph injection as separate substeps.

mod flux;
mod physics;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FlowState, Hydrograph, PhysicsParams, SimGrid, SourceField};

use flux::Workspace;
pub use physics::{apply_coriolis, apply_friction, apply_sources, friction_force, stable_dt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limiter {
    Minmod,
    VanLeer,
    MonotonizedCentral,
}

/// Treatment of one domain edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Reflective, impermeable.
    Wall,
    /// Free outflow over the edge onto a bottomless apron; nothing flows in.
    Waterfall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Boundaries {
    pub west: BoundaryKind,
    pub east: BoundaryKind,
    pub south: BoundaryKind,
    pub north: BoundaryKind,
}

impl Boundaries {
    pub const fn all(kind: BoundaryKind) -> Self {
        Self {
            west: kind,
            east: kind,
            south: kind,
            north: kind,
        }
    }
}

impl Default for Boundaries {
    fn default() -> Self {
        Self::all(BoundaryKind::Waterfall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub physics: PhysicsParams,
    pub max_dt: f64,
    pub order: Order,
    pub limiter: Limiter,
    pub boundaries: Boundaries,
    /// Bottom friction on or off; off gives the frictionless benchmarks.
    pub friction: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            physics: PhysicsParams::default(),
            max_dt: 60.0,
            order: Order::Second,
            limiter: Limiter::VanLeer,
            boundaries: Boundaries::default(),
            friction: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut out = self.physics.validate();
        if !(self.max_dt > 0.0 && self.max_dt.is_finite()) {
            out.push(format!("solver.max_dt = {} (must be > 0)", self.max_dt));
        }
        out
    }
}

/// Summary of one solver step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    /// Time at the start of the step; the step covers `[t_start, t_start + dt_used]`.
    pub t_start: f64,
    pub dt_used: f64,
    pub max_froude: f64,
    pub wet_cell_count: usize,
    pub injected_volume: f64,
    pub outflow_volume: f64,
}

/// Hydrograph inflow: where and how much.
#[derive(Debug, Clone, Copy)]
pub struct Inflow<'a> {
    pub sources: &'a SourceField,
    pub hydrograph: &'a Hydrograph,
}

/// Volume rate through every face during the last step (m³/s, time
/// averaged over the step, positive toward +x or +y).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceDischarge {
    pub nx: usize,
    pub ny: usize,
    /// `(nx + 1) * ny` values; face `fi + j * (nx + 1)` lies west of cell `fi`.
    pub x: Vec<f64>,
    /// `nx * (ny + 1)` values; face `i + fj * nx` lies south of cell row `fj`.
    pub y: Vec<f64>,
}

impl FaceDischarge {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            x: vec![0.0; (nx + 1) * ny],
            y: vec![0.0; nx * (ny + 1)],
        }
    }

    /// Discharge through the x-face west of cell `(fi, j)`.
    pub fn x_face(&self, fi: usize, j: usize) -> f64 {
        self.x[fi + j * (self.nx + 1)]
    }

    /// Discharge through the y-face south of cell `(i, fj)`.
    pub fn y_face(&self, i: usize, fj: usize) -> f64 {
        self.y[i + fj * self.nx]
    }
}

/// Numerical flux across one face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFlux {
    /// Flux of (h, hu, hv) per unit face length.
    pub flux: [f64; 3],
    /// Hydrostatic corrections to the normal-momentum flux as seen by the
    /// low-index and high-index neighbor.
    pub correction: (f64, f64),
}

/// Face fluxes of a state together with the cell-centered bed terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Fluxes {
    pub nx: usize,
    pub ny: usize,
    pub x: Vec<FaceFlux>,
    pub y: Vec<FaceFlux>,
    pub bed_source: Vec<(f64, f64)>,
    pub(crate) rates: Vec<[f64; 3]>,
}

impl Fluxes {
    /// Time derivative of (h, hu, hv) per cell implied by these fluxes.
    pub fn net_update(&self) -> &[[f64; 3]] {
        &self.rates
    }
}

/// Face fluxes of the hyperbolic part for `state`.
pub fn compute_fluxes(grid: &SimGrid, state: &FlowState, config: &SolverConfig) -> Result<Fluxes> {
    check_finite(grid, state)?;
    let mut ws = Workspace::new(grid, &config.boundaries);
    ws.load(&state.h, &state.hu, &state.hv, &config.boundaries);
    let p = &config.physics;
    ws.compute(grid, p.g, p.h_dry, config.order, config.limiter, &config.boundaries);
    let pack = |f: &[[f64; 3]], c: &[(f64, f64)]| {
        f.iter()
            .zip(c)
            .map(|(&flux, &correction)| FaceFlux { flux, correction })
            .collect::<Vec<_>>()
    };
    let mut rates = vec![[0.0; 3]; grid.len()];
    for (j, row) in rates.chunks_mut(grid.nx).enumerate() {
        ws.row_rates(grid, j, row);
    }
    Ok(Fluxes {
        nx: grid.nx,
        ny: grid.ny,
        x: pack(&ws.fx, &ws.fx_corr),
        y: pack(&ws.fy, &ws.fy_corr),
        bed_source: ws.src.clone(),
        rates,
    })
}

fn check_finite(grid: &SimGrid, state: &FlowState) -> Result<()> {
    for c in 0..state.h.len() {
        if !(state.h[c].is_finite() && state.hu[c].is_finite() && state.hv[c].is_finite()) {
            return Err(Error::Numeric {
                i: c % grid.nx,
                j: c / grid.nx,
                message: "non-finite state".into(),
            });
        }
    }
    Ok(())
}

/// Reusable stepper bound to one grid and configuration.
#[derive(Debug, Clone)]
pub struct Solver<'g> {
    grid: &'g SimGrid,
    config: SolverConfig,
    ws: Workspace,
    stage: FlowState,
    second: FlowState,
    faces: FaceDischarge,
    rates: Vec<[f64; 3]>,
}

impl<'g> Solver<'g> {
    pub fn new(grid: &'g SimGrid, config: SolverConfig) -> Self {
        Self {
            grid,
            config,
            ws: Workspace::new(grid, &config.boundaries),
            stage: FlowState::dry(grid, 0.0),
            second: FlowState::dry(grid, 0.0),
            faces: FaceDischarge::zeros(grid.nx, grid.ny),
            rates: Vec::new(),
        }
    }

    pub fn grid(&self) -> &SimGrid {
        self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Face discharges averaged over the most recent step.
    pub fn face_discharge(&self) -> &FaceDischarge {
        &self.faces
    }

    /// One forward-Euler stage of the hyperbolic part: `out = in + dt L(in)`.
    /// Adds the stage's face discharges to `self.faces` with weight `weight`
    /// and returns the boundary outflow volume.
    fn euler_stage(&mut self, input: &FlowState, out: &mut FlowState, dt: f64, weight: f64) -> f64 {
        let grid = self.grid;
        let cfg = &self.config;
        let p = &cfg.physics;
        self.ws.load(&input.h, &input.hu, &input.hv, &cfg.boundaries);
        self.ws.compute(grid, p.g, p.h_dry, cfg.order, cfg.limiter, &cfg.boundaries);
        self.ws.limit_outflow(grid, &input.h, dt);
        let (nx, ny) = (grid.nx, grid.ny);
        let mut rates = std::mem::take(&mut self.rates);
        rates.resize(nx, [0.0; 3]);
        for j in 0..ny {
            self.ws.row_rates(grid, j, &mut rates);
            for (i, r) in rates.iter().enumerate() {
                let c = i + j * nx;
                let h = input.h[c] + dt * r[0];
                if h <= 0.0 {
                    out.h[c] = 0.0;
                    out.hu[c] = 0.0;
                    out.hv[c] = 0.0;
                    continue;
                }
                let mut hu = input.hu[c] + dt * r[1];
                let mut hv = input.hv[c] + dt * r[2];
                if h < p.h_dry {
                    hu = h * flux::velocity(h, hu, p.h_dry);
                    hv = h * flux::velocity(h, hv, p.h_dry);
                }
                out.h[c] = h;
                out.hu[c] = hu;
                out.hv[c] = hv;
            }
        }
        self.rates = rates;
        for (acc, f) in self.faces.x.iter_mut().zip(&self.ws.fx) {
            *acc += weight * f[0] * grid.dy;
        }
        for (acc, f) in self.faces.y.iter_mut().zip(&self.ws.fy) {
            *acc += weight * f[0] * grid.dx;
        }
        self.ws.boundary_outflow(grid) * dt
    }

    /// Advances `state` by one step of at most `dt_cap` seconds.
    pub fn step_capped(&mut self, state: &mut FlowState, inflow: Option<Inflow<'_>>, dt_cap: f64) -> Result<StepReport> {
        let grid = self.grid;
        let dt = stable_dt(grid, state, &self.config).min(dt_cap);
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("non-positive time step {dt}")));
        }
        let t0 = state.t;
        self.faces.x.iter_mut().for_each(|x| *x = 0.0);
        self.faces.y.iter_mut().for_each(|x| *x = 0.0);

        let mut stage = std::mem::replace(&mut self.stage, detached());
        let outflow = match self.config.order {
            Order::First => {
                let out = self.euler_stage(state, &mut stage, dt, 1.0);
                std::mem::swap(state, &mut stage);
                out
            }
            Order::Second => {
                // Heun: U1 = U0 + dt L(U0); U2 = U1 + dt L(U1); U = (U0 + U2) / 2
                let out1 = self.euler_stage(state, &mut stage, dt, 0.5);
                let mut second = std::mem::replace(&mut self.second, detached());
                let out2 = self.euler_stage(&stage, &mut second, dt, 0.5);
                let eps = self.config.physics.h_dry;
                for c in 0..state.h.len() {
                    let h = 0.5 * (state.h[c] + second.h[c]);
                    if h <= 0.0 {
                        state.h[c] = 0.0;
                        state.hu[c] = 0.0;
                        state.hv[c] = 0.0;
                        continue;
                    }
                    let mut hu = 0.5 * (state.hu[c] + second.hu[c]);
                    let mut hv = 0.5 * (state.hv[c] + second.hv[c]);
                    if h < eps {
                        hu = h * flux::velocity(h, hu, eps);
                        hv = h * flux::velocity(h, hv, eps);
                    }
                    state.h[c] = h;
                    state.hu[c] = hu;
                    state.hv[c] = hv;
                }
                self.second = second;
                0.5 * (out1 + out2)
            }
        };
        self.stage = stage;

        let p = self.config.physics;
        if self.config.friction {
            apply_friction(state, grid, dt, p.g);
        }
        apply_coriolis(state, dt, p.omega_e, p.latitude_deg);
        let injected = match inflow {
            Some(inflow) => apply_sources(state, grid, inflow.sources, inflow.hydrograph, t0, dt)?,
            None => 0.0,
        };
        state.t = t0 + dt;

        let mut report = StepReport {
            t_start: t0,
            dt_used: dt,
            injected_volume: injected,
            outflow_volume: outflow.max(0.0),
            ..Default::default()
        };
        for c in 0..state.h.len() {
            let (h, hu, hv) = (state.h[c], state.hu[c], state.hv[c]);
            if !(h.is_finite() && hu.is_finite() && hv.is_finite()) {
                return Err(Error::Numeric {
                    i: c % grid.nx,
                    j: c / grid.nx,
                    message: format!("non-finite state after step at t = {}", state.t),
                });
            }
            if h > p.h_dry {
                report.wet_cell_count += 1;
                let fr = (hu * hu + hv * hv).sqrt() / h / (p.g * h).sqrt();
                report.max_froude = report.max_froude.max(fr);
            }
        }
        Ok(report)
    }

    /// One step of size [`stable_dt`].
    pub fn step(&mut self, state: &mut FlowState, inflow: Option<Inflow<'_>>) -> Result<StepReport> {
        self.step_capped(state, inflow, f64::INFINITY)
    }

    /// Steps until `t_end`, landing on it exactly; observers see every step.
    pub fn run(
        &mut self,
        state: &mut FlowState,
        inflow: Option<Inflow<'_>>,
        t_end: f64,
        observers: &mut [&mut dyn Observer],
    ) -> Result<()> {
        if !(t_end >= state.t) {
            return Err(Error::Domain(format!(
                "t_end = {t_end} precedes the state time {}",
                state.t
            )));
        }
        while state.t < t_end {
            let remaining = t_end - state.t;
            let report = self.step_capped(state, inflow, remaining)?;
            if report.dt_used >= remaining {
                state.t = t_end;
            }
            for obs in observers.iter_mut() {
                obs.observe(self.grid, state, &report, &self.faces);
            }
        }
        Ok(())
    }
}

/// Placeholder left behind while a scratch state is borrowed out.
fn detached() -> FlowState {
    FlowState {
        h: Vec::new(),
        hu: Vec::new(),
        hv: Vec::new(),
        t: 0.0,
    }
}

/// Read-only callback invoked after every solver step.
pub trait Observer {
    fn observe(&mut self, grid: &SimGrid, state: &FlowState, report: &StepReport, faces: &FaceDischarge);
}

impl<F> Observer for F
where
    F: FnMut(&SimGrid, &FlowState, &StepReport, &FaceDischarge),
{
    fn observe(&mut self, grid: &SimGrid, state: &FlowState, report: &StepReport, faces: &FaceDischarge) {
        self(grid, state, report, faces)
    }
}

/// One step on a copy of `state`.
pub fn step(
    grid: &SimGrid,
    state: &FlowState,
    inflow: Option<Inflow<'_>>,
    config: &SolverConfig,
) -> Result<(FlowState, StepReport)> {
    check_finite(grid, state)?;
    let mut next = state.clone();
    let report = Solver::new(grid, *config).step(&mut next, inflow)?;
    Ok((next, report))
}

/// Runs from `initial` to `t_end`.
pub fn run(
    grid: &SimGrid,
    initial: &FlowState,
    inflow: Option<Inflow<'_>>,
    config: &SolverConfig,
    t_end: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<FlowState> {
    check_finite(grid, initial)?;
    let mut state = initial.clone();
    Solver::new(grid, *config).run(&mut state, inflow, t_end, observers)?;
    Ok(state)
}

/// Steady-ish base flow: starting dry, injects a constant discharge `q`
/// for `duration` seconds, then stamps the result with time `t0`.
pub fn spin_up(
    grid: &SimGrid,
    sources: &SourceField,
    q: f64,
    duration: f64,
    config: &SolverConfig,
    t0: f64,
) -> Result<FlowState> {
    let hg = Hydrograph::constant(q, 0.0, duration)?;
    let inflow = Inflow {
        sources,
        hydrograph: &hg,
    };
    let mut state = run(grid, &FlowState::dry(grid, 0.0), Some(inflow), config, duration, &mut [])?;
    state.t = t0;
    Ok(state)
}

#[cfg(test)]
mod tests;
