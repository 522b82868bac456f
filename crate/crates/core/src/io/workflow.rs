//! The `simulate`, `optimize` and `map` runs behind the CLI.
//!
//! Each writes its outputs into a directory, together with the normalized
//! configuration (`config.toml`) that reproduces it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::gauge::{GaugeObserver, GaugeRecord};
use crate::geometry::{Point, Polygon};
use crate::num::Num;
use crate::optimizer::{apply_dam, map_objective, multi_start, save_surface, Lattice, Objective, OptimizerState, SimulationObjective, SurfaceSample};
use crate::solver::{FaceDischarge, Inflow, Solver, StepReport};
use crate::terrain::{Centerline, DamSpec};
use crate::types::{FlowState, SimGrid};

use super::config::{OptimizerSection, RunConfig, Scenario};
use super::snapshot::write_snapshot;

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Volume bookkeeping of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBalance {
    pub initial: f64,
    pub final_volume: f64,
    pub injected: f64,
    pub outflow: f64,
}

impl MassBalance {
    /// `final - initial - injected + outflow`.
    pub fn error(&self) -> f64 {
        self.final_volume - self.initial - self.injected + self.outflow
    }

    /// Error relative to the largest volume involved.
    pub fn relative_error(&self) -> f64 {
        let scale = self.initial.max(self.final_volume).max(self.injected).max(self.outflow);
        if scale > 0.0 {
            self.error().abs() / scale
        } else {
            self.error().abs()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub state: FlowState,
    pub gauge: Option<GaugeRecord>,
    pub mass: MassBalance,
    pub steps: usize,
    pub max_froude: f64,
    pub files: Vec<PathBuf>,
}

impl SimulateOutcome {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let m = &self.mass;
        let _ = writeln!(s, "t_end_s = {}", Num(self.state.t));
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "max_froude = {}", Num(self.max_froude));
        if let Some(g) = &self.gauge {
            let _ = writeln!(s, "V_A_m3 = {}", Num(g.volume));
        }
        let _ = writeln!(s, "volume_initial_m3 = {}", Num(m.initial));
        let _ = writeln!(s, "volume_final_m3 = {}", Num(m.final_volume));
        let _ = writeln!(s, "injected_m3 = {}", Num(m.injected));
        let _ = writeln!(s, "outflow_m3 = {}", Num(m.outflow));
        let _ = writeln!(s, "mass_error_m3 = {}", Num(m.error()));
        let _ = writeln!(s, "mass_error_relative = {}", Num(m.relative_error()));
        s
    }
}

/// Runs the configured flood (with `[dam]` if present) and writes
/// `gauge.csv`, `mass_balance.txt`, snapshots and `config.toml` to `out`.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<SimulateOutcome> {
    prepare_dir(out)?;
    let sc = cfg.scenario()?;
    let (grid, mut state) = match &cfg.dam {
        Some(d) => apply_dam(&sc.grid, &sc.initial, d, &centerline_or_dummy(sc.centerline.clone())?)?,
        None => (sc.grid.clone(), sc.initial.clone()),
    };
    let mut files = vec![out.join("config.toml")];
    write_text(&files[0], &cfg.dump()?)?;

    let initial = state.volume(&grid);
    let mut injected = 0.0;
    let mut outflow = 0.0;
    let mut steps = 0;
    let mut max_froude: f64 = 0.0;
    let mut tally = |_: &SimGrid, _: &FlowState, r: &StepReport, _: &FaceDischarge| {
        injected += r.injected_volume;
        outflow += r.outflow_volume;
        steps += 1;
        max_froude = max_froude.max(r.max_froude);
    };
    let mut gauge = sc
        .gauge
        .as_ref()
        .map(|g| GaugeObserver::new(g, (sc.hydrograph.t_qs, sc.hydrograph.t_qe)));
    let inflow = sc.sources.as_ref().map(|s| Inflow {
        sources: s,
        hydrograph: &sc.hydrograph,
    });

    let snap_dir = out.join("snapshots");
    prepare_dir(&snap_dir)?;
    let mut stops = Vec::new();
    if let Some(every) = cfg.simulation.snapshot_interval {
        let mut k = 1.0;
        while state.t + k * every < sc.t_end {
            stops.push(state.t + k * every);
            k += 1.0;
        }
    }
    stops.push(sc.t_end);

    let snap = |k: usize, state: &FlowState| -> Result<PathBuf> {
        let p = snap_dir.join(format!("state_{k:05}.bin"));
        write_snapshot(&p, &grid, state)?;
        Ok(p)
    };
    files.push(snap(0, &state)?);
    let mut solver = Solver::new(&grid, sc.config);
    for (k, &t) in stops.iter().enumerate() {
        match &mut gauge {
            Some(g) => solver.run(&mut state, inflow, t, &mut [&mut tally, g])?,
            None => solver.run(&mut state, inflow, t, &mut [&mut tally])?,
        }
        files.push(snap(k + 1, &state)?);
    }

    let mass = MassBalance {
        initial,
        final_volume: state.volume(&grid),
        injected,
        outflow,
    };
    let gauge = gauge.map(|g| g.record);
    if let Some(g) = &gauge {
        let p = out.join("gauge.csv");
        g.save_csv(&p)?;
        files.push(p);
    }
    let outcome = SimulateOutcome {
        state,
        gauge,
        mass,
        steps,
        max_froude,
        files,
    };
    let p = out.join("mass_balance.txt");
    write_text(&p, &outcome.summary())?;
    let mut outcome = outcome;
    outcome.files.push(p);
    Ok(outcome)
}

/// Without a centerline the dam carries its own orientation (validation
/// ensures it), and any line serves as the unused fallback.
fn centerline_or_dummy(c: Option<Centerline>) -> Result<Centerline> {
    match c {
        Some(c) => Ok(c),
        None => Centerline::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]),
    }
}

fn objective_for(sc: &Scenario, dam: DamSpec) -> Result<SimulationObjective> {
    let sources = sc
        .sources
        .clone()
        .ok_or_else(|| Error::Config("optimizer: needs a source".into()))?;
    let gauge = sc.gauge.clone().ok_or_else(|| Error::Config("optimizer: needs a gauge".into()))?;
    Ok(SimulationObjective {
        grid: sc.grid.clone(),
        centerline: centerline_or_dummy(sc.centerline.clone())?,
        dam,
        initial: sc.initial.clone(),
        sources,
        hydrograph: sc.hydrograph.clone(),
        gauge,
        config: sc.config,
        t_end: sc.t_end,
    })
}

/// Cached objective for the `[optimizer]` section.
pub fn build_objective(cfg: &RunConfig) -> Result<(Objective<SimulationObjective>, OptimizerSection)> {
    let o = cfg
        .optimizer
        .clone()
        .ok_or_else(|| Error::Config("the configuration has no [optimizer] section".into()))?;
    let sc = cfg.scenario()?;
    let sim = objective_for(&sc, o.dam_template())?;
    let region = Polygon::new(
        o.region
            .as_ref()
            .ok_or_else(|| Error::Config("optimizer.region is not set".into()))?
            .iter()
            .map(|p| Point::new(p[0], p[1]))
            .collect(),
    );
    let q = o.quantization.unwrap_or([0.5 * sc.grid.dx, 0.5 * sc.grid.dy]);
    let lattice = Lattice {
        origin: Point::new(sc.grid.origin_x, sc.grid.origin_y),
        step: (q[0], q[1]),
    };
    Ok((Objective::new(sim, region, Some(lattice))?, o))
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub runs: Vec<OptimizerState>,
    pub best: usize,
    pub baseline: f64,
    pub evaluations: usize,
    pub files: Vec<PathBuf>,
}

impl OptimizeOutcome {
    pub fn best_run(&self) -> &OptimizerState {
        &self.runs[self.best]
    }

    pub fn summary(&self) -> String {
        let b = self.best_run();
        let mut s = String::new();
        let _ = writeln!(s, "x_d = {}", Num(b.r_d.x));
        let _ = writeln!(s, "y_d = {}", Num(b.r_d.y));
        let _ = writeln!(s, "V_A_m3 = {}", Num(b.v));
        let _ = writeln!(s, "baseline_V_A_m3 = {}", Num(self.baseline));
        let ratio = if self.baseline > 0.0 { b.v / self.baseline } else { f64::INFINITY };
        let _ = writeln!(s, "ratio = {}", Num(ratio));
        let _ = writeln!(s, "iterations = {}", b.k);
        let _ = writeln!(s, "termination = {:?}", b.termination);
        let _ = writeln!(s, "starts = {}", self.runs.len());
        let _ = writeln!(s, "best_start = {}", self.best);
        let _ = writeln!(s, "evaluations = {}", self.evaluations);
        s
    }
}

/// Multi-start ascent. Writes `trace.csv` for the best start,
/// `trace_<n>.csv` for every start, `summary.txt` and `config.toml`.
pub fn optimize(cfg: &RunConfig, out: &Path) -> Result<OptimizeOutcome> {
    prepare_dir(out)?;
    let (obj, o) = build_objective(cfg)?;
    let mut files = vec![out.join("config.toml")];
    write_text(&files[0], &cfg.dump()?)?;
    let baseline = obj.evaluator().baseline()?;
    let starts: Vec<Point> = o.starts.iter().map(|s| Point::new(s[0], s[1])).collect();
    let (runs, best) = multi_start(&obj, &starts, &o.probe.unwrap(), &o.stopping.unwrap())?;
    for (n, r) in runs.iter().enumerate() {
        let p = out.join(format!("trace_{n}.csv"));
        r.save_trace(&p)?;
        files.push(p);
    }
    let p = out.join("trace.csv");
    runs[best].save_trace(&p)?;
    files.push(p);
    let mut outcome = OptimizeOutcome {
        runs,
        best,
        baseline,
        evaluations: obj.evaluation_count(),
        files,
    };
    let p = out.join("summary.txt");
    write_text(&p, &outcome.summary())?;
    outcome.files.push(p);
    Ok(outcome)
}

/// Samples `V_A` over the search region on the `map_spacing` lattice and
/// writes `surface.csv` and `config.toml`.
pub fn map(cfg: &RunConfig, out: &Path) -> Result<Vec<SurfaceSample>> {
    prepare_dir(out)?;
    let (obj, o) = build_objective(cfg)?;
    write_text(&out.join("config.toml"), &cfg.dump()?)?;
    let s = o.map_spacing.unwrap();
    let region = obj.region.clone();
    let samples = map_objective(&obj, &region, (s[0], s[1]), None)?;
    save_surface(&samples, &out.join("surface.csv"))?;
    Ok(samples)
}
