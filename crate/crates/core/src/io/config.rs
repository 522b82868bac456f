//! TOML run configuration.
//!
//! [`load_config`] parses a file, resolves relative paths against the
//! file's directory, fills every derived default, and validates the result,
//! reporting all problems at once. The returned [`RunConfig`] is fully
//! explicit: [`RunConfig::dump`] of it reproduces the run on its own.
//!
//! ```toml
//! output_dir = "out"
//!
//! [terrain]
//! synthetic = "channel_with_branch"   # or: dem = "terrain.asc"
//!
//! [hydrograph]
//! path = "flood.csv"                  # or: [hydrograph.trapezoid]
//!
//! [gauge]
//! a = [850.0, 900.0]
//! b = [1150.0, 900.0]
//! positive_side = "left"
//!
//! [initial]
//! kind = "base_flow"
//! discharge = 100.0
//! duration = 14400.0
//!
//! [optimizer]
//! starts = [[1625.0, 400.0]]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{rasterize_gauge, GaugeLine, Side};
use crate::geometry::{Point, Polygon};
use crate::optimizer::{ProbeRule, StoppingRule};
use crate::solver::{spin_up, Boundaries, BoundaryKind, Limiter, Order, SolverConfig};
use crate::terrain::{read_dem, synth_channel_with_branch, BranchParams, Centerline, DamSpec, DemOptions};
use crate::types::{validate_grid, FlowState, Hydrograph, PhysicsParams, SimGrid, SourceField};

use super::hydrograph::read_hydrograph_csv;

type Xy = [f64; 2];

fn pt(p: Xy) -> Point {
    Point::new(p[0], p[1])
}

fn polygon(ps: &[Xy]) -> Polygon {
    Polygon::new(ps.iter().copied().map(pt).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub terrain: TerrainConfig,
    pub hydrograph: HydrographConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<GaugeConfig>,
    #[serde(default)]
    pub physics: PhysicsParams,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub simulation: SimulationSection,
    /// Dam present in `simulate` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dam: Option<DamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSection>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    ChannelWithBranch,
}

/// Exactly one of `dem` and `synthetic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dem: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticKind>,
    /// Generator parameters for `synthetic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<BranchParams>,
    /// Manning coefficient for DEM terrain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manning: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodata_elevation: Option<f64>,
    /// River axis used to orient dams; generated for synthetic terrain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centerline: Option<Vec<Xy>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapezoidSpec {
    pub base: f64,
    pub peak: f64,
    /// Rise start, peak start, peak end, fall end.
    pub times: [f64; 4],
    pub end: f64,
}

/// Exactly one of `path` and `trapezoid`. The flood window defaults to the
/// sampled span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydrographConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trapezoid: Option<TrapezoidSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_qs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_qe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub polygon: Vec<Xy>,
    #[serde(default)]
    pub injection_velocity: Xy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfig {
    pub a: Xy,
    pub b: Xy,
    #[serde(default = "default_side")]
    pub positive_side: Side,
}

fn default_side() -> Side {
    Side::Left
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_dt: f64,
    pub order: Order,
    pub limiter: Limiter,
    pub friction: bool,
    /// Defaults to the synthetic terrain's boundaries, or waterfalls all
    /// round on a DEM.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<Boundaries>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            max_dt: d.max_dt,
            order: d.order,
            limiter: d.limiter,
            friction: d.friction,
            boundaries: None,
        }
    }
}

/// State at the start of the hydrograph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    #[default]
    Dry,
    /// Still water up to `level` (m).
    LakeAtRest { level: f64 },
    /// Starting dry, a constant `discharge` from the sources for `duration`
    /// seconds.
    BaseFlow { discharge: f64, duration: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Defaults to the end of the hydrograph.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Seconds between snapshots; none writes only the final state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_interval: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_dam_length")]
    pub length_m: f64,
    #[serde(default = "default_crest")]
    pub crest_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Xy>,
    /// Ascent starting points; generated for synthetic terrain.
    #[serde(default)]
    pub starts: Vec<Xy>,
    /// Admissible dam centers; generated for synthetic terrain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Vec<Xy>>,
    /// Defaults to two cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopping: Option<StoppingRule>,
    /// Centers are snapped to this lattice before simulating; defaults to
    /// half a cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantization: Option<Xy>,
    /// Lattice spacing of `map`; defaults to one cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_spacing: Option<Xy>,
}

fn default_dam_length() -> f64 {
    300.0
}

fn default_crest() -> f64 {
    5.0
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            length_m: default_dam_length(),
            crest_m: default_crest(),
            orientation: None,
            starts: Vec::new(),
            region: None,
            probe: None,
            stopping: None,
            quantization: None,
            map_spacing: None,
        }
    }
}

impl OptimizerSection {
    pub fn dam_template(&self) -> DamSpec {
        DamSpec {
            orientation: self.orientation.map(|o| (o[0], o[1])),
            ..DamSpec::new(0.0, 0.0, self.length_m, self.crest_m)
        }
    }
}

/// Parses TOML text without resolving or validating anything.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Loads, normalizes and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        e => e,
    })?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let base = std::path::absolute(&base).map_err(|e| Error::io(&base, e))?;
    cfg.resolve_paths(&base);
    cfg.normalize()?;
    Ok(cfg)
}

impl RunConfig {
    /// Makes every relative path absolute with respect to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let Some(p) = &mut self.terrain.dem {
            fix(p);
        }
        if let Some(p) = &mut self.hydrograph.path {
            fix(p);
        }
    }

    /// Fills derived defaults and validates, collecting every violation.
    /// Reads the DEM and hydrograph files, so I/O and format errors in them
    /// surface here.
    pub fn normalize(&mut self) -> Result<()> {
        let mut errs = Vec::new();

        // terrain source
        let synth = match (&self.terrain.dem, self.terrain.synthetic) {
            (Some(_), Some(_)) => {
                errs.push("terrain: give exactly one of 'dem' and 'synthetic', not both".into());
                None
            }
            (None, None) => {
                errs.push("terrain: give exactly one of 'dem' and 'synthetic'".into());
                None
            }
            (None, Some(SyntheticKind::ChannelWithBranch)) => {
                if self.terrain.manning.is_some() || self.terrain.nodata_elevation.is_some() {
                    errs.push("terrain: 'manning' and 'nodata_elevation' apply to DEM terrain only".into());
                }
                let p = *self.terrain.params.get_or_insert_with(BranchParams::default);
                match synth_channel_with_branch(&p) {
                    Ok(t) => Some(t),
                    Err(Error::Validation(v)) => {
                        errs.extend(v);
                        None
                    }
                    Err(e) => return Err(e),
                }
            }
            (Some(_), None) => {
                if self.terrain.params.is_some() {
                    errs.push("terrain.params applies to synthetic terrain only".into());
                }
                self.terrain.manning.get_or_insert(DemOptions::default().manning);
                None
            }
        };
        let grid = match (&self.terrain.dem, &synth) {
            (_, Some(t)) => Some(t.grid.clone()),
            (Some(path), None) if errs.is_empty() => Some(read_dem(path, &self.dem_options())?.grid),
            _ => None,
        };
        if let Some(t) = &synth {
            if self.terrain.centerline.is_none() {
                self.terrain.centerline = Some(t.centerline.points.iter().map(|p| [p.x, p.y]).collect());
            }
            if self.source.is_none() {
                self.source = Some(SourceConfig {
                    polygon: t.source_region.vertices.iter().map(|p| [p.x, p.y]).collect(),
                    injection_velocity: [0.0, 0.0],
                });
            }
            if self.gauge.is_none() {
                self.gauge = Some(GaugeConfig {
                    a: [t.gauge.a.x, t.gauge.a.y],
                    b: [t.gauge.b.x, t.gauge.b.y],
                    positive_side: t.gauge.side,
                });
            }
            self.solver.boundaries.get_or_insert(t.boundaries);
        }
        self.solver.boundaries.get_or_insert(Boundaries::all(BoundaryKind::Waterfall));
        if let Some(grid) = &grid {
            errs.extend(validate_grid(grid));
        }

        // hydrograph
        let samples = match (&self.hydrograph.path, &self.hydrograph.trapezoid) {
            (Some(_), Some(_)) => {
                errs.push("hydrograph: give exactly one of 'path' and 'trapezoid', not both".into());
                None
            }
            (None, None) => {
                errs.push("hydrograph: give exactly one of 'path' and 'trapezoid'".into());
                None
            }
            (Some(p), None) => Some(read_hydrograph_csv(p)?),
            (None, Some(tz)) => Some(trapezoid_samples(tz)),
        };
        if let Some(s) = &samples {
            let t_qs = *self.hydrograph.t_qs.get_or_insert(s[0].0);
            let t_qe = *self.hydrograph.t_qe.get_or_insert(s[s.len() - 1].0);
            if let Err(e) = Hydrograph::new(s.clone(), t_qs, t_qe) {
                push_err(&mut errs, "hydrograph", e);
            }
            let end = s[s.len() - 1].0;
            let t_end = *self.simulation.t_end.get_or_insert(end);
            if !(t_end > s[0].0 && t_end <= end) {
                errs.push(format!(
                    "simulation.t_end = {t_end} must lie in ({}, {end}], the hydrograph span",
                    s[0].0
                ));
            }
            if self.source.is_none() && s.iter().any(|&(_, q)| q > 0.0) {
                errs.push("source: required when the hydrograph has non-zero discharge".into());
            }
        }
        if let Some(dt) = self.simulation.snapshot_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                errs.push(format!("simulation.snapshot_interval = {dt} (must be > 0)"));
            }
        }

        errs.extend(self.physics.validate());
        errs.extend(self.solver_config().validate());
        if let InitialCondition::BaseFlow { discharge, duration } = self.initial {
            if !(discharge >= 0.0 && discharge.is_finite() && duration >= 0.0 && duration.is_finite()) {
                errs.push("initial: base_flow discharge and duration must be finite and >= 0".into());
            }
            if self.source.is_none() {
                errs.push("initial: base_flow needs a source".into());
            }
        }
        if let InitialCondition::LakeAtRest { level } = self.initial {
            if !level.is_finite() {
                errs.push("initial.level must be finite".into());
            }
        }

        let Some(grid) = grid else {
            return Err(Error::Validation(errs));
        };

        if let Some(s) = &self.source {
            if let Err(e) = SourceField::from_polygon(&grid, &polygon(&s.polygon)) {
                push_err(&mut errs, "source.polygon", e);
            }
        }
        if let Some(g) = &self.gauge {
            if let Err(e) = rasterize_gauge(&grid, pt(g.a), pt(g.b), g.positive_side) {
                push_err(&mut errs, "gauge", e);
            }
        }
        let centerline = match &self.terrain.centerline {
            Some(c) => match Centerline::new(c.iter().copied().map(pt).collect()) {
                Ok(c) => Some(c),
                Err(e) => {
                    push_err(&mut errs, "terrain.centerline", e);
                    None
                }
            },
            None => None,
        };
        if let Some(d) = &self.dam {
            let v = d.validate();
            if v.is_empty() {
                if centerline.is_none() && d.orientation.is_none() {
                    errs.push("dam: needs an orientation or terrain.centerline".into());
                } else {
                    // an explicit orientation makes the centerline irrelevant
                    let c = match &centerline {
                        Some(c) => c.clone(),
                        None => Centerline::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)])?,
                    };
                    if let Err(e) = crate::terrain::dam_footprint(&grid, d, &c) {
                        push_err(&mut errs, "dam", e);
                    }
                }
            }
            errs.extend(v);
        }

        if let Some(o) = &mut self.optimizer {
            if let Some(t) = &synth {
                if o.region.is_none() {
                    o.region = Some(t.search_region.vertices.iter().map(|p| [p.x, p.y]).collect());
                }
                if o.starts.is_empty() {
                    let p = t.params;
                    o.starts.push([p.length - 7.5 * p.cell_size, p.channel_y - p.cell_size]);
                }
            }
            o.probe.get_or_insert(ProbeRule::for_cells(grid.dx, grid.dy));
            o.stopping.get_or_insert(StoppingRule::for_cells(grid.dx, grid.dy));
            o.quantization.get_or_insert([0.5 * grid.dx, 0.5 * grid.dy]);
            o.map_spacing.get_or_insert([grid.dx, grid.dy]);

            let tmpl = o.dam_template();
            errs.extend(tmpl.at(Point::new(0.0, 0.0)).validate());
            if centerline.is_none() && o.orientation.is_none() {
                errs.push("optimizer: needs an orientation or terrain.centerline".into());
            }
            if self.gauge.is_none() {
                errs.push("optimizer: needs a gauge".into());
            }
            if self.source.is_none() {
                errs.push("optimizer: needs a source".into());
            }
            errs.extend(o.probe.unwrap().validate());
            errs.extend(o.stopping.unwrap().validate());
            for (name, v) in [("quantization", o.quantization.unwrap()), ("map_spacing", o.map_spacing.unwrap())] {
                if !(v[0] > 0.0 && v[1] > 0.0 && v[0].is_finite() && v[1].is_finite()) {
                    errs.push(format!("optimizer.{name} = {v:?} (must be positive)"));
                }
            }
            match &o.region {
                None => errs.push("optimizer.region: required for DEM terrain".into()),
                Some(r) => {
                    let region = polygon(r);
                    if let Err(e) = region.validate() {
                        errs.push(format!("optimizer.region: {e}"));
                    } else {
                        if o.starts.is_empty() {
                            errs.push("optimizer.starts: at least one start is required".into());
                        }
                        for s in &o.starts {
                            if !region.contains(pt(*s)) {
                                errs.push(format!("optimizer.starts: ({}, {}) lies outside the region", s[0], s[1]));
                            }
                        }
                    }
                }
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn dem_options(&self) -> DemOptions {
        DemOptions {
            manning: self.terrain.manning.unwrap_or(DemOptions::default().manning),
            nodata_elevation: self.terrain.nodata_elevation,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            physics: self.physics,
            max_dt: self.solver.max_dt,
            order: self.solver.order,
            limiter: self.solver.limiter,
            boundaries: self.solver.boundaries.unwrap_or_default(),
            friction: self.solver.friction,
        }
    }

    /// The configuration as TOML.
    pub fn dump(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize configuration: {e}")))
    }

    /// Builds the grid, forcing, gauge and initial state. Expects a
    /// normalized configuration.
    pub fn scenario(&self) -> Result<Scenario> {
        let (grid, nodata) = match (&self.terrain.dem, &self.terrain.params) {
            (Some(path), _) => {
                let dem = read_dem(path, &self.dem_options())?;
                (dem.grid, Some(dem.nodata))
            }
            (None, Some(p)) => (synth_channel_with_branch(p)?.grid, None),
            (None, None) => return Err(Error::Config("terrain is not set".into())),
        };
        let samples = match (&self.hydrograph.path, &self.hydrograph.trapezoid) {
            (Some(p), _) => read_hydrograph_csv(p)?,
            (None, Some(tz)) => trapezoid_samples(tz),
            (None, None) => return Err(Error::Config("hydrograph is not set".into())),
        };
        let t_qs = self.hydrograph.t_qs.unwrap_or(samples[0].0);
        let t_qe = self.hydrograph.t_qe.unwrap_or(samples[samples.len() - 1].0);
        let hydrograph = Hydrograph::new(samples, t_qs, t_qe)?;
        let sources = match &self.source {
            Some(s) => Some(
                SourceField::from_polygon(&grid, &polygon(&s.polygon))?
                    .with_injection_velocity(s.injection_velocity[0], s.injection_velocity[1]),
            ),
            None => None,
        };
        let gauge = match &self.gauge {
            Some(g) => Some(rasterize_gauge(&grid, pt(g.a), pt(g.b), g.positive_side)?),
            None => None,
        };
        let centerline = match &self.terrain.centerline {
            Some(c) => Some(Centerline::new(c.iter().copied().map(pt).collect())?),
            None => None,
        };
        let config = self.solver_config();
        let t0 = hydrograph.start();
        let initial = match self.initial {
            InitialCondition::Dry => FlowState::dry(&grid, t0),
            InitialCondition::LakeAtRest { level } => FlowState {
                t: t0,
                ..FlowState::lake_at_rest(&grid, level)
            },
            InitialCondition::BaseFlow { discharge, duration } => {
                let src = sources
                    .as_ref()
                    .ok_or_else(|| Error::Config("initial: base_flow needs a source".into()))?;
                spin_up(&grid, src, discharge, duration, &config, t0)?
            }
        };
        Ok(Scenario {
            t_end: self.simulation.t_end.unwrap_or(hydrograph.end()),
            grid,
            nodata,
            hydrograph,
            sources,
            gauge,
            centerline,
            config,
            initial,
        })
    }
}

fn trapezoid_samples(tz: &TrapezoidSpec) -> Vec<(f64, f64)> {
    let mut s = vec![
        (0.0, tz.base),
        (tz.times[0], tz.base),
        (tz.times[1], tz.peak),
        (tz.times[2], tz.peak),
        (tz.times[3], tz.base),
        (tz.end, tz.base),
    ];
    s.dedup_by(|b, a| b.0 == a.0);
    s
}

fn push_err(errs: &mut Vec<String>, ctx: &str, e: Error) {
    match e {
        Error::Validation(v) => errs.extend(v.into_iter().map(|m| format!("{ctx}: {m}"))),
        e => errs.push(format!("{ctx}: {e}")),
    }
}

/// Everything a run needs, built from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: SimGrid,
    /// NODATA mask of a DEM grid.
    pub nodata: Option<Vec<bool>>,
    pub hydrograph: Hydrograph,
    pub sources: Option<SourceField>,
    pub gauge: Option<GaugeLine>,
    pub centerline: Option<Centerline>,
    pub config: SolverConfig,
    pub initial: FlowState,
    pub t_end: f64,
}
