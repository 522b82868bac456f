//! Dam placement by gradient ascent on `V_A(x_d, y_d)`.
//!
//! The objective is a black box (usually a full flood simulation) wrapped
//! in [`Objective`], which snaps centers to a lattice and caches values so
//! repeated probes cost nothing. [`gradient`] takes forward differences,
//! [`ascend`] follows them with a backtracking line search, and
//! [`map_objective`] samples the surface on a lattice for global context.

mod simulation;

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};
use crate::num::Num;

pub use simulation::{apply_dam, SimulationObjective};

/// Anything that maps a dam center to an objective value.
pub trait Evaluate: Sync {
    fn evaluate(&self, center: Point) -> Result<f64>;
}

impl<F> Evaluate for F
where
    F: Fn(Point) -> Result<f64> + Sync,
{
    fn evaluate(&self, center: Point) -> Result<f64> {
        self(center)
    }
}

/// Regular lattice `origin + (i sx, j sy)` used to quantize centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub origin: Point,
    pub step: (f64, f64),
}

impl Lattice {
    pub fn index(&self, p: Point) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.step.0).round() as i64,
            ((p.y - self.origin.y) / self.step.1).round() as i64,
        )
    }

    pub fn point(&self, (i, j): (i64, i64)) -> Point {
        Point::new(
            self.origin.x + i as f64 * self.step.0,
            self.origin.y + j as f64 * self.step.1,
        )
    }

    pub fn snap(&self, p: Point) -> Point {
        self.point(self.index(p))
    }
}

/// Cached, region-checked objective.
pub struct Objective<E> {
    evaluator: E,
    pub region: Polygon,
    /// Quantization lattice; `None` evaluates centers exactly.
    pub lattice: Option<Lattice>,
    cache: Mutex<HashMap<(i64, i64), f64>>,
    evaluations: AtomicUsize,
}

impl<E: Evaluate> Objective<E> {
    pub fn new(evaluator: E, region: Polygon, lattice: Option<Lattice>) -> Result<Self> {
        region.validate().map_err(|e| Error::Geometry(format!("search region: {e}")))?;
        Ok(Self {
            evaluator,
            region,
            lattice,
            cache: Mutex::new(HashMap::new()),
            evaluations: AtomicUsize::new(0),
        })
    }

    pub fn evaluator(&self) -> &E {
        &self.evaluator
    }

    fn key(&self, p: Point) -> ((i64, i64), Point) {
        match &self.lattice {
            Some(l) => {
                let k = l.index(p);
                (k, l.point(k))
            }
            None => ((p.x.to_bits() as i64, p.y.to_bits() as i64), p),
        }
    }

    /// `V_A` at `center` (after snapping). Centers outside the region are a
    /// domain error; failures of the evaluator are wrapped with the center.
    pub fn evaluate(&self, center: Point) -> Result<f64> {
        if !center.is_finite() || !self.region.contains(center) {
            return Err(Error::Domain(format!(
                "center ({}, {}) lies outside the search region",
                center.x, center.y
            )));
        }
        let (key, snapped) = self.key(center);
        if let Some(&v) = self.cache.lock().unwrap().get(&key) {
            return Ok(v);
        }
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let v = self.evaluator.evaluate(snapped).map_err(|e| Error::Evaluation {
            x: snapped.x,
            y: snapped.y,
            source: Box::new(e),
        })?;
        // concurrent misses on one key compute the same value; last write wins
        self.cache.lock().unwrap().insert(key, v);
        Ok(v)
    }

    /// Number of evaluator calls so far (cache misses).
    pub fn evaluation_count(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn is_cached(&self, center: Point) -> bool {
        self.cache.lock().unwrap().contains_key(&self.key(center).0)
    }
}

/// Finite-difference probe offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeRule {
    pub delta_x: f64,
    pub delta_y: f64,
}

impl ProbeRule {
    /// Two cells in each direction.
    pub fn for_cells(dx: f64, dy: f64) -> Self {
        Self {
            delta_x: 2.0 * dx,
            delta_y: 2.0 * dy,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.delta_x > 0.0 && self.delta_x.is_finite()) {
            out.push(format!("probe.delta_x = {} (must be > 0)", self.delta_x));
        }
        if !(self.delta_y > 0.0 && self.delta_y.is_finite()) {
            out.push(format!("probe.delta_y = {} (must be > 0)", self.delta_y));
        }
        out
    }
}

/// One axis of the difference quotient: forward, or backward when the
/// forward probe leaves the region.
fn axis_difference<E: Evaluate>(obj: &Objective<E>, center: Point, base: f64, step: Point, delta: f64) -> Result<f64> {
    let fwd = center.add(step);
    if obj.region.contains(fwd) {
        return Ok((obj.evaluate(fwd)? - base) / delta);
    }
    let back = center.sub(step);
    if obj.region.contains(back) {
        return Ok((base - obj.evaluate(back)?) / delta);
    }
    Err(Error::Domain(format!(
        "search region is narrower than the probe offset {delta} around ({}, {})",
        center.x, center.y
    )))
}

/// Forward-difference gradient `([V(x+δx, y) - V(x, y)] / δx, [V(x, y+δy) -
/// V(x, y)] / δy)`. The two probes run in parallel.
pub fn gradient<E: Evaluate>(obj: &Objective<E>, center: Point, probe: &ProbeRule) -> Result<(f64, f64)> {
    let base = obj.evaluate(center)?;
    let (gx, gy) = rayon::join(
        || axis_difference(obj, center, base, Point::new(probe.delta_x, 0.0), probe.delta_x),
        || axis_difference(obj, center, base, Point::new(0.0, probe.delta_y), probe.delta_y),
    );
    Ok((gx?, gy?))
}

/// When to stop ascending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingRule {
    /// Stop when the gradient norm falls below this (objective units per meter).
    pub tol: f64,
    pub k_max: usize,
    /// Length of the first trial step of each line search, meters.
    pub initial_step: f64,
    /// The line search gives up once the trial step is shorter than this.
    pub min_step: f64,
    /// Step shrink factor of the line search.
    pub shrink: f64,
}

impl StoppingRule {
    /// Defaults for a grid with cells `dx` by `dy`: tolerance of one unit per
    /// cell size, first trial step of about four cells, and a minimum step
    /// of half a cell (the quantization of the objective).
    pub fn for_cells(dx: f64, dy: f64) -> Self {
        let cell = dx.max(dy);
        Self {
            tol: 1.0 / cell,
            k_max: 50,
            initial_step: 4.0 * cell,
            min_step: 0.5 * dx.min(dy),
            shrink: 0.5,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.tol >= 0.0) {
            out.push(format!("optimizer.tol = {} (must be >= 0)", self.tol));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            out.push(format!("optimizer.initial_step = {} (must be > 0)", self.initial_step));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.initial_step) {
            out.push(format!("optimizer.min_step = {} (must be in (0, initial_step])", self.min_step));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            out.push(format!("optimizer.shrink = {} (must be in (0, 1))", self.shrink));
        }
        out
    }
}

/// Why [`ascend`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    SmallGradient,
    LineSearchFailed,
    MaxIterations,
}

/// One accepted iterate. `lambda` is the step that produced it (zero for
/// the start), `grad` the gradient evaluated at it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iterate {
    pub k: usize,
    pub r: Point,
    pub v: f64,
    pub grad: (f64, f64),
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub k: usize,
    pub r_d: Point,
    pub v: f64,
    pub g: (f64, f64),
    pub lambda: f64,
    pub history: Vec<Iterate>,
    pub termination: Termination,
}

impl OptimizerState {
    /// Writes `k,x_d,y_d,V_A,grad_x,grad_y,lambda` rows.
    pub fn write_trace(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "k,x_d,y_d,V_A,grad_x,grad_y,lambda")?;
        for it in &self.history {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                it.k,
                Num(it.r.x),
                Num(it.r.y),
                Num(it.v),
                Num(it.grad.0),
                Num(it.grad.1),
                Num(it.lambda)
            )?;
        }
        Ok(())
    }

    pub fn save_trace(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_trace(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Largest `lambda' <= lambda` keeping `r + lambda' g` in the region, by
/// bisection along the ray. The accepted point is then still exactly
/// `r + lambda' g`.
fn clip_to_region(region: &Polygon, r: Point, g: Point, lambda: f64) -> f64 {
    if region.contains(r.add(g.scale(lambda))) {
        return lambda;
    }
    let (mut lo, mut hi) = (0.0, lambda);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if region.contains(r.add(g.scale(mid))) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Steepest ascent `r_{k+1} = r_k + λ_k ∇V(r_k)`.
///
/// Each line search tries `λ = initial_step / |∇V|` and shrinks it by
/// `shrink` until the objective strictly increases; trial points outside
/// the region are pulled back along the ray to the boundary. Stops on a
/// small gradient, a failed line search (trial step below `min_step`), or
/// `k_max` iterations.
pub fn ascend<E: Evaluate>(obj: &Objective<E>, start: Point, probe: &ProbeRule, stop: &StoppingRule) -> Result<OptimizerState> {
    let v = stop.validate().into_iter().chain(probe.validate()).collect::<Vec<_>>();
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    if !obj.region.contains(start) {
        return Err(Error::Domain(format!(
            "start ({}, {}) lies outside the search region",
            start.x, start.y
        )));
    }
    let mut r = start;
    let mut v = obj.evaluate(r)?;
    let mut lambda = 0.0;
    let mut history = Vec::new();
    let mut k = 0;
    loop {
        let g = gradient(obj, r, probe)?;
        history.push(Iterate {
            k,
            r,
            v,
            grad: g,
            lambda,
        });
        let gv = Point::new(g.0, g.1);
        let norm = gv.norm();
        let done = |termination| OptimizerState {
            k,
            r_d: r,
            v,
            g,
            lambda,
            history: history.clone(),
            termination,
        };
        if norm < stop.tol || norm == 0.0 {
            return Ok(done(Termination::SmallGradient));
        }
        if k >= stop.k_max {
            return Ok(done(Termination::MaxIterations));
        }
        let mut trial = stop.initial_step / norm;
        let mut accepted = None;
        while trial * norm >= stop.min_step {
            let lam = clip_to_region(&obj.region, r, gv, trial);
            if lam * norm >= stop.min_step {
                let cand = r.add(gv.scale(lam));
                let vc = obj.evaluate(cand)?;
                if vc > v {
                    accepted = Some((lam, cand, vc));
                    break;
                }
            }
            trial *= stop.shrink;
        }
        match accepted {
            Some((lam, cand, vc)) => {
                r = cand;
                v = vc;
                lambda = lam;
                k += 1;
            }
            None => return Ok(done(Termination::LineSearchFailed)),
        }
    }
}

/// Runs [`ascend`] from every start; returns all runs and the index of the
/// best terminal value (first on ties).
pub fn multi_start<E: Evaluate>(
    obj: &Objective<E>,
    starts: &[Point],
    probe: &ProbeRule,
    stop: &StoppingRule,
) -> Result<(Vec<OptimizerState>, usize)> {
    if starts.is_empty() {
        return Err(Error::Config("no optimizer starts given".into()));
    }
    let runs = starts
        .iter()
        .map(|&s| ascend(obj, s, probe, stop))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.v > runs[best].v {
            best = i;
        }
    }
    Ok((runs, best))
}

/// One lattice sample of the objective surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSample {
    pub i: i64,
    pub j: i64,
    pub x: f64,
    pub y: f64,
    /// `Ok(V_A)` or the error message.
    pub value: std::result::Result<f64, String>,
}

/// Evaluates the objective on the lattice `anchor + (i sx, j sy)` restricted
/// to `region`. Samples run in parallel; the output is row-major (south to
/// north, west to east) regardless of scheduling. Failed samples are
/// recorded, not fatal.
pub fn map_objective<E: Evaluate>(
    obj: &Objective<E>,
    region: &Polygon,
    spacing: (f64, f64),
    anchor: Option<Point>,
) -> Result<Vec<SurfaceSample>> {
    if !(spacing.0 > 0.0 && spacing.1 > 0.0) {
        return Err(Error::Domain(format!("map spacing {spacing:?} must be positive")));
    }
    let (lo, hi) = region.bbox();
    let a = anchor.unwrap_or(lo);
    let range = |lo: f64, hi: f64, a: f64, s: f64| {
        let first = ((lo - a) / s).ceil() as i64;
        let last = ((hi - a) / s).floor() as i64;
        first..=last
    };
    let mut points = Vec::new();
    for j in range(lo.y, hi.y, a.y, spacing.1) {
        for i in range(lo.x, hi.x, a.x, spacing.0) {
            let p = Point::new(a.x + i as f64 * spacing.0, a.y + j as f64 * spacing.1);
            if region.contains(p) {
                points.push((i, j, p));
            }
        }
    }
    Ok(points
        .into_par_iter()
        .map(|(i, j, p)| SurfaceSample {
            i,
            j,
            x: p.x,
            y: p.y,
            value: obj.evaluate(p).map_err(|e| e.to_string()),
        })
        .collect())
}

/// Writes `x_d,y_d,V_A,status` rows; failed samples have an empty value and
/// the error (quotes and commas stripped) as status.
pub fn write_surface(samples: &[SurfaceSample], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "x_d,y_d,V_A,status")?;
    for s in samples {
        match &s.value {
            Ok(v) => writeln!(w, "{},{},{},ok", Num(s.x), Num(s.y), Num(*v))?,
            Err(e) => {
                let msg: String = e.chars().map(|c| if c == ',' || c == '\n' || c == '"' { ' ' } else { c }).collect();
                writeln!(w, "{},{},,error: {}", Num(s.x), Num(s.y), msg)?
            }
        }
    }
    Ok(())
}

pub fn save_surface(samples: &[SurfaceSample], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_surface(samples, &mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests;
