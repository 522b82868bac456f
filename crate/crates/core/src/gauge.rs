//! Discharge through a cross-section and its time integral over the flood
//! window (the objective `V_A`).
//!
//! A section `AB` is rasterized into the cell faces separating cells whose
//! centers lie on opposite sides of it. Each face carries an axis-aligned
//! unit normal pointing to the section's positive side, so the faces form a
//! staircase that water must cross to get from one side to the other.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::num::Num;
use crate::solver::{FaceDischarge, Observer, StepReport};
use crate::types::{FlowState, SimGrid};

/// Which side of the directed segment `A -> B` counts as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Orientation of a gauge face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceAxis {
    /// Face between cells `(i - 1, j)` and `(i, j)`; normal along x.
    X,
    /// Face between cells `(i, j - 1)` and `(i, j)`; normal along y.
    Y,
}

/// One face of the rasterized section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeFace {
    pub axis: FaceAxis,
    /// Index of the cell on the high side of the face.
    pub i: usize,
    pub j: usize,
    /// Face length in meters.
    pub length: f64,
    /// Unit normal toward the positive side.
    pub normal: (f64, f64),
    /// Position of the crossing along `AB`, in `[0, 1)`.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeLine {
    pub a: Point,
    pub b: Point,
    pub side: Side,
    /// Faces ordered from `A` to `B`.
    pub faces: Vec<GaugeFace>,
}

impl GaugeLine {
    /// Sum of face lengths. Equals `|AB|` for axis-aligned sections; a
    /// diagonal staircase is longer by up to a factor `√2`.
    pub fn total_length(&self) -> f64 {
        self.faces.iter().map(|f| f.length).sum()
    }

    /// The same section with the positive side swapped.
    pub fn flipped(&self) -> Self {
        let mut out = self.clone();
        out.side = self.side.flip();
        for f in &mut out.faces {
            f.normal = (-f.normal.0, -f.normal.1);
        }
        out
    }
}

/// Rasterizes the section `AB` on `grid`.
///
/// A face is part of the section when the segment joining the centers of
/// its two cells crosses `AB` at a parameter `tau` in `[0, 1)`. The
/// half-open interval makes sections sharing an endpoint count each face
/// once, so a closed polygon of sections encloses its cells exactly.
pub fn rasterize_gauge(grid: &SimGrid, a: Point, b: Point, side: Side) -> Result<GaugeLine> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Geometry("gauge endpoints must be finite".into()));
    }
    if a == b {
        return Err(Error::Geometry(format!("gauge endpoints coincide at ({}, {})", a.x, a.y)));
    }
    if !grid.contains(a) || !grid.contains(b) {
        return Err(Error::Geometry(format!(
            "gauge ({}, {}) - ({}, {}) leaves the grid",
            a.x, a.y, b.x, b.y
        )));
    }
    let d = b.sub(a);
    // left normal of A -> B
    let left = Point::new(-d.y, d.x);
    let pos = match side {
        Side::Left => left,
        Side::Right => left.scale(-1.0),
    };
    let mut faces = Vec::new();
    // crossing of the center-to-center segment p -> q with AB
    let crossing = |p: Point, q: Point| -> Option<f64> {
        let sp = d.cross(p.sub(a));
        let sq = d.cross(q.sub(a));
        if (sp > 0.0) == (sq > 0.0) || sp == sq {
            return None;
        }
        let s = sp / (sp - sq);
        let x = p.add(q.sub(p).scale(s));
        let tau = x.sub(a).dot(d) / d.dot(d);
        (0.0..1.0).contains(&tau).then_some(tau)
    };
    for j in 0..grid.ny {
        for i in 1..grid.nx {
            if let Some(tau) = crossing(grid.center(i - 1, j), grid.center(i, j)) {
                faces.push(GaugeFace {
                    axis: FaceAxis::X,
                    i,
                    j,
                    length: grid.dy,
                    normal: (pos.x.signum(), 0.0),
                    tau,
                });
            }
        }
    }
    for j in 1..grid.ny {
        for i in 0..grid.nx {
            if let Some(tau) = crossing(grid.center(i, j - 1), grid.center(i, j)) {
                faces.push(GaugeFace {
                    axis: FaceAxis::Y,
                    i,
                    j,
                    length: grid.dx,
                    normal: (0.0, pos.y.signum()),
                    tau,
                });
            }
        }
    }
    if faces.is_empty() {
        return Err(Error::Geometry("gauge section crosses no cell face".into()));
    }
    faces.sort_by(|p, q| p.tau.total_cmp(&q.tau).then((p.axis as u8).cmp(&(q.axis as u8))));
    Ok(GaugeLine { a, b, side, faces })
}

/// The two cells on either side of a face: (low, high).
fn face_cells(grid: &SimGrid, f: &GaugeFace) -> (usize, usize) {
    match f.axis {
        FaceAxis::X => (grid.idx(f.i - 1, f.j), grid.idx(f.i, f.j)),
        FaceAxis::Y => (grid.idx(f.i, f.j - 1), grid.idx(f.i, f.j)),
    }
}

/// Discharge through the section (m³/s) from cell values: per face, the mean
/// of the two adjacent cells' momentum projected on the normal, times the
/// face length. Dry cells contribute nothing.
pub fn instantaneous_discharge(grid: &SimGrid, state: &FlowState, gl: &GaugeLine) -> f64 {
    let mut q = 0.0;
    for f in &gl.faces {
        let (lo, hi) = face_cells(grid, f);
        let flux = |c: usize| {
            if state.h[c] > 0.0 {
                state.hu[c] * f.normal.0 + state.hv[c] * f.normal.1
            } else {
                0.0
            }
        };
        q += 0.5 * (flux(lo) + flux(hi)) * f.length;
    }
    q
}

/// Discharge through the section (m³/s) from the solver's face discharges
/// of one step. This is the flux the solver actually moved, so volumes
/// tallied from it balance cell volume changes exactly.
pub fn face_discharge_through(gl: &GaugeLine, faces: &FaceDischarge) -> f64 {
    let mut q = 0.0;
    for f in &gl.faces {
        q += match f.axis {
            FaceAxis::X => faces.x_face(f.i, f.j) * f.normal.0,
            FaceAxis::Y => faces.y_face(f.i, f.j) * f.normal.1,
        };
    }
    q
}

/// One recorded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeSample {
    /// End of the step.
    pub t: f64,
    pub dt: f64,
    /// Discharge over the step, m³/s.
    pub q: f64,
    /// Volume accumulated inside the window up to `t`, m³.
    pub cumulative: f64,
}

/// Per-step discharges and the volume accumulated over the flood window.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeRecord {
    pub window: (f64, f64),
    pub samples: Vec<GaugeSample>,
    pub volume: f64,
}

impl GaugeRecord {
    pub fn new(window: (f64, f64)) -> Self {
        Self {
            window,
            samples: Vec::new(),
            volume: 0.0,
        }
    }

    /// Records discharge `q` over `[t0, t0 + dt]`; the part of the step
    /// inside the window contributes `q dt` weighted by its inside fraction.
    pub fn push(&mut self, t0: f64, dt: f64, q: f64) {
        let t1 = t0 + dt;
        let (ws, we) = self.window;
        let inside = (t1.min(we) - t0.max(ws)).max(0.0);
        if inside > 0.0 {
            let weight = if inside >= dt { 1.0 } else { inside / dt };
            self.volume += q * dt * weight;
        }
        self.samples.push(GaugeSample {
            t: t1,
            dt,
            q,
            cumulative: self.volume,
        });
    }

    /// Writes `t_s,q_m3s,cumulative_m3` rows, floats in shortest
    /// round-trip form.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "t_s,q_m3s,cumulative_m3")?;
        for s in &self.samples {
            writeln!(w, "{},{},{}", Num(s.t), Num(s.q), Num(s.cumulative))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Adds the step `[state.t, state.t + dt]` to `record`, using the
/// instantaneous discharge of `state` as a left-point value.
pub fn accumulate(record: &mut GaugeRecord, grid: &SimGrid, state: &FlowState, gl: &GaugeLine, dt: f64) {
    let q = instantaneous_discharge(grid, state, gl);
    record.push(state.t, dt, q);
}

/// Solver observer that records a gauge from the solver's face fluxes.
#[derive(Debug, Clone)]
pub struct GaugeObserver<'a> {
    pub line: &'a GaugeLine,
    pub record: GaugeRecord,
}

impl<'a> GaugeObserver<'a> {
    pub fn new(line: &'a GaugeLine, window: (f64, f64)) -> Self {
        Self {
            line,
            record: GaugeRecord::new(window),
        }
    }
}

impl Observer for GaugeObserver<'_> {
    fn observe(&mut self, _grid: &SimGrid, _state: &FlowState, report: &StepReport, faces: &FaceDischarge) {
        let q = face_discharge_through(self.line, faces);
        self.record.push(report.t_start, report.dt_used, q);
    }
}
