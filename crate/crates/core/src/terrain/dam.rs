//! Parametric dam and its rasterization into the bed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{closest_on_segment, Point};
use crate::types::SimGrid;

/// River axis used to orient dams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Centerline {
    pub points: Vec<Point>,
}

impl Centerline {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Geometry("centerline needs at least 2 points".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Geometry("centerline points must be finite".into()));
        }
        if let Some(k) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::Geometry(format!("centerline points {k} and {} coincide", k + 1)));
        }
        Ok(Self { points })
    }

    /// Unit tangent of the segment nearest to `p`.
    pub fn tangent_near(&self, p: Point) -> Point {
        let mut best = (f64::INFINITY, Point::new(1.0, 0.0));
        for w in self.points.windows(2) {
            let (q, _) = closest_on_segment(p, w[0], w[1]);
            let d = q.dist(p);
            if d < best.0 {
                let t = w[1].sub(w[0]);
                best = (d, t.scale(1.0 / t.norm()));
            }
        }
        best.1
    }
}

/// A straight dam of length `length` centered at `(x_d, y_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamSpec {
    pub x_d: f64,
    pub y_d: f64,
    #[serde(rename = "length_m")]
    pub length: f64,
    /// Height of the crest above the highest original bed under the dam.
    #[serde(rename = "crest_m")]
    pub crest: f64,
    /// Direction of the dam axis; when absent the axis is perpendicular to
    /// the nearest centerline segment.
    #[serde(default)]
    pub orientation: Option<(f64, f64)>,
}

impl DamSpec {
    pub fn new(x_d: f64, y_d: f64, length: f64, crest: f64) -> Self {
        Self {
            x_d,
            y_d,
            length,
            crest,
            orientation: None,
        }
    }

    pub fn at(self, center: Point) -> Self {
        Self {
            x_d: center.x,
            y_d: center.y,
            ..self
        }
    }

    pub fn center(&self) -> Point {
        Point::new(self.x_d, self.y_d)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.length > 0.0 && self.length.is_finite()) {
            out.push(format!("dam.length_m = {} (must be > 0)", self.length));
        }
        if !(self.crest > 0.0 && self.crest.is_finite()) {
            out.push(format!("dam.crest_m = {} (must be > 0)", self.crest));
        }
        if !self.center().is_finite() {
            out.push("dam center must be finite".into());
        }
        if let Some((x, y)) = self.orientation {
            if !(x.is_finite() && y.is_finite()) || x.hypot(y) == 0.0 {
                out.push("dam.orientation must be a finite non-zero vector".into());
            }
        }
        out
    }

    /// Unit vector along the dam axis.
    pub fn axis(&self, centerline: &Centerline) -> Point {
        match self.orientation {
            Some((x, y)) => {
                let n = x.hypot(y);
                Point::new(x / n, y / n)
            }
            None => {
                let t = centerline.tangent_near(self.center());
                Point::new(-t.y, t.x)
            }
        }
    }

    /// Endpoints of the dam axis.
    pub fn endpoints(&self, centerline: &Centerline) -> (Point, Point) {
        let half = self.axis(centerline).scale(0.5 * self.length);
        (self.center().sub(half), self.center().add(half))
    }
}

/// Cells whose centers lie within half a cell diagonal of the dam axis, in
/// row-major order.
pub fn dam_footprint(grid: &SimGrid, dam: &DamSpec, centerline: &Centerline) -> Result<Vec<usize>> {
    let v = dam.validate();
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let (a, b) = dam.endpoints(centerline);
    if !grid.contains(a) || !grid.contains(b) {
        return Err(Error::Geometry(format!(
            "dam ({}, {}) - ({}, {}) extends outside the grid",
            a.x, a.y, b.x, b.y
        )));
    }
    let reach = 0.5 * grid.dx.hypot(grid.dy);
    let (lo, hi) = (
        Point::new(a.x.min(b.x) - reach, a.y.min(b.y) - reach),
        Point::new(a.x.max(b.x) + reach, a.y.max(b.y) + reach),
    );
    let col = |x: f64| ((x - grid.origin_x) / grid.dx - 0.5).clamp(0.0, (grid.nx - 1) as f64);
    let row = |y: f64| ((y - grid.origin_y) / grid.dy - 0.5).clamp(0.0, (grid.ny - 1) as f64);
    let (i0, i1) = (col(lo.x).floor() as usize, col(hi.x).ceil() as usize);
    let (j0, j1) = (row(lo.y).floor() as usize, row(hi.y).ceil() as usize);
    let mut cells = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let p = grid.center(i, j);
            let (q, _) = closest_on_segment(p, a, b);
            if q.dist(p) <= reach {
                cells.push(grid.idx(i, j));
            }
        }
    }
    if cells.is_empty() {
        // a dam shorter than a cell still occupies the cell holding its center
        let (i, j) = grid
            .locate(dam.center())
            .ok_or_else(|| Error::Geometry("dam center outside the grid".into()))?;
        cells.push(grid.idx(i, j));
    }
    Ok(cells)
}

/// Returns a copy of `grid` with the dam footprint raised to the highest
/// original bed under the footprint plus the crest height. Beds are never
/// lowered.
pub fn rasterize_dam(grid: &SimGrid, dam: &DamSpec, centerline: &Centerline) -> Result<SimGrid> {
    let cells = dam_footprint(grid, dam, centerline)?;
    let top = cells.iter().map(|&c| grid.bed[c]).fold(f64::NEG_INFINITY, f64::max) + dam.crest;
    let mut out = grid.clone();
    for c in cells {
        out.bed[c] = out.bed[c].max(top);
    }
    Ok(out)
}

/// True when `cells` form one 8-connected group.
pub fn is_eight_connected(grid: &SimGrid, cells: &[usize]) -> bool {
    if cells.is_empty() {
        return false;
    }
    let set: std::collections::HashSet<usize> = cells.iter().copied().collect();
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![cells[0]];
    seen.insert(cells[0]);
    while let Some(c) = stack.pop() {
        let (i, j) = ((c % grid.nx) as i64, (c / grid.nx) as i64);
        for dj in -1..=1 {
            for di in -1..=1 {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= grid.nx as i64 || nj >= grid.ny as i64 {
                    continue;
                }
                let n = grid.idx(ni as usize, nj as usize);
                if set.contains(&n) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
    }
    seen.len() == set.len()
}
